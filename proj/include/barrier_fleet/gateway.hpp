#ifndef BARRIER_FLEET_GATEWAY_HPP
#define BARRIER_FLEET_GATEWAY_HPP

/**
 * @file
 * @brief Real-time gateway for a human-driven adversary vessel.
 *
 * One TCP port carries three things, told apart by the first bytes a client
 * sends:
 *  - a WebSocket upgrade request: messages travel as text frames;
 *  - any other HTTP GET: a file from the static directory;
 *  - a `{`: raw newline-delimited JSON in both directions.
 *
 * Messages are the same on both transports (one JSON object per line):
 *
 *     server -> client, after every tick
 *       {"type":"state","t":s,"vehicles":[{"id","x","y","theta","u_thr","u_rud","h_min"}],
 *        "constraints":[{"ego","contact","h"}]}
 *     server -> client, every second
 *       {"type":"heartbeat","t":s}
 *     client -> server
 *       {"type":"cmd","u_thr":m/s,"u_rud":rad/s}
 *
 * A command is held until replaced and takes effect at the next tick. The
 * simulator clamps it like any other input. Unknown message types are
 * ignored; malformed ones are logged and dropped.
 */

#include "barrier_fleet/config.hpp"
#include "barrier_fleet/sim.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace barrier_fleet {

namespace gateway {

std::string state_message(const FleetSim& sim, double t);
std::string heartbeat_message(double t);

enum class Inbound { Command, Ignored, Malformed };

struct Parsed
{
  Inbound kind = Inbound::Ignored;
  ControlInput command{};
  std::string error;
};

Parsed parse_message(const std::string& text);

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(const std::string& key);

/// Unmasked server frame.
std::string websocket_frame(const std::string& payload, std::uint8_t opcode = 0x1);

/// Incremental decoder for (masked or unmasked) client frames. Fragmented
/// messages are reassembled.
class FrameDecoder
{
public:
  struct Message
  {
    std::uint8_t opcode = 0;
    std::string payload;
  };

  /// Appends bytes and returns every message completed by them. Throws
  /// std::runtime_error on a protocol error.
  std::vector<Message> feed(const std::string& bytes);

private:
  std::string buffer_;
  std::string fragments_;
  std::uint8_t fragment_opcode_ = 0;
};

}  // namespace gateway

struct GatewayOptions
{
  int port = 8765;            ///< 0 picks a free port
  std::string bind_address = "127.0.0.1";
  std::string static_dir;     ///< empty: no static files
  double heartbeat_period = 1.0;
};

/// Runs the fleet in wall-clock time with exactly one External vessel.
class GatewayServer
{
public:
  /// Throws ConfigError if the scenario does not have exactly one external
  /// vessel, std::runtime_error if the port cannot be bound.
  GatewayServer(ScenarioConfig config, GatewayOptions options);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  int port() const;
  int external_vessel() const;

  /// Blocks until `stop` becomes true.
  void run(const std::atomic<bool>& stop);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace barrier_fleet

#endif
