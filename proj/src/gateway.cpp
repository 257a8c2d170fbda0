#include "barrier_fleet/gateway.hpp"

#include <openssl/evp.h>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace barrier_fleet {

using nlohmann::json;

namespace gateway {

namespace {

double finite_or_zero(double v)
{
  return std::isfinite(v) ? v : 0.0;
}

}  // namespace

std::string state_message(const FleetSim& sim, double t)
{
  json vehicles = json::array();
  const auto& states = sim.states();
  const auto& ticks = sim.last_tick();
  for (std::size_t i = 0; i < states.size(); ++i) {
    vehicles.push_back({{"id", i},
                        {"x", states[i].x},
                        {"y", states[i].y},
                        {"theta", states[i].theta},
                        {"u_thr", ticks[i].u_applied.u_thr},
                        {"u_rud", ticks[i].u_applied.u_rud},
                        {"h_min", finite_or_zero(ticks[i].min_h)}});
  }
  json constraints = json::array();
  for (const auto& c : sim.constraints()) constraints.push_back({{"ego", c.ego}, {"contact", c.contact}, {"h", c.h}});
  return json{{"type", "state"}, {"t", t}, {"vehicles", vehicles}, {"constraints", constraints}}.dump();
}

std::string heartbeat_message(double t)
{
  return json{{"type", "heartbeat"}, {"t", t}}.dump();
}

Parsed parse_message(const std::string& text)
{
  Parsed out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    out.kind = Inbound::Malformed;
    out.error = e.what();
    return out;
  }
  if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
    out.kind = Inbound::Malformed;
    out.error = "message must be an object with a string 'type'";
    return out;
  }
  if (doc["type"] != "cmd") return out;

  const auto thr = doc.find("u_thr");
  const auto rud = doc.find("u_rud");
  if (thr == doc.end() || rud == doc.end() || !thr->is_number() || !rud->is_number()) {
    out.kind = Inbound::Malformed;
    out.error = "cmd needs numeric u_thr and u_rud";
    return out;
  }
  out.command = {thr->get<double>(), rud->get<double>()};
  if (!std::isfinite(out.command.u_thr) || !std::isfinite(out.command.u_rud)) {
    out.kind = Inbound::Malformed;
    out.error = "cmd values must be finite";
    return out;
  }
  out.kind = Inbound::Command;
  return out;
}

std::string websocket_accept(const std::string& key)
{
  static constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  const std::string joined = key + kGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(joined.data(), joined.size(), digest, &digest_len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 unavailable");
  }
  std::string encoded(4 * ((digest_len + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(encoded.data()), digest, static_cast<int>(digest_len));
  encoded.resize(static_cast<std::size_t>(n));
  return encoded;
}

std::string websocket_frame(const std::string& payload, std::uint8_t opcode)
{
  std::string frame;
  frame.push_back(static_cast<char>(0x80 | (opcode & 0x0f)));
  const std::uint64_t len = payload.size();
  if (len < 126) {
    frame.push_back(static_cast<char>(len));
  } else if (len <= 0xffff) {
    frame.push_back(static_cast<char>(126));
    frame.push_back(static_cast<char>((len >> 8) & 0xff));
    frame.push_back(static_cast<char>(len & 0xff));
  } else {
    frame.push_back(static_cast<char>(127));
    for (int shift = 56; shift >= 0; shift -= 8) frame.push_back(static_cast<char>((len >> shift) & 0xff));
  }
  frame += payload;
  return frame;
}

std::vector<FrameDecoder::Message> FrameDecoder::feed(const std::string& bytes)
{
  static constexpr std::uint64_t kMaxPayload = 1 << 20;
  buffer_ += bytes;
  std::vector<Message> out;
  for (;;) {
    if (buffer_.size() < 2) break;
    const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data());
    const bool fin = (p[0] & 0x80) != 0;
    const std::uint8_t opcode = p[0] & 0x0f;
    const bool masked = (p[1] & 0x80) != 0;
    std::uint64_t len = p[1] & 0x7f;
    std::size_t pos = 2;
    if (len == 126) {
      if (buffer_.size() < 4) break;
      len = (std::uint64_t{p[2]} << 8) | p[3];
      pos = 4;
    } else if (len == 127) {
      if (buffer_.size() < 10) break;
      len = 0;
      for (int k = 0; k < 8; ++k) len = (len << 8) | p[2 + k];
      pos = 10;
    }
    if (len > kMaxPayload) throw std::runtime_error("websocket frame too large");
    const std::size_t mask_pos = pos;
    if (masked) pos += 4;
    if (buffer_.size() < pos + len) break;

    std::string payload = buffer_.substr(pos, static_cast<std::size_t>(len));
    if (masked) {
      for (std::size_t k = 0; k < payload.size(); ++k) payload[k] = static_cast<char>(payload[k] ^ buffer_[mask_pos + k % 4]);
    }
    buffer_.erase(0, pos + static_cast<std::size_t>(len));

    if (opcode >= 0x8) {  // control frames are never fragmented
      if (!fin) throw std::runtime_error("fragmented control frame");
      out.push_back({opcode, std::move(payload)});
      continue;
    }
    if (opcode == 0x0) {
      if (fragment_opcode_ == 0) throw std::runtime_error("continuation without a start frame");
      fragments_ += payload;
    } else {
      if (fragment_opcode_ != 0) throw std::runtime_error("new message inside a fragmented one");
      fragment_opcode_ = opcode;
      fragments_ = std::move(payload);
    }
    if (fragments_.size() > kMaxPayload) throw std::runtime_error("websocket message too large");
    if (fin) {
      out.push_back({fragment_opcode_, std::move(fragments_)});
      fragments_.clear();
      fragment_opcode_ = 0;
    }
  }
  return out;
}

}  // namespace gateway

namespace {

constexpr std::size_t kMaxRequestBytes = 16 * 1024;
constexpr std::size_t kMaxLineBytes = 64 * 1024;
constexpr std::size_t kMaxBacklogBytes = 4 * 1024 * 1024;

void log_line(const std::string& message)
{
  std::cerr << "[gateway] " << message << std::endl;
}

enum class ClientKind { Unknown, WebSocket, Raw, Http };

struct Client
{
  int fd = -1;
  ClientKind kind = ClientKind::Unknown;
  std::string in;
  std::string out;
  gateway::FrameDecoder decoder;
  bool close_after_flush = false;
  bool dead = false;
  std::string peer;
};

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string content_type(const std::filesystem::path& path)
{
  static const std::map<std::string, std::string> types{
      {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"},    {".mjs", "text/javascript"},
      {".css", "text/css"},                  {".json", "application/json"}, {".svg", "image/svg+xml"},
      {".png", "image/png"},                 {".ico", "image/x-icon"},      {".map", "application/json"}};
  const auto it = types.find(path.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

std::string http_response(int status, const std::string& reason, const std::string& type, const std::string& body)
{
  std::ostringstream out;
  out << "HTTP/1.1 " << status << ' ' << reason << "\r\n"
      << "Content-Type: " << type << "\r\n"
      << "Content-Length: " << body.size() << "\r\n"
      << "Connection: close\r\n\r\n"
      << body;
  return out.str();
}

}  // namespace

struct GatewayServer::Impl
{
  ScenarioConfig config;
  GatewayOptions options;
  int listen_fd = -1;
  int bound_port = 0;
  int external = -1;
  std::vector<Client> clients;

  std::unique_ptr<FleetSim> sim;
  int leg_index = 0;
  double leg_cap = 0.0;
  long session_ticks = 0;
  double session_time = 0.0;
  std::optional<ControlInput> pending;
  ControlInput held{};

  void open_socket();
  void start_leg();
  void tick();
  void broadcast(const std::string& message);
  void accept_clients();
  void read_client(Client& c);
  void write_client(Client& c);
  void handle_text(const std::string& text, Client& c);
  void handle_http(Client& c);
  void handle_raw(Client& c);
  void handle_websocket(Client& c, const std::string& bytes);
  void queue(Client& c, const std::string& bytes);
};

GatewayServer::GatewayServer(ScenarioConfig config, GatewayOptions options) : impl_(std::make_unique<Impl>())
{
  impl_->config = std::move(config);
  impl_->options = std::move(options);
  const auto& vessels = impl_->config.scenario.vessels;
  for (std::size_t i = 0; i < vessels.size(); ++i) {
    if (vessels[i].policy != Policy::External) continue;
    if (impl_->external >= 0) throw ConfigError("/vehicles", "serve mode needs exactly one external vessel, found several");
    impl_->external = static_cast<int>(i);
  }
  if (impl_->external < 0) throw ConfigError("/vehicles", "serve mode needs exactly one vessel with policy 'external'");
  impl_->open_socket();
  impl_->start_leg();
}

GatewayServer::~GatewayServer()
{
  for (auto& c : impl_->clients) ::close(c.fd);
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
}

int GatewayServer::port() const
{
  return impl_->bound_port;
}

int GatewayServer::external_vessel() const
{
  return impl_->external;
}

void GatewayServer::Impl::open_socket()
{
  listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.bind_address.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("invalid bind address '" + options.bind_address + "'");
  }
  if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd);
    listen_fd = -1;
    throw std::runtime_error("cannot listen on " + options.bind_address + ":" + std::to_string(options.port) + ": " + why);
  }
  ::fcntl(listen_fd, F_SETFL, ::fcntl(listen_fd, F_GETFL) | O_NONBLOCK);
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port = ntohs(addr.sin_port);
}

void GatewayServer::Impl::start_leg()
{
  const auto& scenario = config.scenario;
  LegPlan plan = spawn_leg(scenario, leg_index);
  if (sim) plan.vessels[static_cast<std::size_t>(external)].pose = sim->states()[static_cast<std::size_t>(external)];
  double longest = 0.0;
  for (std::size_t i = 0; i < plan.vessels.size(); ++i) {
    const Policy p = scenario.vessels[i].policy;
    if (p == Policy::Autonomous || p == Policy::StraightLine) {
      longest = std::max(longest, baseline_traversal(scenario, plan, static_cast<int>(i)).first);
    }
  }
  if (longest <= 0.0) longest = scenario.joust.circle_diameter / std::max(scenario.joust.speed_range[0], 1e-3);
  leg_cap = scenario.joust.timeout_factor * longest;
  sim = std::make_unique<FleetSim>(scenario, std::move(plan));
  ++leg_index;
}

void GatewayServer::Impl::tick()
{
  if (pending) {
    held = *pending;
    pending.reset();
  }
  const int ext = external;
  sim->tick([&](int vessel) -> std::optional<ControlInput> {
    if (vessel == ext) return held;
    return std::nullopt;
  });
  session_time = static_cast<double>(++session_ticks) * config.scenario.joust.dt;
  broadcast(gateway::state_message(*sim, session_time));
  if (sim->all_arrived() || sim->time() >= leg_cap) start_leg();
}

void GatewayServer::Impl::queue(Client& c, const std::string& bytes)
{
  if (c.out.size() + bytes.size() > kMaxBacklogBytes) {
    log_line("dropping slow client " + c.peer);
    c.dead = true;
    return;
  }
  c.out += bytes;
}

void GatewayServer::Impl::broadcast(const std::string& message)
{
  const std::string line = message + "\n";
  const std::string frame = gateway::websocket_frame(line);
  for (auto& c : clients) {
    if (c.dead || c.close_after_flush) continue;
    if (c.kind == ClientKind::Raw) queue(c, line);
    if (c.kind == ClientKind::WebSocket) queue(c, frame);
  }
}

void GatewayServer::Impl::accept_clients()
{
  for (;;) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    const int fd = ::accept(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    if (fd < 0) return;
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    Client c;
    c.fd = fd;
    char ip[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &addr.sin_addr, ip, sizeof ip);
    c.peer = std::string(ip) + ":" + std::to_string(ntohs(addr.sin_port));
    clients.push_back(std::move(c));
  }
}

void GatewayServer::Impl::handle_text(const std::string& text, Client& c)
{
  const std::string body = trim(text);
  if (body.empty()) return;
  const gateway::Parsed parsed = gateway::parse_message(body);
  switch (parsed.kind) {
    case gateway::Inbound::Command:
      pending = parsed.command;
      break;
    case gateway::Inbound::Ignored:
      break;
    case gateway::Inbound::Malformed:
      log_line("malformed message from " + c.peer + ": " + parsed.error);
      break;
  }
}

void GatewayServer::Impl::handle_raw(Client& c)
{
  for (;;) {
    const auto nl = c.in.find('\n');
    if (nl == std::string::npos) break;
    const std::string line = c.in.substr(0, nl);
    c.in.erase(0, nl + 1);
    handle_text(line, c);
  }
  if (c.in.size() > kMaxLineBytes) {
    log_line("line too long from " + c.peer);
    c.dead = true;
  }
}

void GatewayServer::Impl::handle_websocket(Client& c, const std::string& bytes)
{
  std::vector<gateway::FrameDecoder::Message> messages;
  try {
    messages = c.decoder.feed(bytes);
  } catch (const std::exception& e) {
    log_line("websocket error from " + c.peer + ": " + e.what());
    queue(c, gateway::websocket_frame(std::string("\x03\xea", 2), 0x8));
    c.close_after_flush = true;
    return;
  }
  for (const auto& m : messages) {
    switch (m.opcode) {
      case 0x1:
        handle_text(m.payload, c);
        break;
      case 0x8:
        queue(c, gateway::websocket_frame(m.payload.substr(0, 2), 0x8));
        c.close_after_flush = true;
        return;
      case 0x9:
        queue(c, gateway::websocket_frame(m.payload, 0xA));
        break;
      default:
        break;  // binary and pong frames carry nothing for us
    }
  }
}

void GatewayServer::Impl::handle_http(Client& c)
{
  const auto end = c.in.find("\r\n\r\n");
  if (end == std::string::npos) {
    if (c.in.size() > kMaxRequestBytes) c.dead = true;
    return;
  }
  std::istringstream head(c.in.substr(0, end));
  const std::string rest = c.in.substr(end + 4);
  c.in.clear();

  std::string request_line;
  std::getline(head, request_line);
  std::istringstream rl(trim(request_line));
  std::string method, target, version;
  rl >> method >> target >> version;
  std::map<std::string, std::string> headers;
  for (std::string line; std::getline(head, line);) {
    const auto colon = line.find(':');
    if (colon != std::string::npos) headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }

  if (method != "GET") {
    queue(c, http_response(405, "Method Not Allowed", "text/plain", "GET only\n"));
    c.close_after_flush = true;
    return;
  }

  const bool upgrade = lower(headers["upgrade"]) == "websocket" && !headers["sec-websocket-key"].empty();
  if (upgrade) {
    std::ostringstream resp;
    resp << "HTTP/1.1 101 Switching Protocols\r\n"
         << "Upgrade: websocket\r\n"
         << "Connection: Upgrade\r\n"
         << "Sec-WebSocket-Accept: " << gateway::websocket_accept(headers["sec-websocket-key"]) << "\r\n\r\n";
    queue(c, resp.str());
    c.kind = ClientKind::WebSocket;
    if (!rest.empty()) handle_websocket(c, rest);
    return;
  }

  c.kind = ClientKind::Http;
  c.close_after_flush = true;
  std::string path = target.substr(0, target.find('?'));
  if (path.empty() || path.back() == '/') path += "index.html";
  if (options.static_dir.empty() || path.find("..") != std::string::npos) {
    queue(c, http_response(404, "Not Found", "text/plain", "not found\n"));
    return;
  }
  const std::filesystem::path file = std::filesystem::path(options.static_dir) / path.substr(1);
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    queue(c, http_response(404, "Not Found", "text/plain", "not found\n"));
    return;
  }
  std::ostringstream body;
  body << in.rdbuf();
  queue(c, http_response(200, "OK", content_type(file), body.str()));
}

void GatewayServer::Impl::read_client(Client& c)
{
  char buf[8192];
  std::string fresh;
  for (;;) {
    const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
    if (n > 0) {
      fresh.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) c.dead = true;
    else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) c.dead = true;
    break;
  }
  if (fresh.empty() || c.close_after_flush) return;

  if (c.kind == ClientKind::WebSocket) {
    handle_websocket(c, fresh);
    return;
  }
  c.in += fresh;
  if (c.kind == ClientKind::Unknown) {
    const auto first = c.in.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return;
    c.kind = c.in[first] == '{' ? ClientKind::Raw : ClientKind::Http;
    if (c.kind == ClientKind::Raw) log_line("raw client " + c.peer);
  }
  if (c.kind == ClientKind::Raw) handle_raw(c);
  else if (c.kind == ClientKind::Http) {
    c.kind = ClientKind::Unknown;  // decided once the request head is complete
    handle_http(c);
    if (c.kind == ClientKind::Unknown) c.kind = ClientKind::Http;
  }
}

void GatewayServer::Impl::write_client(Client& c)
{
  while (!c.out.empty()) {
    const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
    if (n > 0) {
      c.out.erase(0, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) return;
    c.dead = true;
    return;
  }
  if (c.close_after_flush) c.dead = true;
}

void GatewayServer::run(const std::atomic<bool>& stop)
{
  using clock = std::chrono::steady_clock;
  auto& s = *impl_;
  const auto dt = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(s.config.scenario.joust.dt));
  const auto heartbeat =
      std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(s.options.heartbeat_period));
  auto next_tick = clock::now() + dt;
  auto next_heartbeat = clock::now() + heartbeat;

  while (!stop.load()) {
    const auto now = clock::now();
    if (now >= next_tick) {
      s.tick();
      next_tick += dt;
      if (clock::now() - next_tick > std::chrono::seconds(1)) next_tick = clock::now() + dt;  // fell far behind
    }
    if (now >= next_heartbeat) {
      s.broadcast(gateway::heartbeat_message(s.session_time));
      next_heartbeat += heartbeat;
    }

    std::vector<pollfd> fds;
    fds.push_back({s.listen_fd, POLLIN, 0});
    for (const auto& c : s.clients) {
      fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
    }
    const auto wake = std::min(next_tick, next_heartbeat);
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(wake - clock::now()).count();
    const int timeout = static_cast<int>(std::clamp<long long>(wait, 0, 50));
    if (::poll(fds.data(), fds.size(), timeout) < 0 && errno != EINTR) {
      throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
    }

    if (fds[0].revents & POLLIN) s.accept_clients();
    for (std::size_t k = 1; k < fds.size(); ++k) {
      auto& c = s.clients[k - 1];
      if (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) s.read_client(c);
      if (!c.dead) s.write_client(c);
    }
    for (auto& c : s.clients) {
      if (c.dead) ::close(c.fd);
    }
    std::erase_if(s.clients, [](const Client& c) { return c.dead; });
  }
}

}  // namespace barrier_fleet
