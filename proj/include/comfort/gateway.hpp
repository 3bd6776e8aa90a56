#pragma once

/**
 * @file gateway.hpp
 * @brief Frame ingestion front end and TCP line-protocol server.
 *
 * The Gateway authenticates frames with a shared token, registers nodes,
 * appends samples to a TelemetryStore, and renders one JSON reply per line.
 * A bad frame never takes the connection down; the reply carries an error
 * code and the next line is processed normally.
 */

#include <atomic>
#include <cstring>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/store.hpp"
#include "comfort/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

namespace comfort {

struct GatewayConfig {
  std::string auth_token;
  double dropout_timeout_s = 10.0;
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.auth_token.empty())
      throw Error(Errc::invalid_config, "auth token must not be empty");
    if (!(cfg_.dropout_timeout_s > 0.0))
      throw Error(Errc::invalid_config, "dropout timeout must be positive");
  }

  /// Handle one already-parsed frame; returns the reply document.
  nlohmann::json process(const wire::Frame& frame, double now) {
    try {
      if (const auto* reg = std::get_if<wire::RegisterFrame>(&frame)) {
        check_token(reg->token);
        const NodeRecord rec = store_.register_node(reg->node, reg->kind, now);
        return wire::make_ok(rec.accepted);
      }
      const auto& data = std::get<wire::DataFrame>(frame);
      check_token(data.token);
      return wire::make_ok(store_.append(data));
    } catch (const Error& e) {
      return wire::make_err(e.code());
    }
  }

  /// Handle one raw protocol line (parse + process). Never throws on
  /// malformed input; the defect comes back as an err reply.
  nlohmann::json process_line(const std::string& line, double now) {
    try {
      return process(wire::parse_frame(line), now);
    } catch (const Error& e) {
      return wire::make_err(e.code());
    }
  }

  TelemetryStore& store() { return store_; }
  const TelemetryStore& store() const { return store_; }

  std::vector<PhysioSample> query_physio(const NodeId& id, double t_from,
                                         double t_to) const {
    return store_.query_physio(id, t_from, t_to);
  }
  std::vector<EnvSample> query_env(const NodeId& id, double t_from,
                                   double t_to) const {
    return store_.query_env(id, t_from, t_to);
  }

  std::vector<NodeId> sweep_dropouts(double now) {
    return store_.sweep_dropouts(now, cfg_.dropout_timeout_s);
  }

  void snapshot(const std::filesystem::path& path) const {
    store_.snapshot(path);
  }
  void restore(const std::filesystem::path& path) { store_.restore(path); }

  const GatewayConfig& config() const { return cfg_; }

 private:
  void check_token(const std::string& token) const {
    if (token != cfg_.auth_token) throw Error(Errc::unauthorized);
  }

  GatewayConfig cfg_;
  TelemetryStore store_;
};

/**
 * Blocking-accept TCP server speaking the newline-delimited frame protocol.
 * Each connection gets a reader thread; every received line produces exactly
 * one reply line. Frame timestamps double as the gateway clock ("now"), so
 * replayed traffic behaves identically to live traffic.
 */
class TcpGatewayServer {
 public:
  TcpGatewayServer(Gateway& gateway, std::uint16_t port) : gateway_(gateway) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(Errc::io_error, "socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
        0) {
      ::close(listen_fd_);
      throw Error(Errc::io_error, "bind() failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 64) < 0) {
      ::close(listen_fd_);
      throw Error(Errc::io_error, "listen() failed");
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ~TcpGatewayServer() { stop(); }

  TcpGatewayServer(const TcpGatewayServer&) = delete;
  TcpGatewayServer& operator=(const TcpGatewayServer&) = delete;

  std::uint16_t port() const { return port_; }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    {
      // Kick workers out of recv(); they erase and close their own fd.
      std::lock_guard lk(conn_mu_);
      for (const int fd : conns_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : workers_)
      if (t.joinable()) t.join();
  }

 private:
  void accept_loop() {
    while (!stopping_.load()) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (stopping_.load()) break;
        continue;
      }
      {
        std::lock_guard lk(conn_mu_);
        if (stopping_.load()) {
          ::close(fd);
          break;
        }
        conns_.insert(fd);
      }
      workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
  }

  void release_connection(int fd) {
    {
      std::lock_guard lk(conn_mu_);
      conns_.erase(fd);
    }
    ::close(fd);
  }

  void serve_connection(int fd) {
    std::string buf;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const nlohmann::json reply =
            gateway_.process_line(line, frame_clock(line));
        const std::string out = reply.dump() + "\n";
        if (!send_all(fd, out)) {
          release_connection(fd);
          return;
        }
      }
    }
    release_connection(fd);
  }

  // Pull "t" out of the line when present so the gateway clock follows the
  // data stream; registration frames fall back to the latest seen time.
  double frame_clock(const std::string& line) {
    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_object() && doc.contains("t") && doc["t"].is_number()) {
      const double t = doc["t"].get<double>();
      double prev = latest_time_.load();
      while (t > prev && !latest_time_.compare_exchange_weak(prev, t)) {
      }
      return t;
    }
    return latest_time_.load();
  }

  static bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, 0);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  Gateway& gateway_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<double> latest_time_{0.0};
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::mutex conn_mu_;
  std::set<int> conns_;
};

}  // namespace comfort
