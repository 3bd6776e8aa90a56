#pragma once

// Shared plumbing for the test binaries: scratch directories, whole-file
// reads, a blocking line-oriented TCP client, and a deterministic
// synthetic regression dataset.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "comfort/linreg.hpp"
#include "comfort/occupant.hpp"

namespace testutil {

/// Runs fn, which must throw comfort::Error, and hands back the code.
template <typename Fn>
comfort::Errc error_code_of(Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const comfort::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a comfort::Error");
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<std::uint64_t> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto p = base / ("comfort-test-" + std::to_string(::getpid()) +
                             "-" + std::to_string(counter.fetch_add(1)));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path = p;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory");
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p,
                       const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
}

/// Blocking client speaking the newline-delimited protocol on loopback.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
        0) {
      ::close(fd_);
      fd_ = -1;
      throw std::runtime_error("connect() failed");
    }
  }

  ~LineClient() { close(); }

  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  void send_line(const std::string& line) {
    std::string out = line;
    out.push_back('\n');
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = ::send(fd_, out.data() + sent, out.size() - sent, 0);
      if (n <= 0) throw std::runtime_error("send() failed");
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string recv_line() {
    std::size_t pos;
    while ((pos = buf_.find('\n')) == std::string::npos) {
      char chunk[1024];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) throw std::runtime_error("connection closed mid-line");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
    std::string line = buf_.substr(0, pos);
    buf_.erase(0, pos + 1);
    return line;
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

/// Deterministic feature vector with every component varying, drawn from
/// plausible ranges for each signal.
inline comfort::FeatureVector synthetic_features(std::uint64_t seed,
                                                 std::uint64_t row) {
  using comfort::rng::splitmix64;
  using comfort::rng::u01;
  const auto u = [&](std::uint64_t k, double lo, double hi) {
    return lo + (hi - lo) * u01(splitmix64(seed ^ splitmix64(row * 16 + k)));
  };
  return comfort::FeatureVector{
      u(0, 60.0, 90.0),  u(1, 0.0, 3.0),  u(2, 1.0, 4.0),
      u(3, 0.0, 1.0),    u(4, 0.3, 0.8),  u(5, 1.0, 1.4),
      u(6, 16.0, 30.0),  u(7, 0.0, 0.3),  u(8, 30.0, 70.0),
  };
}

inline constexpr comfort::FeatureVector kTrueWeights{
    0.02, 0.01, 0.1, 0.05, 0.2, 0.1, 0.12, 0.3, 0.004};
inline constexpr double kTrueIntercept = -5.0;

/// Labels are an exact affine function of the features and stay strictly
/// inside the comfort scale, so the clamp never binds.
inline std::vector<comfort::LabeledFeatures> linear_dataset(
    std::size_t n, std::uint64_t seed) {
  std::vector<comfort::LabeledFeatures> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = synthetic_features(seed, i);
    double y = kTrueIntercept;
    for (std::size_t k = 0; k < comfort::kFeatureCount; ++k)
      y += kTrueWeights[k] * x[k];
    rows.emplace_back(x, comfort::Tci{y});
  }
  return rows;
}

}  // namespace testutil
