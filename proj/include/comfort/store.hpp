#pragma once

/**
 * @file store.hpp
 * @brief Node registry and in-memory telemetry time series.
 *
 * Per-node append-only sample vectors with strictly increasing
 * timestamps, a dropout sweep over last-seen times, and whole-store
 * snapshot/restore to a single checksummed JSON file. All writes are
 * serialized through one mutex; queries copy a consistent range out.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/occupant.hpp"  // rng::fnv1a
#include "comfort/samples.hpp"
#include "comfort/wire.hpp"

namespace comfort {

enum class NodeStatus { Active, Dropped };

constexpr std::string_view to_string(NodeStatus s) {
  return s == NodeStatus::Active ? "Active" : "Dropped";
}

struct NodeRecord {
  NodeId node_id;
  wire::NodeKind kind = wire::NodeKind::Wearable;
  double registered_at = 0.0;
  double last_seen = 0.0;
  NodeStatus status = NodeStatus::Active;
  std::uint64_t accepted = 0;  // count of accepted frames (ack seq)
};

class TelemetryStore {
 public:
  /// Idempotent for an existing (node_id, kind) pair.
  /// @throws Error{DuplicateKindMismatch} same id, different kind
  NodeRecord register_node(const NodeId& id, wire::NodeKind kind, double now) {
    if (!valid_node_id(id)) throw Error(Errc::malformed_frame, "bad node id");
    std::lock_guard lk(mu_);
    auto it = nodes_.find(id);
    if (it != nodes_.end()) {
      if (it->second.record.kind != kind)
        throw Error(Errc::kind_mismatch, id);
      return it->second.record;
    }
    Series s;
    s.record = NodeRecord{id, kind, now, now, NodeStatus::Active, 0};
    return nodes_.emplace(id, std::move(s)).first->second.record;
  }

  /// Append one sample from an accepted data frame; returns the new seq.
  /// Accepting a frame reinstates a Dropped node.
  /// @throws Error{UnknownNode}, Error{DuplicateKindMismatch},
  ///         Error{StaleTimestamp} (non-monotone timestamp)
  std::uint64_t append(const wire::DataFrame& frame) {
    std::lock_guard lk(mu_);
    auto it = nodes_.find(frame.node);
    if (it == nodes_.end()) throw Error(Errc::unknown_node, frame.node);
    Series& s = it->second;
    const bool is_physio =
        std::holds_alternative<PhysioSample>(frame.payload);
    if (is_physio != (s.record.kind == wire::NodeKind::Wearable))
      throw Error(Errc::kind_mismatch, frame.node);
    if (s.record.accepted > 0 && frame.timestamp <= s.last_timestamp)
      throw Error(Errc::stale_timestamp, frame.node);

    if (is_physio)
      s.physio.push_back(std::get<PhysioSample>(frame.payload));
    else
      s.env.push_back(std::get<EnvSample>(frame.payload));
    s.last_timestamp = frame.timestamp;
    s.record.last_seen = frame.timestamp;
    s.record.status = NodeStatus::Active;
    return ++s.record.accepted;
  }

  std::optional<NodeRecord> node(const NodeId& id) const {
    std::lock_guard lk(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return std::nullopt;
    return it->second.record;
  }

  std::vector<NodeRecord> nodes() const {
    std::lock_guard lk(mu_);
    std::vector<NodeRecord> out;
    out.reserve(nodes_.size());
    for (const auto& [id, s] : nodes_) out.push_back(s.record);
    return out;
  }

  /// Samples with t_from <= timestamp <= t_to, in timestamp order.
  /// @throws Error{UnknownNode}
  std::vector<PhysioSample> query_physio(const NodeId& id, double t_from,
                                         double t_to) const {
    std::lock_guard lk(mu_);
    std::vector<PhysioSample> out;
    for (const auto& s : series(id, t_from, t_to).physio)
      if (s.timestamp >= t_from && s.timestamp <= t_to) out.push_back(s);
    return out;
  }

  std::vector<EnvSample> query_env(const NodeId& id, double t_from,
                                   double t_to) const {
    std::lock_guard lk(mu_);
    std::vector<EnvSample> out;
    for (const auto& s : series(id, t_from, t_to).env)
      if (s.timestamp >= t_from && s.timestamp <= t_to) out.push_back(s);
    return out;
  }

  std::size_t sample_count(const NodeId& id) const {
    std::lock_guard lk(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(Errc::unknown_node, id);
    return it->second.physio.size() + it->second.env.size();
  }

  std::size_t total_samples() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [id, s] : nodes_) n += s.physio.size() + s.env.size();
    return n;
  }

  /// Marks nodes silent for longer than timeout_s as Dropped; returns the
  /// nodes that changed state in this sweep.
  std::vector<NodeId> sweep_dropouts(double now, double timeout_s) {
    std::lock_guard lk(mu_);
    std::vector<NodeId> dropped;
    for (auto& [id, s] : nodes_) {
      if (s.record.status == NodeStatus::Active &&
          now - s.record.last_seen > timeout_s) {
        s.record.status = NodeStatus::Dropped;
        dropped.push_back(id);
      }
    }
    return dropped;
  }

  void snapshot(const std::filesystem::path& path) const {
    nlohmann::json payload;
    {
      std::lock_guard lk(mu_);
      payload = to_payload_json();
    }
    const std::string body = payload.dump();
    nlohmann::json doc{{"schema", "telemetry-store/1"},
                       {"checksum", checksum_hex(body)},
                       {"payload", std::move(payload)}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
  }

  /// Replace the store contents from a snapshot file.
  /// @throws Error{CorruptSnapshot} on parse or checksum failure
  void restore(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw Error(Errc::corrupt_snapshot, "unparseable snapshot");
    try {
      if (doc.at("schema").get<std::string>() != "telemetry-store/1")
        throw Error(Errc::corrupt_snapshot, "unknown snapshot schema");
      const std::string body = doc.at("payload").dump();
      if (checksum_hex(body) != doc.at("checksum").get<std::string>())
        throw Error(Errc::corrupt_snapshot, "checksum mismatch");
      from_payload_json(doc.at("payload"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::corrupt_snapshot, e.what());
    }
  }

 private:
  struct Series {
    NodeRecord record;
    double last_timestamp = 0.0;
    std::vector<PhysioSample> physio;
    std::vector<EnvSample> env;
  };

  // Callers must hold mu_.
  const Series& series(const NodeId& id, double t_from, double t_to) const {
    if (t_from > t_to) throw Error(Errc::invalid_config, "t_from > t_to");
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(Errc::unknown_node, id);
    return it->second;
  }

  static std::string checksum_hex(const std::string& body) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a(body)));
    return buf;
  }

  nlohmann::json to_payload_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, s] : nodes_) {
      nlohmann::json physio = nlohmann::json::array();
      for (const auto& p : s.physio)
        physio.push_back({p.timestamp, p.heart_rate, p.gsr,
                          p.clothing_insulation, p.metabolic_rate});
      nlohmann::json env = nlohmann::json::array();
      for (const auto& e : s.env)
        env.push_back({e.timestamp, e.air_temp, e.mean_radiant_temp,
                       e.rel_humidity, e.air_velocity});
      nodes.push_back({{"node_id", s.record.node_id},
                       {"kind", std::string(to_string(s.record.kind))},
                       {"registered_at", s.record.registered_at},
                       {"last_seen", s.record.last_seen},
                       {"status", std::string(to_string(s.record.status))},
                       {"accepted", s.record.accepted},
                       {"last_timestamp", s.last_timestamp},
                       {"physio", std::move(physio)},
                       {"env", std::move(env)}});
    }
    return nlohmann::json{{"nodes", std::move(nodes)}};
  }

  void from_payload_json(const nlohmann::json& payload) {
    std::map<NodeId, Series> rebuilt;
    for (const auto& n : payload.at("nodes")) {
      Series s;
      s.record.node_id = n.at("node_id").get<std::string>();
      s.record.kind = n.at("kind").get<std::string>() == "wearable"
                          ? wire::NodeKind::Wearable
                          : wire::NodeKind::Environment;
      s.record.registered_at = n.at("registered_at").get<double>();
      s.record.last_seen = n.at("last_seen").get<double>();
      s.record.status = n.at("status").get<std::string>() == "Active"
                            ? NodeStatus::Active
                            : NodeStatus::Dropped;
      s.record.accepted = n.at("accepted").get<std::uint64_t>();
      s.last_timestamp = n.at("last_timestamp").get<double>();
      for (const auto& row : n.at("physio")) {
        PhysioSample p;
        p.occupant_id = s.record.node_id;
        p.timestamp = row.at(0).get<double>();
        p.heart_rate = row.at(1).get<double>();
        p.gsr = row.at(2).get<double>();
        p.clothing_insulation = row.at(3).get<double>();
        p.metabolic_rate = row.at(4).get<double>();
        s.physio.push_back(std::move(p));
      }
      for (const auto& row : n.at("env")) {
        EnvSample e;
        e.timestamp = row.at(0).get<double>();
        e.air_temp = row.at(1).get<double>();
        e.mean_radiant_temp = row.at(2).get<double>();
        e.rel_humidity = row.at(3).get<double>();
        e.air_velocity = row.at(4).get<double>();
        s.env.push_back(e);
      }
      rebuilt.emplace(s.record.node_id, std::move(s));
    }
    std::lock_guard lk(mu_);
    nodes_ = std::move(rebuilt);
  }

  mutable std::mutex mu_;
  std::map<NodeId, Series> nodes_;  // ordered for stable serialization
};

}  // namespace comfort
