#pragma once

/**
 * @file wire.hpp
 * @brief Telemetry wire protocol: one JSON object per line.
 *
 * Registration: {"v":1,"op":"register","node":"w-01","kind":"wearable","token":"..."}
 * Wearable data: {"v":1,"op":"data","node":"w-01","t":100,"hr":72.0,"gsr":2.1,"clo":0.5,"met":1.2,"token":"..."}
 * Environment data: same with ta/mrt/rh/vel payload keys.
 * Replies: {"status":"ok","seq":N} or {"status":"err","code":"..."}.
 */

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/samples.hpp"

namespace comfort::wire {

inline constexpr int kSchemaVersion = 1;

enum class NodeKind { Wearable, Environment };

constexpr std::string_view to_string(NodeKind k) {
  return k == NodeKind::Wearable ? "wearable" : "environment";
}

struct RegisterFrame {
  NodeId node;
  NodeKind kind;
  std::string token;
};

struct DataFrame {
  NodeId node;
  double timestamp = 0.0;
  std::string token;
  std::variant<PhysioSample, EnvSample> payload;  // occupant_id/timestamp filled
};

using Frame = std::variant<RegisterFrame, DataFrame>;

namespace detail {

inline double num(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw Error(Errc::malformed_frame, std::string("missing number: ") + key);
  return it->get<double>();
}

inline std::string str(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(Errc::malformed_frame, std::string("missing string: ") + key);
  return it->get<std::string>();
}

}  // namespace detail

/// Parse one frame line. Throws Error{MalformedFrame} on anything that is
/// not a well-formed v1 register/data message.
inline Frame parse_frame(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(Errc::malformed_frame, "not a JSON object");
  if (j.value("v", -1) != kSchemaVersion)
    throw Error(Errc::malformed_frame, "unsupported schema version");

  const std::string op = detail::str(j, "op");
  const std::string node = detail::str(j, "node");
  if (!valid_node_id(node)) throw Error(Errc::malformed_frame, "bad node id");
  const std::string token = detail::str(j, "token");

  if (op == "register") {
    const std::string kind = detail::str(j, "kind");
    if (kind == "wearable") return RegisterFrame{node, NodeKind::Wearable, token};
    if (kind == "environment")
      return RegisterFrame{node, NodeKind::Environment, token};
    throw Error(Errc::malformed_frame, "unknown kind: " + kind);
  }
  if (op != "data") throw Error(Errc::malformed_frame, "unknown op: " + op);

  DataFrame f;
  f.node = node;
  f.token = token;
  f.timestamp = detail::num(j, "t");
  if (j.contains("hr")) {
    PhysioSample s;
    s.occupant_id = node;
    s.timestamp = f.timestamp;
    s.heart_rate = detail::num(j, "hr");
    s.gsr = detail::num(j, "gsr");
    s.clothing_insulation = detail::num(j, "clo");
    s.metabolic_rate = detail::num(j, "met");
    if (!physio_in_range(s))
      throw Error(Errc::malformed_frame, "physio values out of range");
    f.payload = s;
  } else if (j.contains("ta")) {
    EnvSample s;
    s.timestamp = f.timestamp;
    s.air_temp = detail::num(j, "ta");
    s.mean_radiant_temp = detail::num(j, "mrt");
    s.rel_humidity = detail::num(j, "rh");
    s.air_velocity = detail::num(j, "vel");
    if (!env_in_range(s))
      throw Error(Errc::malformed_frame, "env values out of range");
    f.payload = s;
  } else {
    throw Error(Errc::malformed_frame, "no payload keys");
  }
  return f;
}

inline std::string make_register(const NodeId& node, NodeKind kind,
                                 const std::string& token) {
  return nlohmann::json{{"v", kSchemaVersion},
                        {"op", "register"},
                        {"node", node},
                        {"kind", std::string(to_string(kind))},
                        {"token", token}}
      .dump();
}

inline std::string make_physio_frame(const PhysioSample& s,
                                     const std::string& token) {
  return nlohmann::json{{"v", kSchemaVersion}, {"op", "data"},
                        {"node", s.occupant_id}, {"t", s.timestamp},
                        {"hr", s.heart_rate},    {"gsr", s.gsr},
                        {"clo", s.clothing_insulation},
                        {"met", s.metabolic_rate},
                        {"token", token}}
      .dump();
}

inline std::string make_env_frame(const NodeId& node, const EnvSample& s,
                                  const std::string& token) {
  return nlohmann::json{{"v", kSchemaVersion}, {"op", "data"},
                        {"node", node},        {"t", s.timestamp},
                        {"ta", s.air_temp},    {"mrt", s.mean_radiant_temp},
                        {"rh", s.rel_humidity},
                        {"vel", s.air_velocity},
                        {"token", token}}
      .dump();
}

inline nlohmann::json make_ok(std::uint64_t seq) {
  return nlohmann::json{{"status", "ok"}, {"seq", seq}};
}

inline nlohmann::json make_err(Errc code) {
  return nlohmann::json{{"status", "err"},
                        {"code", std::string(wire_code(code))}};
}

}  // namespace comfort::wire
