#pragma once

#include <cmath>
#include <string>

#include "comfort/errors.hpp"

namespace comfort {

/// Opaque node/occupant identifier, 1-64 characters.
using NodeId = std::string;

inline bool valid_node_id(const NodeId& id) {
  return !id.empty() && id.size() <= 64;
}

/// One wearable reading. Timestamps are monotone per occupant.
struct PhysioSample {
  NodeId occupant_id;
  double timestamp = 0.0;           // s
  double heart_rate = 0.0;          // bpm, (25, 250)
  double gsr = 0.0;                 // microsiemens, > 0
  double clothing_insulation = 0.0; // clo, [0, 2]
  double metabolic_rate = 0.0;      // met, [0.7, 4]
};

/// One ambient reading from the environment node.
struct EnvSample {
  double timestamp = 0.0;       // s
  double air_temp = 0.0;        // degC, [-10, 50]
  double mean_radiant_temp = 0.0;
  double rel_humidity = 0.0;    // %, [0, 100]
  double air_velocity = 0.0;    // m/s, [0, 5]
};

inline bool physio_in_range(const PhysioSample& s) {
  return std::isfinite(s.timestamp) && s.heart_rate > 25.0 &&
         s.heart_rate < 250.0 && s.gsr > 0.0 && std::isfinite(s.gsr) &&
         s.clothing_insulation >= 0.0 && s.clothing_insulation <= 2.0 &&
         s.metabolic_rate >= 0.7 && s.metabolic_rate <= 4.0;
}

inline bool env_in_range(const EnvSample& s) {
  return std::isfinite(s.timestamp) && s.air_temp >= -10.0 &&
         s.air_temp <= 50.0 && s.mean_radiant_temp >= -10.0 &&
         s.mean_radiant_temp <= 50.0 && s.rel_humidity >= 0.0 &&
         s.rel_humidity <= 100.0 && s.air_velocity >= 0.0 &&
         s.air_velocity <= 5.0;
}

}  // namespace comfort
