#pragma once

/**
 * @file occupant.hpp
 * @brief Synthetic occupant physiology with known ground-truth comfort.
 *
 * Heart rate responds linearly to the distance from the occupant's
 * neutral temperature; skin conductance rises only above it. Noise comes
 * from a counter-based stream keyed by (seed, occupant, time, signal),
 * so samples are reproducible no matter the order they are drawn in.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "comfort/errors.hpp"
#include "comfort/pmv.hpp"
#include "comfort/samples.hpp"

namespace comfort {

namespace rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Uniform in [2^-54, 1): never exactly 0, safe under log().
inline double u01(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw for a fully specified key (Box-Muller).
inline double gaussian(std::uint64_t key) {
  const double u1 = u01(splitmix64(key ^ 0x9E3779B97F4A7C15ull));
  const double u2 = u01(splitmix64(key ^ 0xC2B2AE3D27D4EB4Full));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

struct SyntheticOccupant {
  NodeId occupant_id;
  double true_neutral_temp = 23.0;   // degC
  double true_sensitivity = 0.5;     // TCI/degC, > 0
  double hr_base = 70.0;             // bpm, (40, 100)
  double hr_slope = 2.0;             // bpm/degC
  double gsr_base = 2.0;             // microsiemens
  double gsr_slope = 0.6;            // microsiemens/degC, above neutral only
  double clothing_insulation = 0.5;  // clo
  double metabolic_rate = 1.2;       // met
  double hr_noise_sd = 0.0;
  double gsr_noise_sd = 0.0;
  std::uint64_t rng_seed = 0;
};

inline void validate_occupant(const SyntheticOccupant& o) {
  if (!valid_node_id(o.occupant_id))
    throw Error(Errc::invalid_config, "bad occupant id");
  if (!(o.true_sensitivity > 0.0))
    throw Error(Errc::invalid_config, "true_sensitivity must be > 0");
  if (!(o.hr_base > 40.0 && o.hr_base < 100.0))
    throw Error(Errc::invalid_config, "hr_base outside (40, 100)");
  if (!(o.hr_noise_sd >= 0.0 && o.gsr_noise_sd >= 0.0))
    throw Error(Errc::invalid_config, "noise_sd must be >= 0");
  if (!(o.clothing_insulation >= 0.0 && o.clothing_insulation <= 2.0))
    throw Error(Errc::invalid_config, "clothing_insulation outside [0, 2]");
  if (!(o.metabolic_rate >= 0.7 && o.metabolic_rate <= 4.0))
    throw Error(Errc::invalid_config, "metabolic_rate outside [0.7, 4]");
}

namespace detail {

inline std::uint64_t noise_key(const SyntheticOccupant& o, double t,
                               std::uint64_t signal) {
  const auto tk = static_cast<std::uint64_t>(std::llround(t * 1000.0));
  std::uint64_t k = rng::splitmix64(o.rng_seed);
  k ^= rng::splitmix64(rng::fnv1a(o.occupant_id));
  k ^= rng::splitmix64(tk + 0x165667B19E3779F9ull);
  k ^= rng::splitmix64(signal * 0xFF51AFD7ED558CCDull + 1);
  return k;
}

}  // namespace detail

/// Wearable reading at a given air temperature and time. Values are
/// clamped just inside the physiological validity ranges.
inline PhysioSample sample_occupant(const SyntheticOccupant& o,
                                    double air_temp, double t) {
  const double d = air_temp - o.true_neutral_temp;
  double hr = o.hr_base + o.hr_slope * d;
  double gsr = o.gsr_base + o.gsr_slope * std::max(0.0, d);
  if (o.hr_noise_sd > 0.0)
    hr += o.hr_noise_sd * rng::gaussian(detail::noise_key(o, t, 1));
  if (o.gsr_noise_sd > 0.0)
    gsr += o.gsr_noise_sd * rng::gaussian(detail::noise_key(o, t, 2));

  PhysioSample s;
  s.occupant_id = o.occupant_id;
  s.timestamp = t;
  s.heart_rate = std::clamp(hr, 25.5, 249.5);
  s.gsr = std::max(gsr, 0.01);
  s.clothing_insulation = o.clothing_insulation;
  s.metabolic_rate = o.metabolic_rate;
  return s;
}

/// Ground-truth comfort, the training label generator.
inline Tci true_tci(const SyntheticOccupant& o, double air_temp) {
  return clamp_tci(o.true_sensitivity * (air_temp - o.true_neutral_temp));
}

}  // namespace comfort
