#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

#include "comfort/errors.hpp"
#include "comfort/samples.hpp"

namespace comfort {

/// Fixed 9-feature layout fed to the TCI model. Order matters and is
/// part of the model file format.
inline constexpr std::size_t kFeatureCount = 9;

using FeatureVector = std::array<double, kFeatureCount>;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "hr_mean",  "hr_sd",  "gsr_mean", "gsr_sd",  "clo",
    "met",      "ta_mean", "vel_mean", "rh_mean",
};

inline bool all_finite(const FeatureVector& f) {
  for (double v : f)
    if (!std::isfinite(v)) return false;
  return true;
}

/**
 * @brief Aggregate one occupant's window of samples into a feature vector.
 *
 * Mean and population SD of heart rate and GSR over the window, the
 * latest clothing/metabolic values, and window means of the ambient
 * signals. A single-sample window has SD 0. Both spans hold the samples
 * of one window, all physio samples from the same occupant.
 *
 * @param window_s nominal window length, seconds (> 0)
 * @throws Error{EmptyWindow} if either span is empty
 */
inline FeatureVector extract_features(std::span<const PhysioSample> physio,
                                      std::span<const EnvSample> env,
                                      double window_s) {
  if (physio.empty()) throw Error(Errc::empty_window, "no physio samples");
  if (env.empty()) throw Error(Errc::empty_window, "no env samples");
  if (!(window_s > 0.0)) throw std::invalid_argument("window_s must be > 0");
  for (const auto& s : physio)
    if (s.occupant_id != physio.front().occupant_id)
      throw std::invalid_argument("mixed occupants in one window");

  const double np = static_cast<double>(physio.size());
  double hr_sum = 0.0, gsr_sum = 0.0;
  for (const auto& s : physio) {
    hr_sum += s.heart_rate;
    gsr_sum += s.gsr;
  }
  const double hr_mean = hr_sum / np;
  const double gsr_mean = gsr_sum / np;
  double hr_var = 0.0, gsr_var = 0.0;
  for (const auto& s : physio) {
    hr_var += (s.heart_rate - hr_mean) * (s.heart_rate - hr_mean);
    gsr_var += (s.gsr - gsr_mean) * (s.gsr - gsr_mean);
  }
  hr_var /= np;   // population convention
  gsr_var /= np;

  const double ne = static_cast<double>(env.size());
  double ta_sum = 0.0, vel_sum = 0.0, rh_sum = 0.0;
  for (const auto& s : env) {
    ta_sum += s.air_temp;
    vel_sum += s.air_velocity;
    rh_sum += s.rel_humidity;
  }

  return FeatureVector{hr_mean,
                       std::sqrt(hr_var),
                       gsr_mean,
                       std::sqrt(gsr_var),
                       physio.back().clothing_insulation,
                       physio.back().metabolic_rate,
                       ta_sum / ne,
                       vel_sum / ne,
                       rh_sum / ne};
}

}  // namespace comfort
