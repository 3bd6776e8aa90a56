#pragma once

/**
 * @file profile.hpp
 * @brief Per-occupant neutral temperatures, the group thermal profile,
 *        and group setpoint selection.
 *
 * The group statistics are the mean of the members' neutral temperatures
 * and their population standard deviation; the admissible setpoint band
 * is mean +/- sigma. The setpoint is the band candidate minimizing the
 * sum of squared predicted TCIs, ties broken toward the mean and then
 * toward the lower temperature.
 */

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/linreg.hpp"
#include "comfort/samples.hpp"

namespace comfort {

/// Maps an air temperature to the features an occupant would present at
/// that temperature. Must be deterministic.
using FeatureFn = std::function<FeatureVector(double)>;

struct OccupantProfile {
  NodeId occupant_id;
  double neutral_temp = 0.0;  // degC where predicted TCI crosses 0
  double sensitivity = 0.0;   // TCI units per degC, > 0
};

struct NeutralEstimate {
  double neutral_temp = 0.0;
  double sensitivity = 0.0;
};

struct GroupThermalProfile {
  std::vector<OccupantProfile> members;
  double t_bar = 0.0;    // mean neutral temperature
  double sigma = 0.0;    // population SD of neutral temperatures
  double band_lo = 0.0;  // t_bar - sigma
  double band_hi = 0.0;  // t_bar + sigma
  std::optional<double> t0;  // selected setpoint, within the band
};

/// Setpoint search result with the per-candidate objective, kept for audit.
struct SetpointSearch {
  double t0 = 0.0;
  std::vector<std::pair<double, double>> objective;  // (candidate, sum tci^2)
};

/**
 * @brief Find the air temperature at which predicted TCI crosses zero.
 *
 * Scans the sweep grid for a sign change, then bisects until
 * |TCI| < 1e-4 or the bracket is narrower than 0.01 degC. Sensitivity is
 * the central difference of predicted TCI at the root (h = 0.1 degC).
 *
 * @throws Error{NoNeutralPoint} when the sweep never crosses zero
 * @throws Error{NonMonotone} on multiple sign changes or a negative
 *         slope at the root
 */
inline NeutralEstimate estimate_neutral_temp(const TciModel& model,
                                             const FeatureFn& features_at,
                                             double t_lo, double t_hi,
                                             double step) {
  if (!(t_lo < t_hi) || !(step > 0.0))
    throw Error(Errc::invalid_config, "bad sweep range");

  const auto tci_at = [&](double t) {
    return predict_tci(model, features_at(t)).value;
  };

  // locate brackets on the grid
  struct Bracket {
    double lo, hi;
  };
  std::vector<Bracket> brackets;
  double prev_t = t_lo;
  double prev_v = tci_at(t_lo);
  if (prev_v == 0.0) brackets.push_back({t_lo, t_lo});
  for (double t = t_lo + step; t < t_hi + step * 0.5; t += step) {
    const double tt = std::min(t, t_hi);
    const double v = tci_at(tt);
    if (v == 0.0)
      brackets.push_back({tt, tt});
    else if (prev_v != 0.0 && prev_v * v < 0.0)
      brackets.push_back({prev_t, tt});
    prev_t = tt;
    prev_v = v;
    if (tt >= t_hi) break;
  }
  if (brackets.empty())
    throw Error(Errc::no_neutral_point, "no TCI sign change in sweep");
  if (brackets.size() > 1)
    throw Error(Errc::non_monotone, "multiple TCI zero crossings in sweep");

  double root;
  auto [lo, hi] = brackets.front();
  if (lo == hi) {
    root = lo;
  } else {
    double flo = tci_at(lo);
    root = 0.5 * (lo + hi);
    while (hi - lo >= 0.01) {
      root = 0.5 * (lo + hi);
      const double fm = tci_at(root);
      if (std::abs(fm) < 1e-4) break;
      if (flo * fm < 0.0) {
        hi = root;
      } else {
        lo = root;
        flo = fm;
      }
    }
  }

  constexpr double h = 0.1;
  const double slope = (tci_at(root + h) - tci_at(root - h)) / (2.0 * h);
  if (!(slope > 0.0))
    throw Error(Errc::non_monotone, "non-positive TCI slope at neutral");
  return NeutralEstimate{root, slope};
}

/**
 * @brief Group statistics over the members' neutral temperatures.
 * @throws Error{EmptyGroup} for an empty member list
 */
inline GroupThermalProfile build_group_profile(
    std::span<const OccupantProfile> members) {
  if (members.empty()) throw Error(Errc::empty_group, "no members");
  GroupThermalProfile g;
  g.members.assign(members.begin(), members.end());
  double sum = 0.0;
  for (const auto& m : members) sum += m.neutral_temp;
  g.t_bar = sum / static_cast<double>(members.size());
  double var = 0.0;
  for (const auto& m : members)
    var += (m.neutral_temp - g.t_bar) * (m.neutral_temp - g.t_bar);
  g.sigma = std::sqrt(var / static_cast<double>(members.size()));
  g.band_lo = g.t_bar - g.sigma;
  g.band_hi = g.t_bar + g.sigma;
  return g;
}

/**
 * @brief Pick the setpoint inside the band minimizing sum of squared TCIs.
 *
 * Evaluates the inclusive grid over [band_lo, band_hi] at grid_step.
 * feature_fns must be ordered like group.members.
 */
inline SetpointSearch select_setpoint(const GroupThermalProfile& group,
                                      const TciModel& model,
                                      std::span<const FeatureFn> feature_fns,
                                      double grid_step = 0.1) {
  if (group.members.empty()) throw Error(Errc::empty_group, "no members");
  if (feature_fns.size() != group.members.size())
    throw std::invalid_argument("one feature fn per member required");
  if (!(grid_step > 0.0))
    throw Error(Errc::invalid_config, "grid_step must be > 0");

  std::vector<double> candidates;
  for (double t = group.band_lo; t <= group.band_hi + 1e-12; t += grid_step)
    candidates.push_back(std::min(t, group.band_hi));
  if (candidates.back() < group.band_hi - 1e-9)
    candidates.push_back(group.band_hi);

  SetpointSearch result;
  result.objective.reserve(candidates.size());
  double best_obj = 0.0, best_dist = 0.0;
  bool first = true;
  for (const double t : candidates) {
    double obj = 0.0;
    for (const auto& fn : feature_fns) {
      const double v = predict_tci(model, fn(t)).value;
      obj += v * v;
    }
    result.objective.emplace_back(t, obj);
    const double dist = std::abs(t - group.t_bar);
    const bool better =
        first || obj < best_obj ||
        (obj == best_obj && (dist < best_dist ||
                             (dist == best_dist && t < result.t0)));
    if (better) {
      result.t0 = t;
      best_obj = obj;
      best_dist = dist;
      first = false;
    }
  }
  return result;
}

inline nlohmann::json group_profile_to_json(
    const GroupThermalProfile& g,
    const std::vector<std::pair<double, double>>* objective_trace = nullptr) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : g.members)
    members.push_back({{"occupant_id", m.occupant_id},
                       {"neutral_temp", m.neutral_temp},
                       {"sensitivity", m.sensitivity}});
  nlohmann::json j{{"members", std::move(members)},
                   {"t_bar", g.t_bar},
                   {"sigma", g.sigma},
                   {"band", {g.band_lo, g.band_hi}}};
  if (g.t0) j["t0"] = *g.t0;
  if (objective_trace) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [t, obj] : *objective_trace)
      trace.push_back({{"temp", t}, {"objective", obj}});
    j["objective_trace"] = std::move(trace);
  }
  return j;
}

}  // namespace comfort
