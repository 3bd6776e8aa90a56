#pragma once

/**
 * @file pmv.hpp
 * @brief Fanger heat-balance comfort model (PMV/PPD) and the thermal
 *        comfort index scale.
 *
 * PMV is computed from the six classical inputs with the iterative
 * clothing-surface-temperature solve. PPD is the standard companion
 * metric. TCI shares PMV's -3..+3 scale but is a separate, learned
 * quantity; only TCI is clamped.
 */

#include <algorithm>
#include <cmath>

#include "comfort/errors.hpp"

namespace comfort {

/// Thermal comfort index on the -3 (cold) .. +3 (hot) scale, 0 neutral.
struct Tci {
  double value = 0.0;
};

/// Clamp a raw comfort value onto the TCI scale.
inline Tci clamp_tci(double raw) {
  if (!std::isfinite(raw)) throw Error(Errc::not_finite, "tci");
  return Tci{std::min(3.0, std::max(-3.0, raw))};
}

/// The six PMV inputs. Ranges are validated by compute_pmv.
struct PmvInputs {
  double air_temp;              // degC, [-10, 50]
  double mean_radiant_temp;     // degC, [-10, 50]
  double air_velocity;          // m/s, [0, 5]
  double rel_humidity;          // %, [0, 100]
  double metabolic_rate;        // met, [0.7, 4.0]
  double clothing_insulation;   // clo, [0, 2.0]
};

namespace detail {

inline void check_range(double v, double lo, double hi, const char* field) {
  if (!(v >= lo && v <= hi)) throw Error(Errc::out_of_range, field);
}

inline void validate(const PmvInputs& in) {
  check_range(in.air_temp, -10.0, 50.0, "air_temp");
  check_range(in.mean_radiant_temp, -10.0, 50.0, "mean_radiant_temp");
  check_range(in.air_velocity, 0.0, 5.0, "air_velocity");
  check_range(in.rel_humidity, 0.0, 100.0, "rel_humidity");
  check_range(in.metabolic_rate, 0.7, 4.0, "metabolic_rate");
  check_range(in.clothing_insulation, 0.0, 2.0, "clothing_insulation");
}

}  // namespace detail

/**
 * @brief Predicted Mean Vote (Fanger heat balance).
 *
 * Deterministic: identical inputs give bit-identical results. The
 * clothing surface temperature is solved by a damped fixed point
 * (damping 0.5) to |dt_cl| < 1e-5 degC, at most 150 iterations.
 * The convective coefficient is the max of the natural and forced
 * formulas at each iteration. Output is not clamped.
 *
 * @throws Error{OutOfRange} on an input outside its valid range
 * @throws Error{NonConvergence} if the t_cl iteration does not settle
 */
inline double compute_pmv(const PmvInputs& in) {
  detail::validate(in);

  const double ta = in.air_temp;
  const double tr = in.mean_radiant_temp;
  const double vel = in.air_velocity;
  const double rh = in.rel_humidity;

  // water vapour partial pressure, Pa
  const double pa = rh * 10.0 * std::exp(16.6536 - 4030.183 / (ta + 235.0));

  const double icl = 0.155 * in.clothing_insulation;  // m2K/W
  const double m = in.metabolic_rate * 58.15;         // W/m2
  const double mw = m;                                // external work = 0

  const double fcl = (icl <= 0.078) ? 1.0 + 1.29 * icl : 1.05 + 0.645 * icl;
  const double hcf = 12.1 * std::sqrt(vel);  // forced convection
  const double taa = ta + 273.0;
  const double tra = tr + 273.0;

  // clothing surface temperature, fixed point on t_cl/100
  const double tcla = taa + (35.5 - ta) / (3.5 * icl + 0.1);
  const double p1 = icl * fcl;
  const double p2 = p1 * 3.96;
  const double p3 = p1 * 100.0;
  const double p4 = p1 * taa;
  const double p5 = 308.7 - 0.028 * mw + p2 * std::pow(tra / 100.0, 4);

  double xn = tcla / 100.0;
  double xf = tcla / 50.0;
  double hc = hcf;
  constexpr double kEps = 1e-7;  // 1e-5 degC on the /100 scale
  int iter = 0;
  while (std::abs(xn - xf) > kEps) {
    xf = 0.5 * (xf + xn);
    const double hcn = 2.38 * std::pow(std::abs(100.0 * xf - taa), 0.25);
    hc = std::max(hcf, hcn);
    xn = (p5 + p4 * hc - p2 * std::pow(xf, 4)) / (100.0 + p3 * hc);
    if (++iter > 150) throw Error(Errc::non_convergence, "t_cl iteration");
  }
  const double tcl = 100.0 * xn - 273.0;

  const double hl1 = 3.05e-3 * (5733.0 - 6.99 * mw - pa);       // skin diffusion
  const double hl2 = mw > 58.15 ? 0.42 * (mw - 58.15) : 0.0;    // sweating
  const double hl3 = 1.7e-5 * m * (5867.0 - pa);                // latent respiration
  const double hl4 = 0.0014 * m * (34.0 - ta);                  // dry respiration
  const double hl5 = 3.96 * fcl * (std::pow(xn, 4) - std::pow(tra / 100.0, 4));
  const double hl6 = fcl * hc * (tcl - ta);                     // convection

  const double ts = 0.303 * std::exp(-0.036 * m) + 0.028;
  return ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6);
}

/**
 * @brief Predicted Percentage Dissatisfied for a given PMV.
 *
 * PPD = 100 - 95 exp(-0.03353 pmv^4 - 0.2179 pmv^2), in [5, 100] with
 * the minimum of 5% at neutral.
 */
inline double pmv_to_ppd(double pmv) {
  const double p2 = pmv * pmv;
  return 100.0 - 95.0 * std::exp(-0.03353 * p2 * p2 - 0.2179 * p2);
}

}  // namespace comfort
