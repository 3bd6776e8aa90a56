#pragma once

/**
 * @file plant.hpp
 * @brief Single-zone first-order room model with a proportional HVAC
 *        actuator, integrated by explicit Euler.
 *
 * dT/dt = (P - UA (T - T_out)) / C with P = clamp(Kp (sp - T), +/-Pmax).
 * The explicit scheme is contractive toward the equilibrium whenever
 * dt <= C / (Kp + UA); configs are validated against that bound.
 */

#include <algorithm>
#include <cmath>
#include <optional>

#include "comfort/errors.hpp"

namespace comfort {

struct RoomPlant {
  double thermal_capacitance = 2.0e6;  // J/degC
  double loss_coefficient = 80.0;      // W/degC (envelope UA)
  double proportional_gain = 150.0;    // W/degC (HVAC Kp)
  double hvac_max_power = 4000.0;      // W, symmetric heat/cool
  double outdoor_temp = 10.0;          // degC
  double air_temp = 21.0;              // degC (state)
};

inline void validate_plant(const RoomPlant& p) {
  if (!(p.thermal_capacitance > 0.0))
    throw Error(Errc::invalid_config, "thermal_capacitance must be > 0");
  if (!(p.loss_coefficient >= 0.0))
    throw Error(Errc::invalid_config, "loss_coefficient must be >= 0");
  if (!(p.hvac_max_power > 0.0))
    throw Error(Errc::invalid_config, "hvac_max_power must be > 0");
  if (!(p.proportional_gain > 0.0))
    throw Error(Errc::invalid_config, "proportional_gain must be > 0");
}

/// Largest explicit-Euler step that keeps the closed loop contractive.
inline double stability_bound(const RoomPlant& p) {
  return p.thermal_capacitance / (p.proportional_gain + p.loss_coefficient);
}

/// HVAC power demanded at the current state, W (clamped, 0 with no setpoint).
inline double hvac_power(const RoomPlant& p, std::optional<double> setpoint) {
  if (!setpoint) return 0.0;
  const double demand = p.proportional_gain * (*setpoint - p.air_temp);
  return std::clamp(demand, -p.hvac_max_power, p.hvac_max_power);
}

/// Advance one explicit-Euler step of dt seconds.
inline RoomPlant plant_step(RoomPlant p, std::optional<double> setpoint,
                            double dt) {
  if (!(dt > 0.0)) throw Error(Errc::invalid_config, "dt must be > 0");
  const double power = hvac_power(p, setpoint);
  const double loss = p.loss_coefficient * (p.air_temp - p.outdoor_temp);
  p.air_temp += dt / p.thermal_capacitance * (power - loss);
  return p;
}

/// Equilibrium of the un-saturated loop for a fixed setpoint.
inline double unsaturated_fixed_point(const RoomPlant& p, double setpoint) {
  return (p.proportional_gain * setpoint +
          p.loss_coefficient * p.outdoor_temp) /
         (p.proportional_gain + p.loss_coefficient);
}

}  // namespace comfort
