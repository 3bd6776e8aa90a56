#pragma once

/**
 * @file scenario.hpp
 * @brief End-to-end simulation: calibration, closed loop, trace, replay.
 *
 * A scenario runs in two phases. Phase A sweeps the calibration temperature
 * range, samples every occupant at each step, trains the shared TCI model
 * from ground-truth labels, estimates per-occupant neutral temperatures, and
 * selects the group setpoint. Phase B closes the loop: synthetic nodes
 * stream frames through an in-process gateway, the controller evaluates on
 * its cadence, and commands drive the room plant. Everything is keyed off
 * the master seed and fixed iteration orders, so a rerun is byte-identical.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "comfort/controller.hpp"
#include "comfort/dataset.hpp"
#include "comfort/errors.hpp"
#include "comfort/features.hpp"
#include "comfort/gateway.hpp"
#include "comfort/linreg.hpp"
#include "comfort/occupant.hpp"
#include "comfort/plant.hpp"
#include "comfort/pmv.hpp"
#include "comfort/profile.hpp"
#include "comfort/samples.hpp"
#include "comfort/store.hpp"
#include "comfort/wire.hpp"

namespace comfort {

inline constexpr std::string_view kEnvNodeId = "env-01";

struct EnvironmentConfig {
  double rel_humidity = 50.0;  // %
  double air_velocity = 0.1;   // m/s
};

struct CalibrationConfig {
  double sweep_lo = 16.0;      // degC
  double sweep_hi = 30.0;      // degC
  double sweep_step = 0.5;     // degC
  int samples_per_step = 10;
  double ridge_strength = 1e-3;
};

struct ControlConfig {
  double tci_epsilon = 0.5;
  double temp_epsilon = 0.2;       // degC
  double eval_period_s = 60.0;     // controller cadence
  double setpoint_grid_step = 0.1; // degC
};

/// Wearable silence injected for testing dropout handling: frames from
/// `node` are suppressed for timestamps in [from_s, to_s).
struct DropoutWindow {
  NodeId node;
  double from_s = 0.0;
  double to_s = 0.0;
};

struct ScenarioConfig {
  std::vector<SyntheticOccupant> occupants;
  RoomPlant plant;
  double duration_s = 10800.0;  // closed-loop phase length
  double dt_s = 10.0;           // plant integration step
  double node_rate_hz = 1.0;    // frame cadence per node
  std::uint64_t master_seed = 0;
  double initial_air_temp = 28.0;
  EnvironmentConfig environment;
  GatewayConfig gateway{"local-dev-token", 10.0};
  CalibrationConfig calibration;
  ControlConfig control;
  std::vector<DropoutWindow> dropouts;
};

inline std::vector<double> sweep_temperatures(const CalibrationConfig& c) {
  std::vector<double> temps;
  for (double t = c.sweep_lo; t <= c.sweep_hi + 1e-9; t += c.sweep_step)
    temps.push_back(std::min(t, c.sweep_hi));
  return temps;
}

inline void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.occupants.empty())
    throw Error(Errc::invalid_config, "at least one occupant required");
  std::set<NodeId> ids;
  for (const auto& o : cfg.occupants) {
    validate_occupant(o);
    if (!ids.insert(o.occupant_id).second)
      throw Error(Errc::invalid_config,
                  "duplicate occupant id " + o.occupant_id);
    if (o.occupant_id == kEnvNodeId)
      throw Error(Errc::invalid_config,
                  "occupant id collides with the environment node");
  }
  validate_plant(cfg.plant);
  if (!(cfg.dt_s > 0.0)) throw Error(Errc::invalid_config, "dt must be > 0");
  if (!(cfg.duration_s >= cfg.dt_s))
    throw Error(Errc::invalid_config, "duration must be >= dt");
  if (!(cfg.node_rate_hz > 0.0))
    throw Error(Errc::invalid_config, "node_rate must be > 0");
  const double bound = stability_bound(cfg.plant);
  if (cfg.dt_s > bound + 1e-9) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "dt = %.3f s exceeds the explicit-Euler stability bound "
                  "C/(Kp+UA) = %.3f s",
                  cfg.dt_s, bound);
    throw Error(Errc::invalid_config, msg);
  }
  if (!(cfg.initial_air_temp >= -10.0 && cfg.initial_air_temp <= 50.0))
    throw Error(Errc::invalid_config, "initial_air_temp outside [-10, 50]");

  const auto& cal = cfg.calibration;
  if (!(cal.sweep_lo < cal.sweep_hi) || !(cal.sweep_step > 0.0) ||
      cal.sweep_step > cal.sweep_hi - cal.sweep_lo)
    throw Error(Errc::invalid_config, "bad calibration sweep range");
  if (cal.samples_per_step < 1)
    throw Error(Errc::invalid_config, "samples_per_step must be >= 1");
  if (!(cal.ridge_strength >= 0.0))
    throw Error(Errc::invalid_config, "ridge_strength must be >= 0");

  const auto& ctl = cfg.control;
  if (!(ctl.tci_epsilon > 0.0) || !(ctl.temp_epsilon > 0.0) ||
      !(ctl.setpoint_grid_step > 0.0))
    throw Error(Errc::invalid_config, "control tolerances must be positive");
  if (!(ctl.eval_period_s > 0.0))
    throw Error(Errc::invalid_config, "eval_period must be > 0");
  const double ratio = ctl.eval_period_s / cfg.dt_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
    throw Error(Errc::invalid_config,
                "eval_period must be a positive multiple of dt");
  if (ctl.eval_period_s * cfg.node_rate_hz < 1.0)
    throw Error(Errc::invalid_config,
                "eval_period too short for the node rate (empty windows)");

  for (const auto& d : cfg.dropouts) {
    if (!ids.count(d.node))
      throw Error(Errc::invalid_config, "dropout names unknown node " + d.node);
    if (!(d.from_s < d.to_s))
      throw Error(Errc::invalid_config, "dropout window must have from < to");
  }
}

namespace detail {

inline double jnum(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw Error(Errc::invalid_config, std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

inline std::string jstr(const nlohmann::json& j, const char* key,
                        const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string())
    throw Error(Errc::invalid_config, std::string(key) + " must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw Error(Errc::invalid_config, "scenario config must be an object");
  ScenarioConfig cfg;
  try {
    cfg.duration_s = detail::jnum(j, "duration", cfg.duration_s);
    cfg.dt_s = detail::jnum(j, "dt", cfg.dt_s);
    cfg.node_rate_hz = detail::jnum(j, "node_rate", cfg.node_rate_hz);
    if (j.contains("master_seed"))
      cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.initial_air_temp =
        detail::jnum(j, "initial_air_temp", cfg.initial_air_temp);

    if (j.contains("plant")) {
      const auto& p = j.at("plant");
      cfg.plant.thermal_capacitance =
          detail::jnum(p, "thermal_capacitance", cfg.plant.thermal_capacitance);
      cfg.plant.loss_coefficient =
          detail::jnum(p, "loss_coefficient", cfg.plant.loss_coefficient);
      cfg.plant.proportional_gain =
          detail::jnum(p, "proportional_gain", cfg.plant.proportional_gain);
      cfg.plant.hvac_max_power =
          detail::jnum(p, "hvac_max_power", cfg.plant.hvac_max_power);
      cfg.plant.outdoor_temp =
          detail::jnum(p, "outdoor_temp", cfg.plant.outdoor_temp);
    }
    if (j.contains("environment")) {
      const auto& e = j.at("environment");
      cfg.environment.rel_humidity =
          detail::jnum(e, "rel_humidity", cfg.environment.rel_humidity);
      cfg.environment.air_velocity =
          detail::jnum(e, "air_velocity", cfg.environment.air_velocity);
    }
    if (j.contains("gateway")) {
      const auto& g = j.at("gateway");
      cfg.gateway.auth_token = detail::jstr(g, "token", cfg.gateway.auth_token);
      cfg.gateway.dropout_timeout_s =
          detail::jnum(g, "dropout_timeout", cfg.gateway.dropout_timeout_s);
    }
    if (j.contains("calibration")) {
      const auto& c = j.at("calibration");
      cfg.calibration.sweep_lo =
          detail::jnum(c, "sweep_lo", cfg.calibration.sweep_lo);
      cfg.calibration.sweep_hi =
          detail::jnum(c, "sweep_hi", cfg.calibration.sweep_hi);
      cfg.calibration.sweep_step =
          detail::jnum(c, "sweep_step", cfg.calibration.sweep_step);
      cfg.calibration.samples_per_step = static_cast<int>(detail::jnum(
          c, "samples_per_step", cfg.calibration.samples_per_step));
      cfg.calibration.ridge_strength =
          detail::jnum(c, "ridge_strength", cfg.calibration.ridge_strength);
    }
    if (j.contains("control")) {
      const auto& c = j.at("control");
      cfg.control.tci_epsilon =
          detail::jnum(c, "tci_epsilon", cfg.control.tci_epsilon);
      cfg.control.temp_epsilon =
          detail::jnum(c, "temp_epsilon", cfg.control.temp_epsilon);
      cfg.control.eval_period_s =
          detail::jnum(c, "eval_period", cfg.control.eval_period_s);
      cfg.control.setpoint_grid_step = detail::jnum(
          c, "setpoint_grid_step", cfg.control.setpoint_grid_step);
    }
    if (j.contains("occupants")) {
      for (const auto& o : j.at("occupants")) {
        SyntheticOccupant occ;
        occ.occupant_id = detail::jstr(o, "id", "");
        occ.true_neutral_temp =
            detail::jnum(o, "neutral_temp", occ.true_neutral_temp);
        occ.true_sensitivity =
            detail::jnum(o, "sensitivity", occ.true_sensitivity);
        occ.hr_base = detail::jnum(o, "hr_base", occ.hr_base);
        occ.hr_slope = detail::jnum(o, "hr_slope", occ.hr_slope);
        occ.gsr_base = detail::jnum(o, "gsr_base", occ.gsr_base);
        occ.gsr_slope = detail::jnum(o, "gsr_slope", occ.gsr_slope);
        occ.clothing_insulation =
            detail::jnum(o, "clo", occ.clothing_insulation);
        occ.metabolic_rate = detail::jnum(o, "met", occ.metabolic_rate);
        occ.hr_noise_sd = detail::jnum(o, "hr_noise_sd", occ.hr_noise_sd);
        occ.gsr_noise_sd = detail::jnum(o, "gsr_noise_sd", occ.gsr_noise_sd);
        occ.rng_seed =
            o.contains("seed")
                ? o.at("seed").get<std::uint64_t>()
                : rng::splitmix64(cfg.master_seed ^
                                  rng::fnv1a(occ.occupant_id));
        cfg.occupants.push_back(std::move(occ));
      }
    }
    if (j.contains("dropouts")) {
      for (const auto& d : j.at("dropouts")) {
        DropoutWindow w;
        w.node = detail::jstr(d, "node", "");
        w.from_s = detail::jnum(d, "from", 0.0);
        w.to_s = detail::jnum(d, "to", 0.0);
        cfg.dropouts.push_back(std::move(w));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  validate_scenario(cfg);
  return cfg;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::invalid_config, "invalid JSON in " + path.string());
  return scenario_config_from_json(j);
}

/// Piecewise-linear interpolation of feature vectors over observed sweep
/// temperatures, clamped at both ends.
struct FeatureInterp {
  std::vector<double> temps;          // ascending
  std::vector<FeatureVector> values;  // one per temp

  FeatureVector operator()(double t) const {
    if (t <= temps.front()) return values.front();
    if (t >= temps.back()) return values.back();
    const auto it = std::upper_bound(temps.begin(), temps.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - temps.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - temps[lo]) / (temps[hi] - temps[lo]);
    FeatureVector out;
    for (std::size_t k = 0; k < kFeatureCount; ++k)
      out[k] = values[lo][k] + w * (values[hi][k] - values[lo][k]);
    return out;
  }
};

struct TraceRow {
  double time = 0.0;
  double air_temp = 0.0;
  std::optional<double> setpoint;
  std::string occupant_id;
  double tci_pred = 0.0;
  double tci_true = 0.0;
  std::string command_reason;  // empty when no command this tick
};

inline constexpr std::string_view kTraceHeader =
    "time,air_temp,setpoint,occupant_id,tci_pred,tci_true,command_reason";

struct ScenarioResult {
  TciModel model;
  std::vector<OccupantProfile> profiles;  // estimated, config order
  GroupThermalProfile initial_group;
  SetpointSearch initial_search;
  std::vector<DatasetRow> calibration_rows;
  std::size_t train_pairs = 0;
  std::vector<TraceRow> trace;
  std::vector<SetpointCommand> commands;
  std::vector<nlohmann::json> audit;
  std::map<std::string, double> true_neutral_temps;
  double phase_b_start_s = 0.0;
  double duration_s = 0.0;
  bool converged = false;
  std::optional<double> convergence_time_s;  // offset from phase B start
  double discomfort_integral = 0.0;          // integral of mean true TCI^2
  double mean_true_tci_sq_start = 0.0;
  double mean_true_tci_sq_end = 0.0;
  double final_air_temp = 0.0;
  std::optional<double> final_pmv;
  std::optional<double> final_ppd;
};

namespace detail {

inline double mean_true_tci_sq(const std::vector<SyntheticOccupant>& occs,
                               double air_temp) {
  double s = 0.0;
  for (const auto& o : occs) {
    const double v = true_tci(o, air_temp).value;
    s += v * v;
  }
  return s / static_cast<double>(occs.size());
}

inline bool in_dropout(const std::vector<DropoutWindow>& windows,
                       const NodeId& node, double t) {
  for (const auto& w : windows)
    if (w.node == node && t >= w.from_s - 1e-9 && t < w.to_s - 1e-9)
      return true;
  return false;
}

inline void expect_ok(const nlohmann::json& reply, double t) {
  if (reply.value("status", "") != "ok") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "at t=%.3f: ", t);
    throw Error(Errc::io_error,
                std::string(buf) + "gateway rejected frame: " + reply.dump());
  }
}

}  // namespace detail

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate_scenario(cfg);
  ScenarioResult result;
  result.duration_s = cfg.duration_s;
  for (const auto& o : cfg.occupants)
    result.true_neutral_temps[o.occupant_id] = o.true_neutral_temp;

  // Phase A: calibration sweep, direct sampling.
  const std::vector<double> temps = sweep_temperatures(cfg.calibration);
  const int per_step = cfg.calibration.samples_per_step;
  const double rate = cfg.node_rate_hz;

  std::vector<FeatureInterp> interps(cfg.occupants.size());
  std::vector<LabeledFeatures> pairs;
  for (std::size_t s = 0; s < temps.size(); ++s) {
    const double ta = temps[s];
    for (int k = 0; k < per_step; ++k) {
      const double t =
          (static_cast<double>(s) * per_step + k) / rate;
      for (const auto& o : cfg.occupants) {
        const PhysioSample ps = sample_occupant(o, ta, t);
        DatasetRow row;
        row.occupant_id = o.occupant_id;
        row.timestamp = t;
        row.hr = ps.heart_rate;
        row.gsr = ps.gsr;
        row.clo = ps.clothing_insulation;
        row.met = ps.metabolic_rate;
        row.air_temp = ta;
        row.mrt = ta;
        row.rh = cfg.environment.rel_humidity;
        row.vel = cfg.environment.air_velocity;
        row.tci_label = true_tci(o, ta).value;
        result.calibration_rows.push_back(std::move(row));
      }
    }
  }
  const double window_s = per_step / rate;
  for (std::size_t i = 0; i < cfg.occupants.size(); ++i) {
    const auto& o = cfg.occupants[i];
    for (std::size_t s = 0; s < temps.size(); ++s) {
      const double ta = temps[s];
      std::vector<PhysioSample> physio;
      std::vector<EnvSample> env;
      physio.reserve(per_step);
      env.reserve(per_step);
      for (int k = 0; k < per_step; ++k) {
        const double t = (static_cast<double>(s) * per_step + k) / rate;
        physio.push_back(sample_occupant(o, ta, t));
        EnvSample e;
        e.timestamp = t;
        e.air_temp = ta;
        e.mean_radiant_temp = ta;
        e.rel_humidity = cfg.environment.rel_humidity;
        e.air_velocity = cfg.environment.air_velocity;
        env.push_back(e);
      }
      const FeatureVector f = extract_features(physio, env, window_s);
      interps[i].temps.push_back(ta);
      interps[i].values.push_back(f);
      const double label = true_tci(o, ta).value;
      // Saturated labels flatten the linear fit's zero crossing; keep the
      // feature knot but leave the pair out of training.
      if (std::abs(label) < 3.0 - 1e-12) pairs.emplace_back(f, Tci{label});
    }
  }
  result.train_pairs = pairs.size();
  result.model = train_tci_model(pairs, cfg.calibration.ridge_strength,
                                 cfg.master_seed);

  std::vector<FeatureFn> fns;
  fns.reserve(cfg.occupants.size());
  for (std::size_t i = 0; i < cfg.occupants.size(); ++i) {
    const FeatureInterp& interp = interps[i];
    fns.emplace_back([interp](double t) { return interp(t); });
    const NeutralEstimate est = estimate_neutral_temp(
        result.model, fns.back(), cfg.calibration.sweep_lo,
        cfg.calibration.sweep_hi, cfg.calibration.sweep_step);
    result.profiles.push_back(OccupantProfile{cfg.occupants[i].occupant_id,
                                              est.neutral_temp,
                                              est.sensitivity});
  }
  GroupThermalProfile group = build_group_profile(result.profiles);
  result.initial_search = select_setpoint(group, result.model, fns,
                                          cfg.control.setpoint_grid_step);
  group.t0 = result.initial_search.t0;
  result.initial_group = group;

  // Phase B: closed loop through the in-process gateway.
  const double calib_end =
      static_cast<double>(temps.size()) * per_step / rate;
  const double eval_period = cfg.control.eval_period_s;
  double t_start = eval_period * std::ceil(calib_end / eval_period - 1e-9);
  if (t_start < calib_end - 1e-9) t_start += eval_period;
  result.phase_b_start_s = t_start;

  Gateway gw(cfg.gateway);
  for (const auto& o : cfg.occupants)
    detail::expect_ok(
        gw.process_line(wire::make_register(o.occupant_id,
                                            wire::NodeKind::Wearable,
                                            cfg.gateway.auth_token),
                        t_start),
        t_start);
  detail::expect_ok(
      gw.process_line(wire::make_register(std::string(kEnvNodeId),
                                          wire::NodeKind::Environment,
                                          cfg.gateway.auth_token),
                      t_start),
      t_start);

  RoomPlant plant = cfg.plant;
  plant.air_temp = cfg.initial_air_temp;
  result.mean_true_tci_sq_start =
      detail::mean_true_tci_sq(cfg.occupants, plant.air_temp);

  Controller controller(
      ControlParams{cfg.control.tci_epsilon, cfg.control.temp_epsilon},
      [&result](const nlohmann::json& j) { result.audit.push_back(j); });
  controller.install_group(group);

  std::set<NodeId> members;
  for (const auto& o : cfg.occupants) members.insert(o.occupant_id);
  std::optional<double> setpoint;

  const auto n_steps =
      static_cast<long long>(std::floor(cfg.duration_s / cfg.dt_s + 1e-9));
  const auto steps_per_tick =
      static_cast<long long>(std::llround(eval_period / cfg.dt_s));

  for (long long step = 0; step < n_steps; ++step) {
    const double t = t_start + static_cast<double>(step) * cfg.dt_s;

    const auto k_from = static_cast<long long>(std::ceil(t * rate - 1e-9));
    const auto k_to =
        static_cast<long long>(std::ceil((t + cfg.dt_s) * rate - 1e-9)) - 1;
    for (long long k = k_from; k <= k_to; ++k) {
      const double tk = static_cast<double>(k) / rate;
      for (const auto& o : cfg.occupants) {
        if (detail::in_dropout(cfg.dropouts, o.occupant_id, tk)) continue;
        const PhysioSample ps = sample_occupant(o, plant.air_temp, tk);
        detail::expect_ok(gw.process_line(wire::make_physio_frame(
                                              ps, cfg.gateway.auth_token),
                                          tk),
                          tk);
      }
      EnvSample e;
      e.timestamp = tk;
      e.air_temp = plant.air_temp;
      e.mean_radiant_temp = plant.air_temp;
      e.rel_humidity = cfg.environment.rel_humidity;
      e.air_velocity = cfg.environment.air_velocity;
      detail::expect_ok(
          gw.process_line(wire::make_env_frame(std::string(kEnvNodeId), e,
                                               cfg.gateway.auth_token),
                          tk),
          tk);
    }

    if (step > 0 && step % steps_per_tick == 0) {
      try {
        gw.sweep_dropouts(t);
        std::set<NodeId> active;
        for (const auto& o : cfg.occupants) {
          const auto rec = gw.store().node(o.occupant_id);
          if (rec && rec->status == NodeStatus::Active)
            active.insert(o.occupant_id);
        }

        std::string reason;
        if (active != members) {
          std::vector<OccupantProfile> subset;
          std::vector<FeatureFn> subset_fns;
          for (std::size_t i = 0; i < cfg.occupants.size(); ++i) {
            if (!active.count(cfg.occupants[i].occupant_id)) continue;
            subset.push_back(result.profiles[i]);
            subset_fns.push_back(fns[i]);
          }
          GroupThermalProfile regrouped = build_group_profile(subset);
          regrouped.t0 = select_setpoint(regrouped, result.model, subset_fns,
                                         cfg.control.setpoint_grid_step)
                             .t0;
          if (const auto cmd = controller.on_occupancy_change(regrouped, t)) {
            result.commands.push_back(*cmd);
            setpoint = cmd->target_temp;
            reason = to_string(cmd->reason);
          }
          members = active;
        }

        const std::vector<EnvSample> env_window = gw.query_env(
            std::string(kEnvNodeId), t - eval_period, t);
        std::vector<TciReading> readings;
        std::vector<double> trues;
        for (const auto& o : cfg.occupants) {
          if (!members.count(o.occupant_id)) continue;
          const std::vector<PhysioSample> physio =
              gw.query_physio(o.occupant_id, t - eval_period, t);
          const FeatureVector f =
              extract_features(physio, env_window, eval_period);
          readings.emplace_back(o.occupant_id,
                                predict_tci(result.model, f));
          trues.push_back(true_tci(o, plant.air_temp).value);
        }
        if (const auto cmd = controller.evaluate(readings, plant.air_temp, t)) {
          result.commands.push_back(*cmd);
          setpoint = cmd->target_temp;
          reason = to_string(cmd->reason);
        }

        for (std::size_t i = 0; i < readings.size(); ++i) {
          TraceRow row;
          row.time = t;
          row.air_temp = plant.air_temp;
          row.setpoint = setpoint;
          row.occupant_id = readings[i].first;
          row.tci_pred = readings[i].second.value;
          row.tci_true = trues[i];
          row.command_reason = reason;
          result.trace.push_back(std::move(row));
        }

        const auto& st = controller.state();
        if (!result.converged && st.current_setpoint && st.group &&
            st.group->t0 &&
            std::abs(plant.air_temp - *st.group->t0) <=
                cfg.control.temp_epsilon) {
          result.converged = true;
          result.convergence_time_s = t - t_start;
        }
      } catch (const Error& e) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "at t=%.3f: ", t);
        throw Error(e.code(), std::string(buf) + e.detail());
      }
    }

    result.discomfort_integral +=
        detail::mean_true_tci_sq(cfg.occupants, plant.air_temp) * cfg.dt_s;
    plant = plant_step(plant, setpoint, cfg.dt_s);
  }

  result.final_air_temp = plant.air_temp;
  result.mean_true_tci_sq_end =
      detail::mean_true_tci_sq(cfg.occupants, plant.air_temp);

  double clo_sum = 0.0, met_sum = 0.0;
  for (const auto& o : cfg.occupants) {
    clo_sum += o.clothing_insulation;
    met_sum += o.metabolic_rate;
  }
  try {
    PmvInputs in;
    in.air_temp = plant.air_temp;
    in.mean_radiant_temp = plant.air_temp;
    in.air_velocity = cfg.environment.air_velocity;
    in.rel_humidity = cfg.environment.rel_humidity;
    in.metabolic_rate = met_sum / static_cast<double>(cfg.occupants.size());
    in.clothing_insulation =
        clo_sum / static_cast<double>(cfg.occupants.size());
    const double pmv = compute_pmv(in);
    result.final_pmv = pmv;
    result.final_ppd = pmv_to_ppd(pmv);
  } catch (const Error&) {
    // Reporting only; a plant that drifted outside the comfort-model
    // envelope leaves these fields null.
  }
  return result;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceRow>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << kTraceHeader << '\n';
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%.3f,%.6f,", r.time, r.air_temp);
    out << buf;
    if (r.setpoint) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.setpoint);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%s,", r.occupant_id.c_str());
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,", r.tci_pred, r.tci_true);
    out << buf << r.command_reason << '\n';
  }
}

inline std::vector<TraceRow> read_trace_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::io_error, "empty trace file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw Error(Errc::io_error, "unexpected trace header in " + path.string());
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 7) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected 7 fields, got " << fields.size();
      throw Error(Errc::io_error, msg.str());
    }
    TraceRow r;
    r.time = detail::parse_num(fields[0], "time", line_no);
    r.air_temp = detail::parse_num(fields[1], "air_temp", line_no);
    if (!fields[2].empty())
      r.setpoint = detail::parse_num(fields[2], "setpoint", line_no);
    r.occupant_id = fields[3];
    r.tci_pred = detail::parse_num(fields[4], "tci_pred", line_no);
    r.tci_true = detail::parse_num(fields[5], "tci_true", line_no);
    r.command_reason = fields[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json summary_to_json(const ScenarioResult& r) {
  nlohmann::json commands = nlohmann::json::array();
  for (const auto& c : r.commands)
    commands.push_back({{"time", c.issued_at},
                        {"target", c.target_temp},
                        {"reason", std::string(to_string(c.reason))}});
  nlohmann::json est = nlohmann::json::object();
  for (const auto& p : r.profiles) est[p.occupant_id] = p.neutral_temp;
  nlohmann::json truth = nlohmann::json::object();
  for (const auto& [id, v] : r.true_neutral_temps) truth[id] = v;

  nlohmann::json j{
      {"schema", "scenario-summary/1"},
      {"t_bar", r.initial_group.t_bar},
      {"sigma", r.initial_group.sigma},
      {"band", {r.initial_group.band_lo, r.initial_group.band_hi}},
      {"t0", r.initial_search.t0},
      {"estimated_neutral_temps", std::move(est)},
      {"true_neutral_temps", std::move(truth)},
      {"train_pairs", r.train_pairs},
      {"phase_b_start_s", r.phase_b_start_s},
      {"duration_s", r.duration_s},
      {"converged", r.converged},
      {"convergence_time_s",
       r.convergence_time_s ? nlohmann::json(*r.convergence_time_s)
                            : nlohmann::json(nullptr)},
      {"discomfort_integral", r.discomfort_integral},
      {"mean_true_tci_sq_start", r.mean_true_tci_sq_start},
      {"mean_true_tci_sq_end", r.mean_true_tci_sq_end},
      {"final_air_temp", r.final_air_temp},
      {"final_pmv",
       r.final_pmv ? nlohmann::json(*r.final_pmv) : nlohmann::json(nullptr)},
      {"final_ppd",
       r.final_ppd ? nlohmann::json(*r.final_ppd) : nlohmann::json(nullptr)},
      {"commands", std::move(commands)}};
  return j;
}

struct ReplayReport {
  bool ok = true;
  std::size_t ticks = 0;
  std::size_t commands = 0;
  std::string diagnostic;
};

/**
 * Re-runs the controller state machine over a recorded trace and checks
 * that it reproduces the recorded command sequence exactly. The group
 * setpoint at each reconfiguration is recovered from the recorded setpoint
 * column, so an unmodified trace must replay with zero differences.
 */
inline ReplayReport replay_trace(const std::vector<TraceRow>& rows,
                                 ControlParams params = {}) {
  ReplayReport report;
  if (rows.empty()) {
    report.ok = false;
    report.diagnostic = "trace has no rows";
    return report;
  }

  double seed_t0 = 22.5;
  for (const auto& r : rows)
    if (r.setpoint) {
      seed_t0 = *r.setpoint;
      break;
    }

  Controller controller(params);
  GroupThermalProfile group;
  group.t_bar = seed_t0;
  group.band_lo = seed_t0;
  group.band_hi = seed_t0;
  group.t0 = seed_t0;
  controller.install_group(group);

  constexpr double kTol = 5e-6;
  const auto fail = [&report](const std::string& msg) {
    report.ok = false;
    if (report.diagnostic.empty()) report.diagnostic = msg;
  };

  std::size_t i = 0;
  while (i < rows.size() && report.ok) {
    const double t = rows[i].time;
    std::size_t j = i;
    while (j < rows.size() && rows[j].time == t) ++j;
    ++report.ticks;

    const double air = rows[i].air_temp;
    std::string reason;
    for (std::size_t k = i; k < j; ++k)
      if (!rows[k].command_reason.empty()) reason = rows[k].command_reason;
    const std::optional<double> recorded_sp = rows[i].setpoint;

    char buf[96];
    std::snprintf(buf, sizeof(buf), "t=%.3f: ", t);
    const std::string at(buf);

    if (reason == to_string(CommandReason::OccupancyChanged)) {
      if (!recorded_sp) {
        fail(at + "occupancy command recorded without a setpoint");
        break;
      }
      GroupThermalProfile g;
      g.t_bar = *recorded_sp;
      g.band_lo = *recorded_sp;
      g.band_hi = *recorded_sp;
      g.t0 = *recorded_sp;
      const auto cmd = controller.on_occupancy_change(g, t);
      if (!cmd) {
        fail(at + "trace records an occupancy command, replay emits none");
        break;
      }
      ++report.commands;
    }

    std::vector<TciReading> readings;
    for (std::size_t k = i; k < j; ++k)
      readings.emplace_back(rows[k].occupant_id, Tci{rows[k].tci_pred});
    const auto cmd = controller.evaluate(readings, air, t);

    if (reason == to_string(CommandReason::TciOutOfBand)) {
      if (!cmd)
        fail(at + "trace records a comfort command, replay emits none");
      else if (to_string(cmd->reason) != reason)
        fail(at + "command reason mismatch: replay " +
             std::string(to_string(cmd->reason)) + ", trace " + reason);
      else if (!recorded_sp ||
               std::abs(cmd->target_temp - *recorded_sp) > kTol)
        fail(at + "command target mismatch");
      else
        ++report.commands;
    } else if (reason.empty() && cmd) {
      std::snprintf(buf, sizeof(buf), "%.6f", cmd->target_temp);
      fail(at + "replay emits an unrecorded command (target " +
           std::string(buf) + ")");
    }

    const auto& sp = controller.state().current_setpoint;
    if (report.ok) {
      if (recorded_sp && (!sp || std::abs(*sp - *recorded_sp) > kTol))
        fail(at + "setpoint state diverges from the recorded value");
      else if (!recorded_sp && sp)
        fail(at + "replay holds a setpoint where the trace records none");
    }
    i = j;
  }
  return report;
}

}  // namespace comfort
