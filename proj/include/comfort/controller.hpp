#pragma once

/**
 * @file controller.hpp
 * @brief Setpoint control loop as an explicit state machine.
 *
 * The controller watches per-occupant TCIs: when any occupant is outside
 * the comfort band and the active setpoint disagrees with the group
 * profile's target, it commands the thermostat to the group setpoint and
 * waits for the air temperature to converge. Commands never repeat an
 * equivalent target, so a noisy TCI cannot make the thermostat chatter.
 */

#include <cmath>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/pmv.hpp"
#include "comfort/profile.hpp"

namespace comfort {

enum class Phase { Idle, Adjusting, Converged };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Adjusting: return "Adjusting";
    case Phase::Converged: return "Converged";
  }
  return "?";
}

enum class CommandReason { TciOutOfBand, OccupancyChanged, Manual };

constexpr std::string_view to_string(CommandReason r) {
  switch (r) {
    case CommandReason::TciOutOfBand: return "TciOutOfBand";
    case CommandReason::OccupancyChanged: return "OccupancyChanged";
    case CommandReason::Manual: return "Manual";
  }
  return "?";
}

inline std::optional<CommandReason> command_reason_from_string(
    std::string_view s) {
  if (s == "TciOutOfBand") return CommandReason::TciOutOfBand;
  if (s == "OccupancyChanged") return CommandReason::OccupancyChanged;
  if (s == "Manual") return CommandReason::Manual;
  return std::nullopt;
}

/// Thermostat command. Targets are confined to the habitable range.
struct SetpointCommand {
  double target_temp = 0.0;  // degC, [10, 35]
  double issued_at = 0.0;    // s
  CommandReason reason = CommandReason::TciOutOfBand;
};

struct ControlParams {
  double tci_epsilon = 0.5;   // comfort band half-width on the TCI scale
  double temp_epsilon = 0.2;  // degC tolerance for "air temp reached setpoint"
};

struct ControllerState {
  Phase phase = Phase::Idle;
  std::optional<double> current_setpoint;
  std::optional<GroupThermalProfile> group;
  double last_eval_time = 0.0;
  std::uint64_t occupancy_epoch = 0;
};

using TciReading = std::pair<NodeId, Tci>;

namespace detail {

inline SetpointCommand make_command(double target, double now,
                                    CommandReason reason) {
  if (!(target >= 10.0 && target <= 35.0))
    throw Error(Errc::out_of_range, "setpoint target outside [10, 35] degC");
  return SetpointCommand{target, now, reason};
}

}  // namespace detail

/**
 * @brief One evaluation of the control loop.
 *
 * Emits a command to the group setpoint when some |TCI| exceeds the
 * comfort band and the active setpoint does not already match the
 * target. With a setpoint active, the phase tracks the latest air
 * reading: Converged while the air is within tolerance of the
 * setpoint, Adjusting again if it drifts back out.
 *
 * @throws Error{NoOccupants} for an empty TCI list
 * @throws Error{NoGroupProfile} when no group (with setpoint) is installed
 */
inline std::pair<ControllerState, std::optional<SetpointCommand>> evaluate(
    ControllerState state, std::span<const TciReading> tcis, double air_temp,
    double now, const ControlParams& params = {}) {
  if (tcis.empty()) throw Error(Errc::no_occupants, "empty TCI list");
  if (!state.group || !state.group->t0)
    throw Error(Errc::no_group_profile, "no group profile installed");

  state.last_eval_time = now;
  const double t0 = *state.group->t0;

  bool out_of_band = false;
  for (const auto& [id, tci] : tcis)
    out_of_band |= std::abs(tci.value) > params.tci_epsilon;

  std::optional<SetpointCommand> command;
  const bool setpoint_stale =
      !state.current_setpoint ||
      std::abs(*state.current_setpoint - t0) > params.temp_epsilon;
  if (out_of_band && setpoint_stale) {
    command = detail::make_command(t0, now, CommandReason::TciOutOfBand);
    state.current_setpoint = t0;
    state.phase = Phase::Adjusting;
  }

  if (state.current_setpoint) {
    if (std::abs(air_temp - *state.current_setpoint) <= params.temp_epsilon)
      state.phase = Phase::Converged;
    else if (state.phase == Phase::Converged)
      state.phase = Phase::Adjusting;
  }
  return {std::move(state), command};
}

/**
 * @brief Swap in a new group profile after occupants join or leave.
 *
 * Always bumps the occupancy epoch. Commands the new setpoint when it
 * differs from the active one by more than the tolerance (or when no
 * setpoint is active yet).
 */
inline std::pair<ControllerState, std::optional<SetpointCommand>>
on_occupancy_change(ControllerState state, GroupThermalProfile new_group,
                    double now, const ControlParams& params = {}) {
  if (!new_group.t0)
    throw Error(Errc::no_group_profile, "new group has no setpoint");
  state.occupancy_epoch += 1;
  const double t0 = *new_group.t0;
  state.group = std::move(new_group);

  std::optional<SetpointCommand> command;
  if (!state.current_setpoint ||
      std::abs(t0 - *state.current_setpoint) > params.temp_epsilon) {
    command = detail::make_command(t0, now, CommandReason::OccupancyChanged);
    state.current_setpoint = t0;
    state.phase = Phase::Adjusting;
  }
  return {std::move(state), command};
}

/**
 * @brief Stateful wrapper serializing the pure transition functions and
 *        appending one JSON record per transition to an audit sink.
 */
class Controller {
 public:
  using AuditSink = std::function<void(const nlohmann::json&)>;

  explicit Controller(ControlParams params = {}, AuditSink audit = nullptr)
      : params_(params), audit_(std::move(audit)) {}

  /// Install the initial group without issuing a command.
  void install_group(GroupThermalProfile group) {
    state_.group = std::move(group);
  }

  std::optional<SetpointCommand> evaluate(std::span<const TciReading> tcis,
                                          double air_temp, double now) {
    const Phase before = state_.phase;
    auto [next, command] =
        comfort::evaluate(std::move(state_), tcis, air_temp, now, params_);
    state_ = std::move(next);
    log(before, tcis, air_temp, now, command);
    return command;
  }

  std::optional<SetpointCommand> on_occupancy_change(
      GroupThermalProfile new_group, double now) {
    const Phase before = state_.phase;
    auto [next, command] = comfort::on_occupancy_change(
        std::move(state_), std::move(new_group), now, params_);
    state_ = std::move(next);
    log(before, {}, std::nan(""), now, command);
    return command;
  }

  const ControllerState& state() const { return state_; }
  const ControlParams& params() const { return params_; }

 private:
  void log(Phase before, std::span<const TciReading> tcis, double air_temp,
           double now, const std::optional<SetpointCommand>& command) {
    if (!audit_) return;
    nlohmann::json tci_json = nlohmann::json::array();
    for (const auto& [id, tci] : tcis)
      tci_json.push_back({{"occupant_id", id}, {"tci", tci.value}});
    nlohmann::json j{{"time", now},
                     {"phase_before", to_string(before)},
                     {"phase_after", to_string(state_.phase)},
                     {"tcis", std::move(tci_json)},
                     {"air_temp", air_temp},
                     {"command", nullptr}};
    if (std::isnan(air_temp)) j["air_temp"] = nullptr;
    if (command)
      j["command"] = {{"target_temp", command->target_temp},
                      {"issued_at", command->issued_at},
                      {"reason", to_string(command->reason)}};
    audit_(j);
  }

  ControlParams params_;
  ControllerState state_;
  AuditSink audit_;
};

}  // namespace comfort
