#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace comfort {

/// Error taxonomy shared by every module. The wire protocol and the CLI
/// map these codes to reply strings and exit codes.
enum class Errc {
  out_of_range,
  non_convergence,
  not_finite,
  empty_window,
  too_few_samples,
  degenerate_design,
  no_neutral_point,
  non_monotone,
  empty_group,
  no_occupants,
  no_group_profile,
  malformed_frame,
  unknown_node,
  stale_timestamp,
  unauthorized,
  kind_mismatch,
  corrupt_snapshot,
  invalid_config,
  io_error,
};

constexpr std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::out_of_range: return "OutOfRange";
    case Errc::non_convergence: return "NonConvergence";
    case Errc::not_finite: return "NotFinite";
    case Errc::empty_window: return "EmptyWindow";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::degenerate_design: return "DegenerateDesign";
    case Errc::no_neutral_point: return "NoNeutralPoint";
    case Errc::non_monotone: return "NonMonotone";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::no_occupants: return "NoOccupants";
    case Errc::no_group_profile: return "NoGroupProfile";
    case Errc::malformed_frame: return "MalformedFrame";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::stale_timestamp: return "StaleTimestamp";
    case Errc::unauthorized: return "Unauthorized";
    case Errc::kind_mismatch: return "DuplicateKindMismatch";
    case Errc::corrupt_snapshot: return "CorruptSnapshot";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

/// Wire-level reply code (lower snake case, stable across releases).
constexpr std::string_view wire_code(Errc c) {
  switch (c) {
    case Errc::malformed_frame: return "malformed";
    case Errc::unknown_node: return "unknown_node";
    case Errc::stale_timestamp: return "stale_timestamp";
    case Errc::unauthorized: return "unauthorized";
    case Errc::kind_mismatch: return "kind_mismatch";
    default: return "internal";
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(std::move(detail)) {}

  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace comfort
