// comfortctl: command-line front end for the comfort library.
//
// Subcommands: pmv, train, profile, simulate, serve, replay.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "comfort/dataset.hpp"
#include "comfort/errors.hpp"
#include "comfort/gateway.hpp"
#include "comfort/linreg.hpp"
#include "comfort/pmv.hpp"
#include "comfort/profile.hpp"
#include "comfort/scenario.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

const char* pmv_flag_for_field(const std::string& field) {
  static const std::map<std::string, const char*> flags{
      {"air_temp", "--ta"},          {"mean_radiant_temp", "--tr"},
      {"air_velocity", "--vel"},     {"rel_humidity", "--rh"},
      {"metabolic_rate", "--met"},   {"clothing_insulation", "--clo"}};
  const auto it = flags.find(field);
  return it == flags.end() ? "" : it->second;
}

struct PmvArgs {
  double ta = 0, tr = 0, vel = 0, rh = 0, met = 0, clo = 0;
  bool json = false;
};

int run_pmv(const PmvArgs& a) {
  comfort::PmvInputs in;
  in.air_temp = a.ta;
  in.mean_radiant_temp = a.tr;
  in.air_velocity = a.vel;
  in.rel_humidity = a.rh;
  in.metabolic_rate = a.met;
  in.clothing_insulation = a.clo;
  double pmv = 0.0;
  try {
    pmv = comfort::compute_pmv(in);
  } catch (const comfort::Error& e) {
    if (e.code() == comfort::Errc::out_of_range) {
      const char* flag = pmv_flag_for_field(e.detail());
      std::string detail = e.detail();
      if (*flag) detail += std::string(" (") + flag + ")";
      throw comfort::Error(e.code(), detail);
    }
    throw;
  }
  const double ppd = comfort::pmv_to_ppd(pmv);
  if (a.json) {
    std::cout << nlohmann::json{{"pmv", pmv}, {"ppd", ppd}}.dump() << "\n";
  } else {
    std::printf("PMV %.3f\n", pmv);
    std::printf("PPD %.3f\n", ppd);
  }
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
  double window = 60.0;
  bool json = false;
};

int run_train(const TrainArgs& a) {
  const auto rows = comfort::read_dataset_csv(a.data);
  const auto pairs = comfort::assemble_training_set(rows, a.window);
  const comfort::TciModel model =
      comfort::train_tci_model(pairs, a.ridge, a.seed);
  const nlohmann::json doc = comfort::model_to_json(model);
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f)
      throw comfort::Error(comfort::Errc::io_error, "cannot write " + a.out);
    f << doc.dump(2) << "\n";
  }
  if (a.json) {
    std::cout << doc.dump() << "\n";
  } else {
    std::printf("trained on %zu rows (%zu windows)\n", rows.size(),
                pairs.size());
    if (!a.out.empty()) std::printf("wrote %s\n", a.out.c_str());
  }
  return 0;
}

struct ProfileArgs {
  std::string model;
  std::string data;
  std::string sweep = "16:30:0.5";
  double grid_step = 0.1;
  std::string out;
  bool json = false;
};

void parse_sweep(const std::string& s, double& lo, double& hi, double& step) {
  double a = 0, b = 0, c = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &a, &b, &c, &extra) != 3)
    throw comfort::Error(comfort::Errc::invalid_config,
                         "--sweep expects lo:hi:step");
  lo = a;
  hi = b;
  step = c;
}

// Per-occupant piecewise-linear feature curves keyed by window-mean air
// temperature, built from the dataset's tumbling windows.
std::map<std::string, comfort::FeatureInterp> feature_curves(
    const std::vector<comfort::DatasetRow>& rows, double window_s) {
  std::map<std::string, std::vector<comfort::DatasetRow>> by_occupant;
  for (const auto& r : rows) by_occupant[r.occupant_id].push_back(r);

  std::map<std::string, comfort::FeatureInterp> curves;
  for (auto& [id, occ_rows] : by_occupant) {
    const auto pairs = comfort::assemble_training_set(occ_rows, window_s);
    std::map<double, std::pair<comfort::FeatureVector, int>> by_ta;
    for (const auto& [f, label] : pairs) {
      auto& [acc, n] = by_ta[f[6]];  // window-mean air temperature
      if (n == 0) acc.fill(0.0);
      for (std::size_t k = 0; k < comfort::kFeatureCount; ++k) acc[k] += f[k];
      ++n;
    }
    comfort::FeatureInterp interp;
    for (auto& [ta, entry] : by_ta) {
      auto& [acc, n] = entry;
      for (auto& v : acc) v /= n;
      interp.temps.push_back(ta);
      interp.values.push_back(acc);
    }
    if (interp.temps.size() < 2)
      throw comfort::Error(
          comfort::Errc::invalid_config,
          "occupant " + id + " has fewer than two distinct temperatures");
    curves.emplace(id, std::move(interp));
  }
  return curves;
}

int run_profile(const ProfileArgs& a) {
  double lo = 0, hi = 0, step = 0;
  parse_sweep(a.sweep, lo, hi, step);

  std::ifstream mf(a.model);
  if (!mf)
    throw comfort::Error(comfort::Errc::io_error, "cannot read " + a.model);
  nlohmann::json mj = nlohmann::json::parse(mf, nullptr, false);
  if (mj.is_discarded())
    throw comfort::Error(comfort::Errc::invalid_config,
                         "invalid JSON in " + a.model);
  const comfort::TciModel model = comfort::model_from_json(mj);

  const auto rows = comfort::read_dataset_csv(a.data);
  const auto curves = feature_curves(rows, 60.0);

  std::vector<comfort::OccupantProfile> profiles;
  std::vector<comfort::FeatureFn> fns;
  for (const auto& [id, interp] : curves) {
    const auto est =
        comfort::estimate_neutral_temp(model, interp, lo, hi, step);
    profiles.push_back({id, est.neutral_temp, est.sensitivity});
    fns.emplace_back(interp);
  }
  comfort::GroupThermalProfile group = comfort::build_group_profile(profiles);
  const comfort::SetpointSearch search =
      comfort::select_setpoint(group, model, fns, a.grid_step);
  group.t0 = search.t0;

  const nlohmann::json doc =
      comfort::group_profile_to_json(group, &search.objective);
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f)
      throw comfort::Error(comfort::Errc::io_error, "cannot write " + a.out);
    f << doc.dump(2) << "\n";
  }
  if (a.json) {
    std::cout << doc.dump() << "\n";
  } else {
    for (const auto& p : group.members)
      std::printf("%s neutral %.3f sensitivity %.4f\n", p.occupant_id.c_str(),
                  p.neutral_temp, p.sensitivity);
    std::printf("t_bar %.3f sigma %.3f band [%.3f, %.3f] t0 %.3f\n",
                group.t_bar, group.sigma, group.band_lo, group.band_hi,
                search.t0);
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  bool json = false;
};

int run_simulate(const SimulateArgs& a) {
  comfort::ScenarioConfig cfg = comfort::load_scenario_config(a.config);
  if (a.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(a.seed);

  const comfort::ScenarioResult result = comfort::run_scenario(cfg);

  namespace fs = std::filesystem;
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);

  comfort::write_trace_csv(out_dir / "trace.csv", result.trace);
  comfort::write_dataset_csv(out_dir / "calibration_data.csv",
                             result.calibration_rows);
  {
    std::ofstream f(out_dir / "summary.json", std::ios::trunc);
    f << comfort::summary_to_json(result).dump(2) << "\n";
  }
  {
    std::ofstream f(out_dir / "model.json", std::ios::trunc);
    f << comfort::model_to_json(result.model).dump(2) << "\n";
  }
  {
    std::ofstream f(out_dir / "group_profile.json", std::ios::trunc);
    f << comfort::group_profile_to_json(result.initial_group,
                                        &result.initial_search.objective)
             .dump(2)
      << "\n";
  }
  {
    std::ofstream f(out_dir / "audit.jsonl", std::ios::trunc);
    for (const auto& line : result.audit) f << line.dump() << "\n";
  }

  if (a.json) {
    std::cout << comfort::summary_to_json(result).dump() << "\n";
  } else {
    std::printf("t0 %.6f\n", result.initial_search.t0);
    if (result.convergence_time_s)
      std::printf("convergence_time_s %.3f\n", *result.convergence_time_s);
    else
      std::printf("convergence_time_s none\n");
    std::printf("discomfort_integral %.6f\n", result.discomfort_integral);
    std::printf("final_air_temp %.6f\n", result.final_air_temp);
    std::printf("wrote %s\n", (out_dir / "trace.csv").string().c_str());
    std::printf("wrote %s\n", (out_dir / "summary.json").string().c_str());
  }
  return 0;
}

struct ServeArgs {
  std::uint16_t port = 7700;
  std::string token;
  double dropout_timeout = 10.0;
  std::string snapshot;
};

int run_serve(const ServeArgs& a) {
  std::string token = a.token;
  if (token.empty()) {
    if (const char* env = std::getenv("COMFORT_TOKEN")) token = env;
  }
  if (token.empty())
    throw comfort::Error(comfort::Errc::invalid_config,
                         "no auth token (--token or COMFORT_TOKEN)");

  comfort::Gateway gateway({token, a.dropout_timeout});
  if (!a.snapshot.empty() && std::filesystem::exists(a.snapshot)) {
    gateway.restore(a.snapshot);
    std::printf("restored %zu samples from %s\n",
                gateway.store().total_samples(), a.snapshot.c_str());
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  comfort::TcpGatewayServer server(gateway, a.port);
  std::printf("listening on 127.0.0.1:%u\n", server.port());
  std::fflush(stdout);

  while (!g_stop.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();

  if (!a.snapshot.empty()) {
    gateway.snapshot(a.snapshot);
    std::printf("snapshot written to %s\n", a.snapshot.c_str());
  }
  std::printf("stored %zu samples across %zu nodes\n",
              gateway.store().total_samples(), gateway.store().nodes().size());
  return 0;
}

struct ReplayArgs {
  std::string trace;
  double tci_epsilon = 0.5;
  double temp_epsilon = 0.2;
  bool json = false;
};

int run_replay(const ReplayArgs& a) {
  const auto rows = comfort::read_trace_csv(a.trace);
  const comfort::ReplayReport report =
      comfort::replay_trace(rows, {a.tci_epsilon, a.temp_epsilon});
  if (a.json) {
    std::cout << nlohmann::json{{"ok", report.ok},
                                {"ticks", report.ticks},
                                {"commands", report.commands},
                                {"diagnostic", report.diagnostic}}
                     .dump()
              << "\n";
  } else {
    std::printf("ticks %zu commands %zu\n", report.ticks, report.commands);
    if (report.ok)
      std::printf("replay matches the recorded command sequence\n");
    else
      std::printf("replay mismatch: %s\n", report.diagnostic.c_str());
  }
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physiology-driven HVAC setpoint toolkit"};
  app.require_subcommand(1);

  PmvArgs pmv_args;
  CLI::App* pmv = app.add_subcommand("pmv", "Compute PMV and PPD");
  pmv->add_option("--ta", pmv_args.ta, "Air temperature, degC")->required();
  pmv->add_option("--tr", pmv_args.tr, "Mean radiant temperature, degC")
      ->required();
  pmv->add_option("--vel", pmv_args.vel, "Air velocity, m/s")->required();
  pmv->add_option("--rh", pmv_args.rh, "Relative humidity, %")->required();
  pmv->add_option("--met", pmv_args.met, "Metabolic rate, met")->required();
  pmv->add_option("--clo", pmv_args.clo, "Clothing insulation, clo")
      ->required();
  pmv->add_flag("--json", pmv_args.json, "JSON output");

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train", "Train a TCI model from a dataset CSV");
  train->add_option("--data", train_args.data, "Dataset CSV path")
      ->required();
  train->add_option("--out", train_args.out, "Model JSON output path");
  train->add_option("--ridge", train_args.ridge, "Ridge strength");
  train->add_option("--seed", train_args.seed, "Training seed");
  train->add_option("--window", train_args.window, "Window length, seconds");
  train->add_flag("--json", train_args.json, "Print the model JSON");

  ProfileArgs profile_args;
  CLI::App* profile = app.add_subcommand(
      "profile", "Estimate neutral temperatures and the group setpoint");
  profile->add_option("--model", profile_args.model, "Model JSON path")
      ->required();
  profile->add_option("--data", profile_args.data, "Dataset CSV path")
      ->required();
  profile->add_option("--sweep", profile_args.sweep,
                      "Scan range lo:hi:step, degC");
  profile->add_option("--grid-step", profile_args.grid_step,
                      "Setpoint grid step, degC");
  profile->add_option("--out", profile_args.out, "Profile JSON output path");
  profile->add_flag("--json", profile_args.json, "JSON output");

  SimulateArgs sim_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run a closed-loop scenario");
  simulate->add_option("--config", sim_args.config, "Scenario config JSON")
      ->required();
  simulate->add_option("--out", sim_args.out, "Output directory")->required();
  simulate->add_option("--seed", sim_args.seed,
                       "Master seed override (non-negative)");
  simulate->add_flag("--json", sim_args.json, "Print the summary JSON");

  ServeArgs serve_args;
  CLI::App* serve =
      app.add_subcommand("serve", "Run the telemetry gateway over TCP");
  serve->add_option("--port", serve_args.port,
                    "TCP port (0 picks an ephemeral port)");
  serve->add_option("--token", serve_args.token,
                    "Shared auth token (default: COMFORT_TOKEN)");
  serve->add_option("--dropout-timeout", serve_args.dropout_timeout,
                    "Dropout timeout, seconds");
  serve->add_option("--snapshot", serve_args.snapshot,
                    "Snapshot file restored at start, written at exit");

  ReplayArgs replay_args;
  CLI::App* replay = app.add_subcommand(
      "replay", "Re-run the controller over a recorded trace");
  replay->add_option("--trace", replay_args.trace, "Trace CSV path")
      ->required();
  replay->add_option("--tci-epsilon", replay_args.tci_epsilon,
                     "Comfort deadband");
  replay->add_option("--temp-epsilon", replay_args.temp_epsilon,
                     "Setpoint deadband, degC");
  replay->add_flag("--json", replay_args.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (pmv->parsed()) return run_pmv(pmv_args);
    if (train->parsed()) return run_train(train_args);
    if (profile->parsed()) return run_profile(profile_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (serve->parsed()) return run_serve(serve_args);
    if (replay->parsed()) return run_replay(replay_args);
  } catch (const comfort::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
