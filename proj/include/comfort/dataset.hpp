#pragma once

/**
 * @file dataset.hpp
 * @brief Labeled telemetry dataset: CSV serialization and windowed assembly.
 *
 * A dataset row is one telemetry instant for one occupant plus its comfort
 * label. Rows aggregate into (FeatureVector, Tci) pairs over tumbling
 * windows, which is what the trainer consumes.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "comfort/errors.hpp"
#include "comfort/features.hpp"
#include "comfort/linreg.hpp"
#include "comfort/samples.hpp"

namespace comfort {

struct DatasetRow {
  std::string occupant_id;
  double timestamp = 0.0;
  double hr = 0.0;
  double gsr = 0.0;
  double clo = 0.0;
  double met = 0.0;
  double air_temp = 0.0;
  double mrt = 0.0;
  double rh = 0.0;
  double vel = 0.0;
  double tci_label = 0.0;
};

inline constexpr std::string_view kDatasetHeader =
    "occupant_id,timestamp,hr,gsr,clo,met,air_temp,mrt,rh,vel,tci_label";

namespace detail {

inline std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline double parse_num(const std::string& field, const char* name,
                        std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::exception();
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "line " << line_no << ": bad value for " << name;
    throw Error(Errc::io_error, msg.str());
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

inline void write_dataset_csv(const std::filesystem::path& path,
                              const std::vector<DatasetRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << kDatasetHeader << '\n';
  for (const auto& r : rows) {
    out << r.occupant_id << ',' << detail::format_num(r.timestamp) << ','
        << detail::format_num(r.hr) << ',' << detail::format_num(r.gsr) << ','
        << detail::format_num(r.clo) << ',' << detail::format_num(r.met)
        << ',' << detail::format_num(r.air_temp) << ','
        << detail::format_num(r.mrt) << ',' << detail::format_num(r.rh) << ','
        << detail::format_num(r.vel) << ','
        << detail::format_num(r.tci_label) << '\n';
  }
}

inline std::vector<DatasetRow> read_dataset_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::io_error, "empty dataset file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader)
    throw Error(Errc::io_error,
                "unexpected dataset header in " + path.string());

  std::vector<DatasetRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 11) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected 11 fields, got "
          << fields.size();
      throw Error(Errc::io_error, msg.str());
    }
    DatasetRow r;
    r.occupant_id = fields[0];
    r.timestamp = detail::parse_num(fields[1], "timestamp", line_no);
    r.hr = detail::parse_num(fields[2], "hr", line_no);
    r.gsr = detail::parse_num(fields[3], "gsr", line_no);
    r.clo = detail::parse_num(fields[4], "clo", line_no);
    r.met = detail::parse_num(fields[5], "met", line_no);
    r.air_temp = detail::parse_num(fields[6], "air_temp", line_no);
    r.mrt = detail::parse_num(fields[7], "mrt", line_no);
    r.rh = detail::parse_num(fields[8], "rh", line_no);
    r.vel = detail::parse_num(fields[9], "vel", line_no);
    r.tci_label = detail::parse_num(fields[10], "tci_label", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

/**
 * Aggregates rows into (features, label) pairs over tumbling windows of
 * window_s seconds per occupant (window index floor(t / window_s)). The
 * label is the window-mean tci_label. Pair order is deterministic:
 * occupants in id order, windows ascending.
 */
inline std::vector<LabeledFeatures> assemble_training_set(
    const std::vector<DatasetRow>& rows, double window_s = 60.0) {
  if (!(window_s > 0.0))
    throw Error(Errc::invalid_config, "window must be positive");

  std::map<std::string, std::map<long long, std::vector<const DatasetRow*>>>
      buckets;
  for (const auto& r : rows) {
    const auto w = static_cast<long long>(std::floor(r.timestamp / window_s));
    buckets[r.occupant_id][w].push_back(&r);
  }

  std::vector<LabeledFeatures> out;
  for (const auto& [occupant, windows] : buckets) {
    for (const auto& [w, bucket] : windows) {
      std::vector<PhysioSample> physio;
      std::vector<EnvSample> env;
      double label_sum = 0.0;
      physio.reserve(bucket.size());
      env.reserve(bucket.size());
      for (const DatasetRow* r : bucket) {
        PhysioSample p;
        p.occupant_id = r->occupant_id;
        p.timestamp = r->timestamp;
        p.heart_rate = r->hr;
        p.gsr = r->gsr;
        p.clothing_insulation = r->clo;
        p.metabolic_rate = r->met;
        physio.push_back(std::move(p));
        EnvSample e;
        e.timestamp = r->timestamp;
        e.air_temp = r->air_temp;
        e.mean_radiant_temp = r->mrt;
        e.rel_humidity = r->rh;
        e.air_velocity = r->vel;
        env.push_back(e);
        label_sum += r->tci_label;
      }
      const FeatureVector f = extract_features(physio, env, window_s);
      out.emplace_back(f, clamp_tci(label_sum / bucket.size()));
    }
  }
  return out;
}

}  // namespace comfort
