#pragma once

/**
 * @file linreg.hpp
 * @brief Ridge-regularized linear TCI model, solved in closed form.
 *
 * Features are z-scored with dataset statistics (population SD), the
 * intercept is left unpenalized, and the normal equations are solved
 * exactly by Cholesky factorization. Training is deterministic for a
 * given dataset order; the seed is recorded as metadata only.
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "comfort/errors.hpp"
#include "comfort/features.hpp"
#include "comfort/pmv.hpp"

namespace comfort {

struct TciModel {
  FeatureVector coefficients{};   // on standardized features
  double intercept = 0.0;
  FeatureVector feature_means{};
  FeatureVector feature_scales{}; // > 0
  // training metadata
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;
  double ridge_strength = 0.0;
};

using LabeledFeatures = std::pair<FeatureVector, Tci>;

namespace detail {

/// Cholesky solve of the SPD system A x = b. A is row-major d x d.
/// Throws DegenerateDesign when a pivot collapses (singular system).
inline std::vector<double> solve_spd(std::vector<double> a,
                                     std::vector<double> b,
                                     std::size_t d) {
  std::vector<double> l(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
    if (!(diag > 1e-12))
      throw Error(Errc::degenerate_design, "singular normal equations");
    const double ljj = std::sqrt(diag);
    l[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = s / ljj;
    }
  }
  // forward then backward substitution
  std::vector<double> y(d), x(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * y[k];
    y[i] = s / l[i * d + i];
  }
  for (std::size_t ii = d; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < d; ++k) s -= l[k * d + ii] * x[k];
    x[ii] = s / l[ii * d + ii];
  }
  return x;
}

}  // namespace detail

/**
 * @brief Fit the TCI model on (features, label) pairs.
 *
 * Minimizes sum (y - b - w.z)^2 + ridge * |w|^2 over standardized
 * features z; the intercept equals the label mean by construction.
 *
 * @throws Error{TooFewSamples} for fewer than 10 rows
 * @throws Error{DegenerateDesign} when a feature has zero variance and
 *         ridge_strength is 0, or the normal equations are singular
 */
inline TciModel train_tci_model(std::span<const LabeledFeatures> dataset,
                                double ridge_strength, std::uint64_t seed) {
  if (dataset.size() < 10)
    throw Error(Errc::too_few_samples,
                "need >= 10 samples, got " + std::to_string(dataset.size()));
  if (!(ridge_strength >= 0.0))
    throw Error(Errc::invalid_config, "ridge_strength must be >= 0");

  const std::size_t n = dataset.size();
  constexpr std::size_t d = kFeatureCount;

  TciModel model;
  model.seed = seed;
  model.sample_count = n;
  model.ridge_strength = ridge_strength;

  for (std::size_t k = 0; k < d; ++k) {
    double sum = 0.0;
    for (const auto& [x, y] : dataset) sum += x[k];
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (const auto& [x, y] : dataset) var += (x[k] - mean) * (x[k] - mean);
    var /= static_cast<double>(n);
    model.feature_means[k] = mean;
    if (var == 0.0) {
      if (ridge_strength == 0.0)
        throw Error(Errc::degenerate_design,
                    "feature " + std::string(kFeatureNames[k]) +
                        " has zero variance");
      model.feature_scales[k] = 1.0;  // centered column is all zeros
    } else {
      model.feature_scales[k] = std::sqrt(var);
    }
  }

  double label_sum = 0.0;
  for (const auto& [x, y] : dataset) label_sum += y.value;
  const double label_mean = label_sum / static_cast<double>(n);
  model.intercept = label_mean;

  // normal equations on standardized features, A = Z'Z + ridge I, b = Z'(y - ybar)
  std::vector<double> a(d * d, 0.0), b(d, 0.0);
  std::vector<double> z(d);
  for (const auto& [x, y] : dataset) {
    for (std::size_t k = 0; k < d; ++k)
      z[k] = (x[k] - model.feature_means[k]) / model.feature_scales[k];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) a[i * d + j] += z[i] * z[j];
      b[i] += z[i] * (y.value - label_mean);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) a[i * d + j] = a[j * d + i];
    a[i * d + i] += ridge_strength;
  }

  const auto beta = detail::solve_spd(std::move(a), std::move(b), d);
  for (std::size_t k = 0; k < d; ++k) model.coefficients[k] = beta[k];
  return model;
}

/// Affine evaluation on standardized features, clamped onto the TCI scale.
inline Tci predict_tci(const TciModel& model, const FeatureVector& features) {
  if (!all_finite(features)) throw Error(Errc::not_finite, "features");
  double acc = model.intercept;
  for (std::size_t k = 0; k < kFeatureCount; ++k)
    acc += model.coefficients[k] *
           (features[k] - model.feature_means[k]) / model.feature_scales[k];
  return clamp_tci(acc);
}

inline nlohmann::json model_to_json(const TciModel& m) {
  nlohmann::json j;
  j["schema"] = "tci-model/1";
  j["coefficients"] = m.coefficients;
  j["intercept"] = m.intercept;
  j["feature_means"] = m.feature_means;
  j["feature_scales"] = m.feature_scales;
  j["feature_names"] = kFeatureNames;
  j["metadata"] = {{"seed", m.seed},
                   {"sample_count", m.sample_count},
                   {"ridge_strength", m.ridge_strength}};
  return j;
}

inline TciModel model_from_json(const nlohmann::json& j) {
  try {
    TciModel m;
    if (j.at("schema").get<std::string>() != "tci-model/1")
      throw Error(Errc::invalid_config, "unknown model schema");
    m.coefficients = j.at("coefficients").get<FeatureVector>();
    m.intercept = j.at("intercept").get<double>();
    m.feature_means = j.at("feature_means").get<FeatureVector>();
    m.feature_scales = j.at("feature_scales").get<FeatureVector>();
    const auto& meta = j.at("metadata");
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.sample_count = meta.at("sample_count").get<std::size_t>();
    m.ridge_strength = meta.at("ridge_strength").get<double>();
    for (double s : m.feature_scales)
      if (!(s > 0.0)) throw Error(Errc::invalid_config, "non-positive scale");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("model json: ") + e.what());
  }
}

}  // namespace comfort
