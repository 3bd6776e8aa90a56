#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "comfort/profile.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using comfort::build_group_profile;
using comfort::Errc;
using comfort::estimate_neutral_temp;
using comfort::FeatureFn;
using comfort::FeatureVector;
using comfort::GroupThermalProfile;
using comfort::OccupantProfile;
using comfort::select_setpoint;
using comfort::TciModel;
using Catch::Matchers::WithinAbs;

namespace {

// Model that reads the heart-rate channel only: predicted TCI is
// 0.25 * (hr - 70), so a feature fn with hr = 70 + 2*(t - n) yields a
// linear comfort curve 0.5 * (t - n).
TciModel hr_channel_model() {
  TciModel m;
  m.coefficients.fill(0.0);
  m.feature_means.fill(0.0);
  m.feature_scales.fill(1.0);
  m.coefficients[0] = 0.25;
  m.feature_means[0] = 70.0;
  return m;
}

FeatureFn hr_curve(const std::function<double(double)>& hr_of_t) {
  return [hr_of_t](double t) {
    FeatureVector f{};
    f.fill(0.0);
    f[0] = hr_of_t(t);
    f[6] = t;
    return f;
  };
}

FeatureFn linear_occupant(double neutral, double tci_slope) {
  return hr_curve(
      [=](double t) { return 70.0 + 4.0 * tci_slope * (t - neutral); });
}

std::vector<OccupantProfile> make_members(std::vector<double> neutrals) {
  std::vector<OccupantProfile> m;
  for (std::size_t i = 0; i < neutrals.size(); ++i)
    m.push_back({"occ-" + std::to_string(i + 1), neutrals[i], 0.5});
  return m;
}

}  // namespace

TEST_CASE("group statistics follow the mean and population sd") {
  const auto members = make_members({21, 22, 23, 24, 25});
  const auto g = build_group_profile(members);
  CHECK(g.t_bar == 23.0);
  CHECK(g.sigma == std::sqrt(2.0));
  CHECK_THAT(g.band_lo, WithinAbs(21.585786437626904, 1e-12));
  CHECK_THAT(g.band_hi, WithinAbs(24.414213562373096, 1e-12));
  CHECK(g.members.size() == 5);
  CHECK_FALSE(g.t0.has_value());
}

TEST_CASE("empty group is rejected") {
  CHECK(testutil::error_code_of([] {
          (void)build_group_profile(std::vector<OccupantProfile>{});
        }) == Errc::empty_group);
}

TEST_CASE("single occupant gets their own neutral temperature") {
  const auto members = make_members({24.2});
  const auto g = build_group_profile(members);
  CHECK(g.sigma == 0.0);
  CHECK(g.band_lo == g.band_hi);
  const auto model = hr_channel_model();
  const std::vector<FeatureFn> fns{linear_occupant(24.2, 0.5)};
  const auto search = select_setpoint(g, model, fns, 0.1);
  CHECK(search.t0 == 24.2);
  CHECK(search.objective.size() == 1);
}

TEST_CASE("symmetric pair lands midway") {
  const auto g = build_group_profile(make_members({21, 25}));
  const auto model = hr_channel_model();
  const std::vector<FeatureFn> fns{linear_occupant(21, 0.5),
                                   linear_occupant(25, 0.5)};
  const auto search = select_setpoint(g, model, fns, 0.1);
  CHECK_THAT(search.t0, WithinAbs(23.0, 1e-9));
}

TEST_CASE("five equal slopes stay near the mean") {
  const auto g = build_group_profile(make_members({21, 22, 23, 24, 25}));
  const auto model = hr_channel_model();
  std::vector<FeatureFn> fns;
  for (double n : {21, 22, 23, 24, 25})
    fns.push_back(linear_occupant(n, 0.5));
  const auto search = select_setpoint(g, model, fns, 0.1);
  CHECK_THAT(search.t0, WithinAbs(23.0, 0.1));
  CHECK(search.t0 >= g.band_lo);
  CHECK(search.t0 <= g.band_hi);
}

TEST_CASE("a more sensitive occupant pulls the setpoint their way") {
  const auto g = build_group_profile(make_members({21, 22, 23, 24, 25}));
  const auto model = hr_channel_model();
  std::vector<FeatureFn> equal, skewed;
  for (double n : {21, 22, 23, 24, 25}) {
    equal.push_back(linear_occupant(n, 0.5));
    skewed.push_back(linear_occupant(n, n == 25 ? 1.5 : 0.5));
  }
  const double t_equal = select_setpoint(g, model, equal, 0.1).t0;
  const double t_skewed = select_setpoint(g, model, skewed, 0.1).t0;
  CHECK(t_skewed > t_equal);
  CHECK(t_skewed <= g.band_hi);

  const auto objective = [&](double t) {
    double obj = 0.0;
    for (const auto& fn : skewed) {
      const double v = comfort::predict_tci(model, fn(t)).value;
      obj += v * v;
    }
    return obj;
  };
  const double fine = oracle::scan_argmin(objective, g.band_lo, g.band_hi);
  CHECK_THAT(t_skewed, WithinAbs(fine, 0.1));
}

TEST_CASE("setpoint matches a fine-grid scan on varied groups") {
  const auto model = hr_channel_model();
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    std::vector<double> neutrals;
    std::vector<FeatureFn> fns;
    std::vector<OccupantProfile> members;
    for (int i = 0; i < 4; ++i) {
      const auto h = comfort::rng::splitmix64(seed * 100 + i);
      const double n = 20.0 + 6.0 * comfort::rng::u01(h);
      const double s =
          0.3 + 1.2 * comfort::rng::u01(comfort::rng::splitmix64(h));
      neutrals.push_back(n);
      members.push_back({"occ-" + std::to_string(i), n, s});
      fns.push_back(linear_occupant(n, s));
    }
    const auto g = build_group_profile(members);
    const auto search = select_setpoint(g, model, fns, 0.1);
    const auto objective = [&](double t) {
      double obj = 0.0;
      for (const auto& fn : fns) {
        const double v = comfort::predict_tci(model, fn(t)).value;
        obj += v * v;
      }
      return obj;
    };
    const double fine = oracle::scan_argmin(objective, g.band_lo, g.band_hi);
    INFO("seed " << seed);
    CHECK_THAT(search.t0, WithinAbs(fine, 0.1));
    CHECK(search.t0 >= g.band_lo);
    CHECK(search.t0 <= g.band_hi + 1e-12);
  }
}

TEST_CASE("member order does not matter") {
  std::vector<OccupantProfile> members = make_members({21, 22, 23, 24, 25});
  const auto model = hr_channel_model();
  std::vector<FeatureFn> fns;
  for (double n : {21, 22, 23, 24, 25})
    fns.push_back(linear_occupant(n, 0.5));

  const auto g1 = build_group_profile(members);
  const double t1 = select_setpoint(g1, model, fns, 0.1).t0;

  std::vector<std::size_t> order{4, 2, 0, 3, 1};
  std::vector<OccupantProfile> shuffled;
  std::vector<FeatureFn> shuffled_fns;
  for (auto i : order) {
    shuffled.push_back(members[i]);
    shuffled_fns.push_back(fns[i]);
  }
  const auto g2 = build_group_profile(shuffled);
  CHECK(g2.t_bar == g1.t_bar);
  CHECK(g2.sigma == g1.sigma);
  CHECK(select_setpoint(g2, model, shuffled_fns, 0.1).t0 == t1);
}

TEST_CASE("duplicating the mean never raises sigma") {
  const auto base = make_members({22, 24});
  const auto g = build_group_profile(base);
  auto extended = base;
  extended.push_back({"occ-mean", g.t_bar, 0.5});
  CHECK(build_group_profile(extended).sigma <= g.sigma);
}

TEST_CASE("ties break toward the mean, then the lower temperature") {
  // Zero objective everywhere: every candidate ties, so the rule decides.
  TciModel flat;
  flat.coefficients.fill(0.0);
  flat.feature_means.fill(0.0);
  flat.feature_scales.fill(1.0);
  const auto g = build_group_profile(make_members({22.75, 23.25}));
  REQUIRE(g.band_lo == 22.75);
  REQUIRE(g.band_hi == 23.25);
  const std::vector<FeatureFn> fns{linear_occupant(22.75, 0.5),
                                   linear_occupant(23.25, 0.5)};
  // grid_step 0.5: candidates 22.75 and 23.25, equidistant from 23.0
  const auto search = select_setpoint(g, flat, fns, 0.5);
  CHECK(search.t0 == 22.75);
  // grid_step 0.25: candidate 23.0 sits at distance zero and wins
  CHECK(select_setpoint(g, flat, fns, 0.25).t0 == 23.0);
}

TEST_CASE("neutral estimation recovers a linear curve") {
  const auto model = hr_channel_model();
  const auto est =
      estimate_neutral_temp(model, linear_occupant(23.0, 0.5), 16, 30, 0.5);
  CHECK_THAT(est.neutral_temp, WithinAbs(23.0, 0.01));
  CHECK_THAT(est.sensitivity, WithinAbs(0.5, 1e-9));
}

TEST_CASE("neutral estimation matches a fine scan on a curved response") {
  const auto model = hr_channel_model();
  const auto fn = hr_curve([](double t) {
    const double d = t - 22.0;
    return 70.0 + 0.32 * d * d * d + 4.8 * d;
  });
  const auto est = estimate_neutral_temp(model, fn, 16, 30, 0.5);
  const auto tci = [&](double t) {
    return comfort::predict_tci(model, fn(t)).value;
  };
  const double fine = oracle::scan_zero_crossing(tci, 16, 30);
  CHECK_THAT(est.neutral_temp, WithinAbs(fine, 0.01));
  CHECK(est.sensitivity > 0.0);
}

TEST_CASE("neutral estimation handles an exact grid hit") {
  const auto model = hr_channel_model();
  const auto est =
      estimate_neutral_temp(model, linear_occupant(23.0, 0.5), 16, 30, 0.5);
  CHECK(est.neutral_temp == 23.0);
}

TEST_CASE("neutral estimation failure modes") {
  const auto model = hr_channel_model();
  CHECK(testutil::error_code_of([&] {
          (void)estimate_neutral_temp(
              model, hr_curve([](double) { return 74.0; }), 16, 30, 0.5);
        }) == Errc::no_neutral_point);

  // crosses zero at 21 and 25
  const auto parabola = hr_curve([](double t) {
    return 70.0 + 0.8 * ((t - 23.0) * (t - 23.0) - 4.0);
  });
  CHECK(testutil::error_code_of([&] {
          (void)estimate_neutral_temp(model, parabola, 16, 30, 0.5);
        }) == Errc::non_monotone);

  CHECK(testutil::error_code_of([&] {
          (void)estimate_neutral_temp(model, linear_occupant(23.0, -0.5), 16,
                                      30, 0.5);
        }) == Errc::non_monotone);

  CHECK(testutil::error_code_of([&] {
          (void)estimate_neutral_temp(model, linear_occupant(23, 0.5), 30, 16,
                                      0.5);
        }) == Errc::invalid_config);
}

TEST_CASE("setpoint argument validation") {
  const auto model = hr_channel_model();
  GroupThermalProfile empty;
  CHECK(testutil::error_code_of([&] {
          (void)select_setpoint(empty, model, std::vector<FeatureFn>{}, 0.1);
        }) == Errc::empty_group);

  const auto g = build_group_profile(make_members({22, 24}));
  const std::vector<FeatureFn> one{linear_occupant(22, 0.5)};
  CHECK_THROWS_AS((void)select_setpoint(g, model, one, 0.1),
                  std::invalid_argument);
  const std::vector<FeatureFn> two{linear_occupant(22, 0.5),
                                   linear_occupant(24, 0.5)};
  CHECK(testutil::error_code_of([&] {
          (void)select_setpoint(g, model, two, 0.0);
        }) == Errc::invalid_config);
}

TEST_CASE("group profile export") {
  auto g = build_group_profile(make_members({22, 24}));
  g.t0 = 23.0;
  const std::vector<std::pair<double, double>> trace{{22.9, 0.1}, {23.0, 0.0}};
  const auto j = comfort::group_profile_to_json(g, &trace);
  CHECK(j.at("members").size() == 2);
  CHECK(j.at("t_bar").get<double>() == 23.0);
  CHECK(j.at("sigma").get<double>() == 1.0);
  CHECK(j.at("band")[0].get<double>() == 22.0);
  CHECK(j.at("band")[1].get<double>() == 24.0);
  CHECK(j.at("t0").get<double>() == 23.0);
  CHECK(j.at("objective_trace").size() == 2);
  const auto bare = comfort::group_profile_to_json(g);
  CHECK_FALSE(bare.contains("objective_trace"));
}
