#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "comfort/occupant.hpp"
#include "comfort/plant.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using comfort::Errc;
using comfort::hvac_power;
using comfort::PhysioSample;
using comfort::plant_step;
using comfort::RoomPlant;
using comfort::sample_occupant;
using comfort::stability_bound;
using comfort::SyntheticOccupant;
using comfort::true_tci;
using comfort::validate_occupant;
using comfort::validate_plant;
using Catch::Matchers::WithinAbs;

namespace {

RoomPlant bench_plant() {
  RoomPlant p;
  p.thermal_capacitance = 2.0e5;
  p.loss_coefficient = 80.0;
  p.proportional_gain = 2000.0;
  p.hvac_max_power = 2500.0;
  p.outdoor_temp = 20.0;
  p.air_temp = 28.0;
  return p;
}

SyntheticOccupant bench_occupant() {
  SyntheticOccupant o;
  o.occupant_id = "w-01";
  o.true_neutral_temp = 23.0;
  o.true_sensitivity = 0.5;
  o.hr_base = 70.0;
  o.hr_slope = 2.0;
  o.gsr_base = 2.0;
  o.gsr_slope = 0.6;
  return o;
}

}  // namespace

TEST_CASE("plant validation") {
  CHECK_NOTHROW(validate_plant(bench_plant()));
  auto p = bench_plant();
  p.thermal_capacitance = 0.0;
  CHECK(testutil::error_code_of([&] { validate_plant(p); }) ==
        Errc::invalid_config);
  p = bench_plant();
  p.loss_coefficient = -1.0;
  CHECK(testutil::error_code_of([&] { validate_plant(p); }) ==
        Errc::invalid_config);
  p = bench_plant();
  p.loss_coefficient = 0.0;
  CHECK_NOTHROW(validate_plant(p));
  p = bench_plant();
  p.proportional_gain = 0.0;
  CHECK(testutil::error_code_of([&] { validate_plant(p); }) ==
        Errc::invalid_config);
  p = bench_plant();
  p.hvac_max_power = 0.0;
  CHECK(testutil::error_code_of([&] { validate_plant(p); }) ==
        Errc::invalid_config);
}

TEST_CASE("stability bound value") {
  CHECK_THAT(stability_bound(bench_plant()),
             WithinAbs(2.0e5 / 2080.0, 1e-9));
  RoomPlant d;
  CHECK_THAT(stability_bound(d), WithinAbs(2.0e6 / 230.0, 1e-9));
}

TEST_CASE("equilibrium state is a fixed point") {
  auto p = bench_plant();
  p.air_temp = 20.0;
  p.outdoor_temp = 20.0;
  const auto next = plant_step(p, 20.0, 10.0);
  CHECK(next.air_temp == 20.0);
}

TEST_CASE("without a setpoint the room drifts toward outdoors") {
  auto p = bench_plant();
  p.air_temp = 25.0;
  p.outdoor_temp = 15.0;
  double prev = p.air_temp;
  for (int i = 0; i < 200; ++i) {
    p = plant_step(p, std::nullopt, 10.0);
    CHECK(p.air_temp < prev);
    CHECK(p.air_temp > 15.0);
    prev = p.air_temp;
  }
}

TEST_CASE("saturated heating with a lossless envelope ramps linearly") {
  RoomPlant p;
  p.thermal_capacitance = 1.0e5;
  p.loss_coefficient = 0.0;
  p.proportional_gain = 1.0e6;
  p.hvac_max_power = 1000.0;
  p.outdoor_temp = 10.0;
  p.air_temp = 20.0;
  const double dt = 10.0;
  for (int k = 1; k <= 50; ++k) {
    CHECK(hvac_power(p, 30.0) == 1000.0);
    p = plant_step(p, 30.0, dt);
    const double closed = 20.0 + static_cast<double>(k) * dt * 1000.0 / 1.0e5;
    CHECK_THAT(p.air_temp, WithinAbs(closed, 1e-9));
  }
}

TEST_CASE("hvac power follows the clamped proportional law") {
  auto p = bench_plant();
  p.air_temp = 22.0;
  CHECK(hvac_power(p, std::nullopt) == 0.0);
  CHECK(hvac_power(p, 22.5) == 2000.0 * 0.5);
  CHECK(hvac_power(p, 30.0) == 2500.0);
  CHECK(hvac_power(p, 10.0) == -2500.0);
}

TEST_CASE("plant step validates dt") {
  auto p = bench_plant();
  CHECK(testutil::error_code_of([&] {
          (void)plant_step(p, 23.0, 0.0);
        }) == Errc::invalid_config);
  CHECK(testutil::error_code_of([&] {
          (void)plant_step(p, 23.0, -5.0);
        }) == Errc::invalid_config);
}

TEST_CASE("steps inside the stability bound contract toward equilibrium") {
  using comfort::rng::splitmix64;
  using comfort::rng::u01;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const auto r = [&](std::uint64_t lane) {
      return u01(splitmix64(trial * 16 + lane));
    };
    RoomPlant p;
    p.thermal_capacitance = 1.0e5 + 1.9e6 * r(0);
    p.loss_coefficient = 5.0 + 195.0 * r(1);
    p.proportional_gain = 50.0 + 1950.0 * r(2);
    p.hvac_max_power = 500.0 + 4500.0 * r(3);
    p.outdoor_temp = 20.0 * r(4);
    p.air_temp = 5.0 + 35.0 * r(5);
    const double sp = 18.0 + 10.0 * r(6);
    const double dt = 0.9 * stability_bound(p);
    const double eq = oracle::plant_equilibrium(p, sp);
    double gap = std::abs(p.air_temp - eq);
    INFO("trial " << trial << " eq=" << eq);
    for (int k = 0; k < 200; ++k) {
      p = plant_step(p, sp, dt);
      const double next_gap = std::abs(p.air_temp - eq);
      CHECK(next_gap <= gap + 1e-12);
      gap = next_gap;
    }
  }
}

TEST_CASE("bench plant settles within the control tolerance") {
  auto p = bench_plant();
  for (int k = 0; k < 600; ++k) p = plant_step(p, 23.0, 10.0);
  const double eq = oracle::plant_equilibrium(p, 23.0);
  CHECK_THAT(p.air_temp, WithinAbs(eq, 1e-6));
  CHECK(std::abs(p.air_temp - 23.0) <= 0.2);
}

TEST_CASE("noise-free samples reproduce the response laws exactly") {
  const auto o = bench_occupant();
  const auto at_neutral = sample_occupant(o, 23.0, 100.0);
  CHECK(at_neutral.heart_rate == 70.0);
  CHECK(at_neutral.gsr == 2.0);
  CHECK(at_neutral.clothing_insulation == 0.5);
  CHECK(at_neutral.metabolic_rate == 1.2);
  CHECK(at_neutral.occupant_id == "w-01");
  CHECK(at_neutral.timestamp == 100.0);

  const auto warm = sample_occupant(o, 25.0, 100.0);
  CHECK(warm.heart_rate == 70.0 + 2.0 * 2.0);
  CHECK(warm.gsr == 2.0 + 0.6 * 2.0);

  const auto cool = sample_occupant(o, 20.0, 100.0);
  CHECK(cool.heart_rate == 70.0 + 2.0 * -3.0);
  CHECK(cool.gsr == 2.0);
}

TEST_CASE("samples clamp into the physiological ranges") {
  auto o = bench_occupant();
  o.hr_slope = 10.0;
  CHECK(sample_occupant(o, 50.0, 0.0).heart_rate == 249.5);
  CHECK(sample_occupant(o, -10.0, 0.0).heart_rate == 25.5);
  o = bench_occupant();
  o.gsr_base = 0.005;
  CHECK(sample_occupant(o, 20.0, 0.0).gsr == 0.01);
}

TEST_CASE("noisy samples are reproducible and stay in range") {
  auto o = bench_occupant();
  o.hr_noise_sd = 3.0;
  o.gsr_noise_sd = 0.5;
  o.rng_seed = 77;
  const auto a = sample_occupant(o, 24.0, 60.0);
  const auto b = sample_occupant(o, 24.0, 60.0);
  CHECK(a.heart_rate == b.heart_rate);
  CHECK(a.gsr == b.gsr);
  CHECK(comfort::physio_in_range(a));

  const auto later = sample_occupant(o, 24.0, 61.0);
  CHECK(later.heart_rate != a.heart_rate);

  auto other = o;
  other.occupant_id = "w-02";
  CHECK(sample_occupant(other, 24.0, 60.0).heart_rate != a.heart_rate);

  for (int i = 0; i < 500; ++i)
    CHECK(comfort::physio_in_range(sample_occupant(o, 16.0 + 0.028 * i,
                                                   static_cast<double>(i))));
}

TEST_CASE("ground-truth comfort is linear and clamped") {
  const auto o = bench_occupant();
  CHECK(true_tci(o, 23.0).value == 0.0);
  CHECK(true_tci(o, 25.0).value == 1.0);
  CHECK(true_tci(o, 21.0).value == -1.0);
  CHECK(true_tci(o, 33.0).value == 3.0);
  CHECK(true_tci(o, 13.0).value == -3.0);
}

TEST_CASE("occupant validation") {
  CHECK_NOTHROW(validate_occupant(bench_occupant()));
  auto o = bench_occupant();
  o.occupant_id = "";
  CHECK(testutil::error_code_of([&] { validate_occupant(o); }) ==
        Errc::invalid_config);
  o = bench_occupant();
  o.hr_base = 150.0;
  CHECK(testutil::error_code_of([&] { validate_occupant(o); }) ==
        Errc::invalid_config);
  o = bench_occupant();
  o.true_sensitivity = 0.0;
  CHECK(testutil::error_code_of([&] { validate_occupant(o); }) ==
        Errc::invalid_config);
  o = bench_occupant();
  o.hr_noise_sd = -0.1;
  CHECK(testutil::error_code_of([&] { validate_occupant(o); }) ==
        Errc::invalid_config);
  o = bench_occupant();
  o.metabolic_rate = 5.0;
  CHECK(testutil::error_code_of([&] { validate_occupant(o); }) ==
        Errc::invalid_config);
}

TEST_CASE("counter-based rng reference vectors") {
  using namespace comfort::rng;
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(1) == 0x910A2DEC89025CC1ull);
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const double u = u01(splitmix64(i));
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  CHECK(gaussian(42) == gaussian(42));
  CHECK(gaussian(42) != gaussian(43));
}
