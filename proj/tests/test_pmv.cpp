#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "comfort/pmv.hpp"
#include "helpers.hpp"

using comfort::compute_pmv;
using comfort::Errc;
using comfort::PmvInputs;
using comfort::pmv_to_ppd;
using Catch::Matchers::WithinAbs;

namespace {

struct GoldenRow {
  double ta, tr, vel, rh, met, clo;
  double pmv_ref, ppd_ref;
};

// Published validation rows for the heat-balance model (two-decimal
// references, so agreement well inside 0.05 is expected).
constexpr GoldenRow kGolden[] = {
    {22.0, 22.0, 0.10, 60, 1.2, 0.5, -0.75, 17},
    {27.0, 27.0, 0.10, 60, 1.2, 0.5, 0.77, 18},
    {27.0, 27.0, 0.30, 60, 1.2, 0.5, 0.44, 9},
    {23.5, 25.5, 0.10, 60, 1.2, 0.5, -0.01, 5},
    {23.5, 25.5, 0.30, 60, 1.2, 0.5, -0.55, 11},
    {19.0, 19.0, 0.10, 40, 1.2, 1.0, -0.60, 13},
    {23.5, 23.5, 0.10, 40, 1.2, 1.0, 0.36, 8},
    {23.5, 23.5, 0.30, 40, 1.2, 1.0, 0.12, 5},
    {23.0, 21.0, 0.10, 40, 1.2, 1.0, 0.05, 5},
    {23.0, 21.0, 0.30, 40, 1.2, 1.0, -0.16, 6},
    {22.0, 22.0, 0.10, 60, 1.6, 0.5, 0.05, 5},
    {27.0, 27.0, 0.10, 60, 1.6, 0.5, 1.17, 34},
    {27.0, 27.0, 0.30, 60, 1.6, 0.5, 0.95, 24},
};

PmvInputs inputs(double ta, double tr, double vel, double rh, double met,
                 double clo) {
  return PmvInputs{ta, tr, vel, rh, met, clo};
}

}  // namespace

TEST_CASE("pmv matches the published validation table") {
  for (const auto& row : kGolden) {
    const double pmv =
        compute_pmv(inputs(row.ta, row.tr, row.vel, row.rh, row.met, row.clo));
    INFO("ta=" << row.ta << " tr=" << row.tr << " vel=" << row.vel
               << " rh=" << row.rh << " met=" << row.met
               << " clo=" << row.clo);
    CHECK_THAT(pmv, WithinAbs(row.pmv_ref, 0.05));
    CHECK_THAT(pmv_to_ppd(pmv), WithinAbs(row.ppd_ref, 1.0));
  }
}

TEST_CASE("pmv canonical example to full precision") {
  const double pmv = compute_pmv(inputs(22.0, 22.0, 0.10, 60, 1.2, 0.5));
  CHECK_THAT(pmv, WithinAbs(-0.7530503293500926, 1e-9));
  CHECK_THAT(pmv_to_ppd(pmv), WithinAbs(16.943, 1e-3));
}

TEST_CASE("pmv is deterministic") {
  const auto in = inputs(24.3, 23.1, 0.17, 47.0, 1.3, 0.61);
  const double a = compute_pmv(in);
  const double b = compute_pmv(in);
  CHECK(a == b);
}

TEST_CASE("pmv increases strictly with air temperature") {
  double prev = -1e9;
  for (int i = 0; i <= 25; ++i) {
    const double ta = 10.0 + i;
    const double pmv = compute_pmv(inputs(ta, ta, 0.10, 50, 1.2, 0.5));
    INFO("ta=" << ta);
    CHECK(pmv > prev);
    prev = pmv;
  }
}

TEST_CASE("pmv increases with clothing on the cool side") {
  double prev = -1e9;
  for (int i = 0; i <= 30; ++i) {
    const double clo = 0.05 * i;
    const double pmv = compute_pmv(inputs(18.0, 18.0, 0.10, 50, 1.2, clo));
    INFO("clo=" << clo);
    CHECK(pmv > prev);
    prev = pmv;
  }
}

TEST_CASE("warm room rates above cool room") {
  const double warm = compute_pmv(inputs(26.0, 26.0, 0.10, 50, 1.2, 0.5));
  const double cool = compute_pmv(inputs(20.0, 20.0, 0.10, 50, 1.2, 0.5));
  CHECK(warm > cool);
}

TEST_CASE("pmv rejects out-of-range inputs") {
  const auto code = [](PmvInputs in) {
    return testutil::error_code_of([&] { (void)compute_pmv(in); });
  };
  CHECK(code(inputs(22, 22, 0.1, 150, 1.2, 0.5)) == Errc::out_of_range);
  CHECK(code(inputs(-20, 22, 0.1, 50, 1.2, 0.5)) == Errc::out_of_range);
  CHECK(code(inputs(22, 60, 0.1, 50, 1.2, 0.5)) == Errc::out_of_range);
  CHECK(code(inputs(22, 22, -0.1, 50, 1.2, 0.5)) == Errc::out_of_range);
  CHECK(code(inputs(22, 22, 0.1, 50, 0.2, 0.5)) == Errc::out_of_range);
  CHECK(code(inputs(22, 22, 0.1, 50, 1.2, 2.5)) == Errc::out_of_range);

  try {
    (void)compute_pmv(inputs(22, 22, 0.1, 150, 1.2, 0.5));
    FAIL("expected throw");
  } catch (const comfort::Error& e) {
    CHECK(std::string(e.what()).find("rel_humidity") != std::string::npos);
  }
}

TEST_CASE("ppd shape") {
  CHECK(pmv_to_ppd(0.0) == 5.0);
  CHECK_THAT(pmv_to_ppd(1.0), WithinAbs(26.119650083580567, 1e-12));
  CHECK_THAT(pmv_to_ppd(-1.0), WithinAbs(26.119650083580567, 1e-12));
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.25 * i;
    CHECK(pmv_to_ppd(x) == pmv_to_ppd(-x));
    CHECK(pmv_to_ppd(x) >= 5.0);
    CHECK(pmv_to_ppd(x) <= 100.0);
    if (i > 0) CHECK(pmv_to_ppd(x) > pmv_to_ppd(x - 0.25));
  }
}

TEST_CASE("tci clamp") {
  CHECK(comfort::clamp_tci(5.0).value == 3.0);
  CHECK(comfort::clamp_tci(-5.0).value == -3.0);
  CHECK(comfort::clamp_tci(1.25).value == 1.25);
  CHECK(comfort::clamp_tci(3.0).value == 3.0);
  CHECK(testutil::error_code_of(
            [] { (void)comfort::clamp_tci(std::nan("")); }) ==
        Errc::not_finite);
  CHECK(testutil::error_code_of([] {
          (void)comfort::clamp_tci(std::numeric_limits<double>::infinity());
        }) == Errc::not_finite);
}
