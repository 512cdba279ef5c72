#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tdg/calibration.hpp"

using namespace tdg;

TEST_CASE("estimate_size matches analytic sizes") {
  // Simes is exact under independence
  double s = estimate_size(CriticalValueFamily::simes(0.05), 5, 100000, 42);
  CHECK(s == doctest::Approx(0.05).epsilon(0.15));
  // admissible m=2 has exact size t^2 = alpha with t = (2 - c_2)/(2 c_2)
  double s2 = estimate_size(CriticalValueFamily::kr_admissible(0.05), 2, 100000, 42);
  CHECK(s2 == doctest::Approx(0.05).epsilon(0.15));
  // all-negative thresholds never fire
  auto dead = CriticalValueFamily::kr_original(0.05);
  CHECK(estimate_size(dead, 1, 10000, 42) == 0.0);
  CHECK_THROWS_AS(estimate_size(dead, 0, 100, 42), std::domain_error);
  CHECK_THROWS_AS(estimate_size(dead, 1, 0, 42), std::domain_error);
}

TEST_CASE("calibrate_cm reproduces the analytic anchors") {
  auto r1 = calibrate_cm(0.05, 1, 100000, 7);
  CHECK(r1.c_m == doctest::Approx(kr_c1(0.05)).epsilon(0.005));
  auto r2 = calibrate_cm(0.05, 2, 100000, 7);
  CHECK(r2.c_m == doctest::Approx(kr_c2(0.05)).epsilon(0.01));
  CHECK(r1.standard_error > 0.0);
  CHECK(r1.samples == 100000);
  CHECK(r1.alpha == 0.05);
  CHECK_THROWS_AS(calibrate_cm(0.0, 1, 100, 7), std::domain_error);
  CHECK_THROWS_AS(calibrate_cm(0.05, 1, 100, 7, -1.0), std::domain_error);
}

TEST_CASE("c_m lies between c_1 and c and is nondecreasing in m") {
  double prev = 0.0;
  for (int m : {1, 2, 5, 10, 20}) {
    auto r = calibrate_cm(0.05, m, 50000, 11);
    CHECK(r.c_m >= kr_c1(0.05) - 1e-9);
    CHECK(r.c_m <= kr_c_constant(0.05) + 1e-9);
    CHECK(r.c_m >= prev - 0.02);  // Monte Carlo slack
    prev = r.c_m;
  }
}

TEST_CASE("calibrated constant actually controls the size") {
  auto r = calibrate_cm(0.05, 7, 50000, 3);
  auto fam = CriticalValueFamily::kr_admissible(0.05, {{7, r.c_m}});
  // fresh seed: independent estimate of the size at the calibrated constant
  double s = estimate_size(fam, 7, 100000, 999);
  CHECK(s <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 100000) + 0.003);
}

TEST_CASE("results are reproducible and thread-count independent") {
  auto a = calibrate_cm(0.05, 5, 20000, 123, 1e-4, 1);
  auto b = calibrate_cm(0.05, 5, 20000, 123, 1e-4, 8);
  CHECK(a.c_m == b.c_m);
  CHECK(a.standard_error == b.standard_error);
  double s1 = estimate_size(CriticalValueFamily::simes(0.05), 4, 20000, 5, 1);
  double s8 = estimate_size(CriticalValueFamily::simes(0.05), 4, 20000, 5, 8);
  CHECK(s1 == s8);
}

TEST_CASE("exhaustion gap flags improvable tests") {
  // original thresholds at m=1 are negative: size 0, gap = alpha
  CHECK(exhaustion_gap(CriticalValueFamily::kr_original(0.05), 1, 10000, 2) ==
        doctest::Approx(0.05));
  // admissible and Simes exhaust alpha
  CHECK(std::abs(exhaustion_gap(CriticalValueFamily::kr_admissible(0.05), 5, 100000, 2)) <
        0.005);
  CHECK(std::abs(exhaustion_gap(CriticalValueFamily::simes(0.05), 8, 100000, 2)) < 0.005);
}
