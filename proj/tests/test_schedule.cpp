#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "modfus/schedule.hpp"

using modfus::NoiseSchedule;
using modfus::ScheduleKind;

TEST_SUITE("schedule") {

TEST_CASE("variance preservation and monotonicity hold for every kind and T") {
  for (auto kind : {ScheduleKind::Cosine, ScheduleKind::LinearBeta}) {
    for (int T : {10, 100, 200}) {
      NoiseSchedule s = modfus::build_schedule(kind, T);
      REQUIRE(s.T == T);
      REQUIRE(s.v.size() == static_cast<std::size_t>(T + 1));
      REQUIRE(s.mu.size() == static_cast<std::size_t>(T + 1));
      REQUIRE(s.sigma.size() == static_cast<std::size_t>(T + 1));
      CHECK(s.mu[0] == 1.0);
      CHECK(s.sigma[0] == 0.0);
      for (int t = 1; t <= T; ++t) {
        CHECK(s.v[t] > 0.0);
        CHECK(s.v[t] < 1.0);
        CHECK(s.mu[t] < s.mu[t - 1]);
        CHECK(std::abs(s.mu[t] * s.mu[t] + s.sigma[t] * s.sigma[t] - 1.0) < 1e-12);
      }
      if (kind == ScheduleKind::Cosine) CHECK(s.mu[T] <= 0.01);
    }
  }
}

TEST_CASE("cosine T=100 matches an independent evaluation of its formula") {
  // Frozen from a separate evaluation of mu_t = cos(((t/T + s)/(1 + s)) *
  // pi/2) / cos(s*pi/(2(1+s))) with the same v-clipping pipeline.
  NoiseSchedule s = modfus::build_schedule(ScheduleKind::Cosine, 100);
  CHECK(s.mu[1] == doctest::Approx(0.9996843093705424).epsilon(1e-12));
  CHECK(s.mu[50] == doctest::Approx(0.7027400589411691).epsilon(1e-12));
  CHECK(s.mu[100] == doctest::Approx(1.5583877179155568e-05).epsilon(1e-9));
  CHECK(s.v[100] == doctest::Approx(0.001).epsilon(1e-12));

  // The retention sequence itself decays monotonically.
  for (int t = 2; t <= 100; ++t) CHECK(s.v[t] < s.v[t - 1]);
}

TEST_CASE("linear-beta endpoints follow the ramp") {
  NoiseSchedule s = modfus::build_schedule(ScheduleKind::LinearBeta, 100);
  CHECK(s.v[1] == doctest::Approx(std::sqrt(1.0 - 1e-4)).epsilon(1e-12));
  CHECK(s.v[100] == doctest::Approx(std::sqrt(1.0 - 0.02)).epsilon(1e-12));
}

TEST_CASE("kind strings round-trip") {
  CHECK(modfus::schedule_kind_from_string("cosine") == ScheduleKind::Cosine);
  CHECK(modfus::schedule_kind_from_string("linear_beta") == ScheduleKind::LinearBeta);
  CHECK(modfus::schedule_kind_to_string(ScheduleKind::Cosine) == "cosine");
  CHECK_THROWS_AS(modfus::schedule_kind_from_string("quadratic"), std::invalid_argument);
}

TEST_CASE("degenerate T is rejected") {
  CHECK_THROWS_AS(modfus::build_schedule(ScheduleKind::Cosine, 1), std::invalid_argument);
  CHECK_THROWS_AS(modfus::build_schedule(ScheduleKind::Cosine, 0), std::invalid_argument);
  CHECK_NOTHROW(modfus::build_schedule(ScheduleKind::Cosine, 2));
}

}  // TEST_SUITE
