#include <doctest.h>

#include "nonuniq/stationary.hpp"

#include <cmath>

using namespace nonuniq;

TEST_CASE("singular solution of u^3 in five dimensions matches sqrt(2)/r") {
  const auto nl = power(3);
  const auto prof = singular_solution(nl, 5, 0.01, 10);
  double worst = 0;
  for (std::size_t i = 0; i < prof.r().size(); ++i) {
    const double r = prof.r()[i];
    worst = std::max(worst, std::abs(prof.u()[i] - std::sqrt(2.0) / r) / (std::sqrt(2.0) / r));
    CHECK(prof.du()[i] == doctest::Approx(-std::sqrt(2.0) / (r * r)).epsilon(1e-6));
  }
  CHECK(worst <= 1e-6);
  CHECK(prof.positive);
  CHECK(prof.decreasing);
  CHECK(prof.seed_halving_difference <= 1e-8);
}

TEST_CASE("singular solution of e^u is -2 log r + log 6") {
  const auto prof = singular_solution(exponential(), 5, 0.01, 10);
  double worst = 0;
  for (std::size_t i = 0; i < prof.r().size(); ++i) {
    const double r = prof.r()[i];
    worst = std::max(worst, std::abs(prof.u()[i] - (-2 * std::log(r) + std::log(6.0))));
  }
  CHECK(worst <= 1e-6);
  // u* changes sign at sqrt(6); positivity is reported, not enforced.
  CHECK_FALSE(prof.positive);
  CHECK(prof.decreasing);
}

TEST_CASE("asymptotic correction vanishes at the origin for u^3 + u^2.5") {
  const auto nl = example3(3, 2.5);
  const auto prof = singular_solution(nl, 5, 1e-3, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1e-1, 1e-2, 1e-3}) {
    const double th = std::abs(asymptotic_theta(nl, 5, prof.u_at(r), r));
    CHECK(th < prev);
    prev = th;
  }
  CHECK(prev < 1e-2);
  // r theta'(r) -> 0 along a dyadic sequence.
  double prev_d = std::numeric_limits<double>::infinity();
  for (double r = 0.064; r >= 1e-3; r /= 2) {
    const double h = 1e-4 * r;
    const double d = r * (asymptotic_theta(nl, 5, prof.u_at(r + h), r + h) -
                          asymptotic_theta(nl, 5, prof.u_at(r - h), r - h)) / (2 * h);
    CHECK(std::abs(d) < prev_d);
    prev_d = std::abs(d);
  }
  CHECK(prof.seed_halving_difference <= 1e-8);
}

TEST_CASE("ODE residual and integral identity") {
  for (const auto& nl : {power(3), exponential(), example1(5, 2), example3(3, 2.5)}) {
    const auto prof = singular_solution(nl, 5, 1e-3, 5);
    CHECK_MESSAGE(ode_residual(prof, nl) < 1e-6, nl.name());
    const std::vector<double> radii{2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1, 2};
    CHECK_MESSAGE(integral_identity_error(prof, nl, radii) < 1e-7, nl.name());
  }
}

TEST_CASE("regular solutions") {
  const auto nl = exponential();
  const auto prof = shoot_regular(nl, 5, 1.0, 1.0);
  CHECK(prof.positive);
  CHECK(prof.decreasing);
  CHECK(prof.u_at(0.0) == 1.0);
  CHECK(prof.du_at(0.0) == 0.0);
  // Step-halving reference: a tighter tolerance reproduces the profile.
  StationaryOptions tight;
  tight.rtol = 1e-12;
  const auto ref = shoot_regular(nl, 5, 1.0, 1.0, tight);
  for (double r : {0.1, 0.5, 1.0}) CHECK(prof.u_at(r) == doctest::Approx(ref.u_at(r)).epsilon(1e-9));
  CHECK(ode_residual(prof, nl) < 1e-6);

  // Small data: comparison with alpha + f(alpha) r^2.
  const auto p3 = power(3);
  const double alpha = 1e-3;
  const auto small = shoot_regular(p3, 5, alpha, 3.0);
  for (double r : small.r()) CHECK(small.u_at(r) <= alpha + p3.f(alpha) * 9);
}

TEST_CASE("regular solution zero crossing is located") {
  // For p = 3 < p_S in N = 3 every regular solution has a zero.
  const auto prof = shoot_regular(power(3), 3, 1.0, 50.0);
  REQUIRE(prof.zero_crossing.has_value());
  CHECK(std::abs(prof.u_at(*prof.zero_crossing)) < 1e-10);
}

TEST_CASE("regular solutions converge to the singular one") {
  const auto rep = convergence_to_singular(power(3), 5, {10, 100, 1000});
  CHECK(rep.decreasing);
  const auto rep_e = convergence_to_singular(exponential(), 5, {5, 10, 20});
  CHECK(rep_e.decreasing);
  const auto single = convergence_to_singular(power(3), 5, {50});
  CHECK(single.distances.size() == 1);
}

TEST_CASE("decay bounds") {
  const auto p3 = singular_solution(power(3), 5, 1e-3, 2);
  const auto d1 = decay_bounds_check(p3, power(3), 0.01);
  CHECK(d1.exponent_u == doctest::Approx(-1.02));
  CHECK(d1.holds_u);
  CHECK(d1.holds_du);
  const auto pe = singular_solution(exponential(), 5, 1e-3, 2);
  const auto d2 = decay_bounds_check(pe, exponential(), 0.1);
  CHECK(d2.holds_u);
  CHECK(d2.holds_du);
  const auto nl3 = example3(3, 2.5);
  const auto d3 = decay_bounds_check(singular_solution(nl3, 5, 1e-3, 2), nl3, 0.05);
  CHECK(d3.holds_u);
  CHECK(d3.holds_du);
  CHECK(d3.C_admissible >= d3.C_fit);
}

TEST_CASE("Pohozaev functional") {
  const auto nl = power(3);
  const auto prof = singular_solution(nl, 5, 1e-3, 5);
  const auto rep = pohozaev_scan(prof, nl);
  CHECK(rep.tends_to_zero);
  CHECK(rep.nonincreasing);
  CHECK(rep.identity_error < 1e-5);
  // Exact value P = -r for u* = sqrt(2)/r.
  for (const auto& s : rep.samples) CHECK(s.P == doctest::Approx(-s.r).epsilon(1e-6));

  const auto crit = power(7.0 / 3);
  const auto pc = pohozaev_scan(singular_solution(crit, 5, 1e-3, 5), crit);
  const double P0 = pc.samples.front().P;
  for (const auto& s : pc.samples) {
    CHECK(std::abs(s.Q) <= 1e-9 * std::abs(s.r * 0 + 1) * std::pow(prof.u_at(s.r), 4));
    CHECK(s.P == doctest::Approx(P0).epsilon(1e-6));
  }

  const auto ex = exponential();
  const auto pe = pohozaev_scan(singular_solution(ex, 5, 1e-3, 5), ex);
  CHECK(pe.tends_to_zero);
  for (const auto& s : pe.samples) {
    if (s.r < 0.5) CHECK(s.P < 0);
  }
}
