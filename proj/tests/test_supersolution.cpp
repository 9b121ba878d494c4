#include <doctest.h>

#include "nonuniq/supersolution.hpp"

#include <cmath>

using namespace nonuniq;

namespace {

std::vector<double> log_times(double lo_exp, double hi_exp, int per_decade) {
  std::vector<double> ts;
  const int n = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
  for (int k = 0; k <= n; ++k) ts.push_back(std::pow(10.0, lo_exp + static_cast<double>(k) / per_decade));
  return ts;
}

}  // namespace

TEST_CASE("ubar is the canonical solution when f = f_q") {
  const Nonlinearity nl = power(3);
  const ProfileSolution prof = solve_profile(1.5, 5, 1.3, 20);
  for (double t : {1e-4, 1e-2, 0.5}) {
    for (double r : {0.0, 0.3 * std::sqrt(t), 2 * std::sqrt(t)}) {
      const double expected = prof.phi(r / std::sqrt(t)) / std::sqrt(t);
      CHECK(ubar(nl, prof, r, t) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("ubar at the origin") {
  const Nonlinearity nl = example1(5, 2);
  const ProfileSolution prof = solve_profile(1.0, 5, 2.5, 20);
  double prev = 0;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double u0 = ubar(nl, prof, 0, t);
    CHECK(nl.F(u0) == doctest::Approx(t * std::exp(-2.5)).epsilon(1e-9));
    CHECK(u0 > prev);
    prev = u0;
  }
}

TEST_CASE("analytic derivatives of ubar match differences") {
  const Nonlinearity nl = example1(5, 2);
  const ProfileSolution prof = solve_profile(1.0, 5, 2.5, 20);
  const double t = 1e-3, r = 0.02;
  const double hr = 1e-6, ht = 1e-9;
  const double dr = (ubar(nl, prof, r + hr, t) - ubar(nl, prof, r - hr, t)) / (2 * hr);
  const double dt = (ubar(nl, prof, r, t + ht) - ubar(nl, prof, r, t - ht)) / (2 * ht);
  CHECK(ubar_r(nl, prof, r, t) == doctest::Approx(dr).epsilon(1e-6));
  CHECK(ubar_t(nl, prof, r, t) == doctest::Approx(dt).epsilon(1e-5));
}

TEST_CASE("largeness threshold") {
  CHECK(u_large(power(3), 1.5) == 0.0);
  CHECK(u_large(exponential(), 1.0) == 0.0);
  // f'F = 1 exactly from u = 4 on
  const double l2 = u_large(example2(), 1.0);
  CHECK(l2 > 0);
  CHECK(l2 <= 4 * 1.05 + 1e-9);
  const Nonlinearity nl3 = example3(3, 2.5);
  const double l3 = u_large(nl3, 1.52);
  REQUIRE(std::isfinite(l3));
  for (double u : {l3, 2 * l3, 100 * l3}) CHECK(nl3.fprime_F(u) <= 1.52);
  CHECK(nl3.fprime_F(l3 / 1.05 / 1.01) > 1.52);
  CHECK(std::isinf(u_large(nl3, 1.5)));
}

TEST_CASE("residual: exact for the pure power") {
  const Nonlinearity nl = power(3);
  const ProfileSolution prof = solve_profile(1.5, 5, 1.3, 20);
  std::vector<double> radii;
  for (int k = 1; k <= 40; ++k) radii.push_back(0.005 * k);
  const ResidualReport rep = supersolution_residual(nl, prof, 1.5, 1e-2, radii, 0.0);
  for (const auto& s : rep.samples) CHECK(std::abs(s.residual) < 1e-6);
  CHECK(rep.holds);
}

TEST_CASE("residual carries the (q - f'F) gradient term") {
  const Nonlinearity nl = example1(5, 2);
  const ProfileSolution prof = solve_profile(1.0, 5, 2.5, 20);
  std::vector<double> radii;
  for (int k = 1; k <= 20; ++k) radii.push_back(0.002 * k);
  const ResidualReport rep = supersolution_residual(nl, prof, 1.0, 1e-4, radii, u_large(nl, 1.0));
  CHECK(rep.max_mismatch < 1e-6);
  CHECK(rep.holds);
}

TEST_CASE("glued supersolution for the pure power") {
  const Nonlinearity nl = power(3);
  const RadialProfile sing = singular_solution(nl, 5, 1e-8, 20);
  const auto ts = log_times(-6, 0, 4);
  const GluedSupersolution v = construct_supersolution(nl, sing, ts);
  const GluedReport rep = check_glued(v, ts);
  CHECK(rep.all());
  CHECK(rep.t0_admissible == doctest::Approx(1.0));
  for (double t : {1e-4, 1e-2}) {
    const auto slice = v.at(t);
    for (double r : {1.01 * slice.interface_radius(), 0.5, 3.0})
      CHECK(slice(r) == doctest::Approx(std::sqrt(2.0) / r).epsilon(1e-6));
    CHECK(slice(0) == doctest::Approx(v.sup(t)).epsilon(1e-12));
    for (double r : {0.0, 0.3 * slice.interface_radius(), 2.0}) CHECK(slice(r) <= v.sup(t) * (1 + 1e-12));
  }
  // v(., t) -> u* away from the origin
  CHECK(v.at(1e-6)(0.05) == doctest::Approx(sing.u_at(0.05)).epsilon(1e-12));
}

TEST_CASE("glued supersolution with logarithmic corrections") {
  const Nonlinearity nl = example1(5, 2);
  const RadialProfile sing = singular_solution(nl, 5, 1e-10, 20);
  const auto ts = log_times(-6, -2, 4);
  const GluedSupersolution v = construct_supersolution(nl, sing, ts);
  const GluedReport rep = check_glued(v, ts);
  CHECK(rep.continuity);
  CHECK(rep.kink);
  CHECK(rep.large);
  CHECK(rep.coefficient);
  CHECK(rep.monotone_largeness);
  CHECK(rep.sup_identity);
  for (const auto& p : rep.points) CHECK(p.continuity <= 1e-8);
  CHECK(v.t0() > 1e-3);
}
