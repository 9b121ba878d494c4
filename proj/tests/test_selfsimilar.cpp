#include <doctest.h>

#include "nonuniq/exponents.hpp"
#include "nonuniq/selfsimilar.hpp"

#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <cmath>

using namespace nonuniq;

TEST_CASE("singular profile closed forms") {
  CHECK(singular_profile(1.5, 5, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(singular_profile(1.0, 5, 1.0) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  CHECK(std::abs(singular_profile(1.0, 5, std::sqrt(6.0))) < 1e-14);
  for (double eta : {0.1, 0.7, 3.0}) {
    CHECK(singular_profile(1.5, 5, eta) == doctest::Approx(std::sqrt(2.0) / eta).epsilon(1e-13));
    const double h = 1e-6 * eta;
    for (double q : {1.0, 1.5}) {
      const double fd = (singular_profile(q, 5, eta + h) - singular_profile(q, 5, eta - h)) / (2 * h);
      CHECK(singular_profile_derivative(q, 5, eta) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("profile starts at alpha with zero slope") {
  for (double q : {1.0, 1.5}) {
    const ProfileSolution prof = solve_profile(q, 5, 0.8, 10);
    CHECK(prof.phi(0) == 0.8);
    CHECK(prof.dphi(0) == 0.0);
    CHECK(profile_residual(prof) < 1e-6);
  }
}

TEST_CASE("small profiles follow the linearized Kummer solution") {
  // phi'' + ((N-1)/eta + eta/2) phi' + phi/(p-1) = 0 is solved by M(1/(p-1), N/2, -eta^2/4).
  const double alpha = 1e-6;
  const ProfileSolution prof = solve_profile(1.5, 5, alpha, 6);
  for (double eta : {0.5, 1.0, 2.0, 4.0, 6.0}) {
    const double m = boost::math::hypergeometric_1F1(0.5, 2.5, -eta * eta / 4);
    CHECK(prof.phi(eta) == doctest::Approx(alpha * m).epsilon(1e-8));
  }
}

TEST_CASE("small alpha stays below the singular profile") {
  const ProfileSolution prof = solve_profile(1.5, 5, 0.1, 3);
  for (int k = 1; k <= 3 * 512; ++k) {
    const double eta = k / 512.0;
    REQUIRE(prof.phi(eta) < std::sqrt(2.0) / eta);
  }
}

TEST_CASE("exponential profiles decrease") {
  for (double alpha : {0.5, 2.0, 5.0}) {
    const ProfileSolution prof = solve_profile(1.0, 5, alpha, 20);
    CHECK(prof.decreasing);
    CHECK(profile_residual(prof) < 1e-6);
  }
}

namespace {

// Independent re-check of the crossing with tighter integration tolerances.
void verify_record(const IntersectionRecord& rec, double (*target)(double)) {
  ProfileOptions tight;
  tight.rtol = 1e-13;
  const ProfileSolution prof = solve_profile(rec.q, rec.N, rec.alpha0, rec.eta0 + 2, tight);
  double worst_before = -1e300;
  for (int k = 1; k / 512.0 < rec.eta0 - 1.0 / 512; ++k) {
    const double eta = k / 512.0;
    worst_before = std::max(worst_before, prof.phi(eta) - target(eta));
  }
  CHECK(worst_before < 0);
  CHECK(std::abs(prof.phi(rec.eta0) - target(rec.eta0)) < 1e-8);
  for (int k = 1; k <= 4; ++k) CHECK(prof.phi(rec.eta0 + k / 512.0) > target(rec.eta0 + k / 512.0));
  const double h = 1e-6;
  const double dt = (target(rec.eta0 + h) - target(rec.eta0 - h)) / (2 * h);
  CHECK(std::abs(prof.dphi(rec.eta0) - dt) == doctest::Approx(rec.transversality_margin).epsilon(1e-5));
}

double power_target(double eta) { return std::sqrt(2.0) / eta; }
double exp_target(double eta) { return std::log(6.0) - 2 * std::log(eta); }

}  // namespace

TEST_CASE("first transversal intersection") {
  SUBCASE("q = 3/2") {
    const IntersectionRecord rec = find_alpha0(1.5, 5);
    CHECK(rec.first);
    CHECK(rec.sign_pattern);
    CHECK(rec.transversality_margin > 1e-4);
    CHECK(rec.max_gap_before < 0);
    CHECK(rec.alpha0 >= rec.alpha_boundary);
    verify_record(rec, power_target);
  }
  SUBCASE("q = 1") {
    const IntersectionRecord rec = find_alpha0(1.0, 5);
    CHECK(rec.sign_pattern);
    CHECK(rec.transversality_margin > 1e-4);
    verify_record(rec, exp_target);
  }
  SUBCASE("alpha just below the boundary has no crossing") {
    const IntersectionRecord rec = find_alpha0(1.5, 5);
    CHECK_FALSE(first_crossing(1.5, 5, rec.alpha_boundary * (1 - 1e-3)).has_value());
  }
}

TEST_CASE("outside the window the scan reports instead of asserting") {
  bool reported = false;
  try {
    const IntersectionRecord rec = find_alpha0(1.0, 12);
    reported = rec.transversality_margin > 0;
  } catch (const NoCrossingError&) {
    reported = true;
  }
  CHECK(reported);
}

TEST_CASE("epsilon selection") {
  SUBCASE("power keeps q = q_f") {
    const EpsilonChoice c = choose_epsilon(power(3), 5);
    CHECK(c.epsilon == 0.0);
    CHECK(c.q == 1.5);
  }
  SUBCASE("exponential growth uses q = 1") {
    const EpsilonChoice c = choose_epsilon(exponential(), 5);
    CHECK(c.epsilon == 0.0);
    CHECK(c.q == 1.0);
  }
  SUBCASE("example 3 needs a shift") {
    const EpsilonChoice c = choose_epsilon(example3(3, 2.5), 5);
    CHECK(c.epsilon > 0);
    CHECK(c.q > 1.5);
    CHECK(c.q < exponent_table(5).q_S);
    CHECK(c.record.transversality_margin > 1e-4);
    // the shift must dominate f'F at large u
    CHECK(example3(3, 2.5).fprime_F(1e6) <= c.q);
  }
}

TEST_CASE("interface curve") {
  std::vector<double> ts;
  for (int k = 0; k <= 24; ++k) ts.push_back(std::pow(10.0, -8 + 0.25 * k));

  SUBCASE("pure power: eta is constant") {
    const Nonlinearity nl = power(3);
    const RadialProfile sing = singular_solution(nl, 5, 1e-8, 10);
    const IntersectionRecord rec = find_alpha0(1.5, 5);
    const ProfileSolution prof = solve_profile(1.5, 5, rec.alpha0, 20);
    const IntersectionCurve cur = intersection_curve(nl, sing, prof, rec.eta0, ts);
    REQUIRE_FALSE(cur.root_lost);
    CHECK(cur.sign_pattern);
    for (const auto& p : cur.points) {
      CHECK(p.eta == doctest::Approx(rec.eta0).epsilon(1e-6));
      CHECK(p.r == doctest::Approx(std::sqrt(p.t) * rec.eta0).epsilon(1e-6));
    }
  }
  SUBCASE("exponential: eta is constant") {
    const Nonlinearity nl = exponential();
    const RadialProfile sing = singular_solution(nl, 5, 1e-8, 2);
    const IntersectionRecord rec = find_alpha0(1.0, 5);
    const ProfileSolution prof = solve_profile(1.0, 5, rec.alpha0, 20);
    std::vector<double> short_ts(ts.begin(), ts.begin() + 17);
    const IntersectionCurve cur = intersection_curve(nl, sing, prof, rec.eta0, short_ts);
    REQUIRE_FALSE(cur.root_lost);
    for (const auto& p : cur.points) CHECK(p.eta == doctest::Approx(rec.eta0).epsilon(1e-6));
  }
  SUBCASE("example 3: r(t) shrinks and eta approaches eta0") {
    const Nonlinearity nl = example3(3, 2.5);
    const RadialProfile sing = singular_solution(nl, 5, 1e-8, 10);
    const EpsilonChoice c = choose_epsilon(nl, 5);
    const ProfileSolution prof = solve_profile(c.q, 5, c.record.alpha0, 20);
    const IntersectionCurve cur = intersection_curve(nl, sing, prof, c.record.eta0, ts);
    REQUIRE_FALSE(cur.root_lost);
    CHECK(cur.r_decreasing);
    CHECK(cur.eta_converges);
    // here the approach is monotone on the whole grid
    for (std::size_t k = 1; k < cur.points.size(); ++k)
      CHECK(std::abs(cur.points[k].eta - c.record.eta0) + 1e-12 >= std::abs(cur.points[k - 1].eta - c.record.eta0));
    CHECK(cur.continuity);
    CHECK(cur.sign_pattern);
    const double near = std::abs(cur.points.front().eta - c.record.eta0);
    const double far = std::abs(cur.points.back().eta - c.record.eta0);
    CHECK(near < 0.2 * far);
  }
}
