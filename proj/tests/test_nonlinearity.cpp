#include <doctest.h>

#include "nonuniq/nonlinearity.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <vector>

using namespace nonuniq;

namespace {

// Reference tail integral by double-exponential quadrature on [u, inf).
double reference_F(const Nonlinearity& nl, double u) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double s) { return 1.0 / nl.f(s); }, u,
                              std::numeric_limits<double>::infinity(), 1e-13);
}

std::vector<Nonlinearity> all_builders() {
  return {power(3), power(7.0 / 3), exponential(), example1(5, 2), example2(), example3(3, 2.5)};
}

}  // namespace

TEST_CASE("closed-form tail integrals") {
  CHECK(power(3).F(2.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(exponential().F(0.0) == doctest::Approx(1.0));
  CHECK(exponential().F(std::log(6.0)) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(power(3).F_inverse(0.125) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(exponential().F_inverse(1.0)) < 1e-15);
  CHECK(exponential().F_inverse(std::exp(-5.0)) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("quadrature path agrees with closed forms") {
  const auto p = power(3);
  for (double u : {0.01, 0.5, 2.0, 40.0, 1e4}) {
    CHECK(p.F_direct(u) == doctest::Approx(p.F(u)).epsilon(1e-12));
  }
  const auto e = exponential();
  for (double u : {-3.0, 0.0, 1.0, 30.0}) {
    CHECK(e.F_direct(u) == doctest::Approx(e.F(u)).epsilon(1e-12));
  }
}

TEST_CASE("tabulated F matches an independent quadrature") {
  for (const auto& nl : {example1(5, 2), example2(), example3(3, 2.5)}) {
    for (double u : {0.05, 0.7, 1.0, 2.5, 3.5, 4.0, 6.0}) {
      const double ref = reference_F(nl, u);
      CHECK_MESSAGE(nl.F(u) == doctest::Approx(ref).epsilon(1e-10), nl.name() << " u=" << u);
      CHECK(nl.F_direct(u) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("example2 tail is exactly e^{-20u}/400 beyond the cutoff") {
  const auto nl = example2();
  for (double u : {4.0, 5.0, 10.0, 20.0}) {
    CHECK(nl.F(u) == doctest::Approx(std::exp(-20 * u) / 400).epsilon(1e-12));
  }
}

TEST_CASE("F and F^{-1} are mutually inverse and F decreases") {
  for (const auto& nl : all_builders()) {
    double prev = std::numeric_limits<double>::infinity();
    for (double u : {1e-3, 0.01, 0.3, 1.0, 2.0, 5.0, 12.0, 25.0}) {
      const double s = nl.F(u);
      CHECK(s < prev);
      prev = s;
      CHECK_MESSAGE(nl.F_inverse(s) == doctest::Approx(u).epsilon(1e-8), nl.name() << " u=" << u);
    }
    for (double s : {1e-12, 1e-6, 1e-3, 0.1, 0.9}) {
      const double u = nl.F_inverse(s);
      CHECK(nl.F(u) == doctest::Approx(s).epsilon(1e-8));
    }
  }
}

TEST_CASE("F^{-1} rejects arguments outside the range") {
  CHECK_THROWS_AS(power(3).F_inverse(-1.0), OutOfRangeError);
  CHECK_THROWS_AS(exponential().F_inverse(0.0), OutOfRangeError);
}

TEST_CASE("divergent tail is reported") {
  CHECK_THROWS_AS(linear().F(1.0), DivergentTailError);
}

TEST_CASE("negative arguments use the zero extension") {
  CHECK(power(3).f(-1.0) == 0.0);
  CHECK(example1(5, 2).f(-2.0) == 0.0);
  CHECK(example3(3, 2.5).df(-0.5) == 0.0);
}

TEST_CASE("analytic derivatives match finite differences") {
  for (const auto& nl : all_builders()) {
    for (double u : {0.3, 1.2, 2.7, 3.6, 5.0}) {
      const double h = 1e-5 * u;
      const double fd1 = (nl.f(u + h) - nl.f(u - h)) / (2 * h);
      const double fd2 = (nl.df(u + h) - nl.df(u - h)) / (2 * h);
      CHECK_MESSAGE(nl.df(u) == doctest::Approx(fd1).epsilon(1e-6), nl.name() << " u=" << u);
      CHECK_MESSAGE(nl.d2f(u) == doctest::Approx(fd2).epsilon(1e-6), nl.name() << " u=" << u);
      CHECK(nl.dlog_f(u) == doctest::Approx(nl.df(u) / nl.f(u)).epsilon(1e-12));
      const double x = 1e-3 * u;
      CHECK(nl.log_ratio(u, x) == doctest::Approx(nl.log_f(u + x) - nl.log_f(u)).epsilon(1e-8));
    }
  }
}

TEST_CASE("q ratio") {
  for (double p : {1.5, 2.0, 3.0, 7.0}) {
    const auto nl = power(p);
    for (double u : {1e-3, 1.0, 17.0, 1e5}) CHECK(nl.q_ratio(u) == doctest::Approx(p / (p - 1)).epsilon(1e-14));
  }
  CHECK(example1(5, 2).q_ratio(1e3) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(example3(3, 2.5).q_ratio(1e8) == doctest::Approx(1.5).epsilon(1e-3));
  const auto e2 = example2();
  for (double u : {4.0, 4.5, 10.0, 100.0}) CHECK(e2.q_ratio(u) == 1.0);
  CHECK_THROWS_AS(linear().q_ratio(2.0), DomainError);
}

TEST_CASE("declared exponents") {
  CHECK(example3(3, 2.5).qf_declared() == doctest::Approx(1.5));
  CHECK(example1(5, 2).qf_declared() == 1.0);
  CHECK(power(3).qf_declared() == doctest::Approx(1.5));
  for (const auto& nl : all_builders()) {
    CHECK(nl.qf_declared() >= 1.0);
    if (nl.qf_declared() > 1) {
      CHECK(1 / nl.pf_declared().value() + 1 / nl.qf_declared() == doctest::Approx(1.0).epsilon(1e-15));
    } else {
      CHECK(nl.pf_declared().is_infinite());
    }
  }
}

TEST_CASE("f'F tends monotonically to q_f") {
  for (const auto& nl : {example1(5, 2), example2(), example3(3, 2.5)}) {
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double u : {1e2, 1e3, 1e4}) {
      const double gap = std::abs(nl.fprime_F(u) - nl.qf_declared());
      CHECK_MESSAGE(gap <= prev_gap + 1e-12, nl.name() << " u=" << u);
      prev_gap = gap;
    }
    CHECK(prev_gap < 1e-2);
  }
  CHECK(power(3).fprime_F(10.0) == doctest::Approx(1.5));
}

TEST_CASE("F0 by quadrature") {
  CHECK(power(3).F0(2.0) == doctest::Approx(4.0));
  CHECK(example3(3, 2.5).F0(2.0) == doctest::Approx(4.0 + std::pow(2.0, 3.5) / 3.5).epsilon(1e-12));
  // chi integrates to 20 beyond the cutoff: int_0^5 f = int_0^4 f + 20 (e^100 - e^80)/20.
  const auto e2 = example2();
  CHECK(e2.F0(5.0) == doctest::Approx(e2.F0(4.0) + std::exp(100.0) - std::exp(80.0)).epsilon(1e-12));
  CHECK(e2.F0_over_uf(3.0) == doctest::Approx(e2.F0(3.0) / (3.0 * e2.f(3.0))).epsilon(1e-10));
}

TEST_CASE("canonical nonlinearity") {
  const Canonical c{1.5};
  CHECK(c.p() == doctest::Approx(3.0));
  CHECK(c.F(2.0) == doctest::Approx(0.125));
  CHECK(c.F_inverse(0.125) == doctest::Approx(2.0));
  CHECK(c.fF(2.0) == doctest::Approx(c.f(2.0) * c.F(2.0)));
  const Canonical e{1.0};
  CHECK(e.exponential());
  CHECK(e.fF(-3.0) == 1.0);
  CHECK(e.F_inverse(1.0) == 0.0);
}

TEST_CASE("assumption validation") {
  const auto grid = default_assumption_grid();
  const auto rp = validate_assumptions(power(3), 5, grid);
  for (const char* id : {"A1", "A2", "A3", "A4", "A5", "A6", "fprimeF_limit"}) {
    CHECK_MESSAGE(rp.passed(id), id << ": " << rp.find(id)->detail);
  }
  const auto r1 = validate_assumptions(example1(5, 2), 5, grid);
  for (const char* id : {"A1", "A2", "A3", "A4", "A5", "A6", "fprimeF_limit"}) {
    CHECK_MESSAGE(r1.passed(id), id << ": " << r1.find(id)->detail);
  }
  const auto r2 = validate_assumptions(example2(), 5, grid);
  for (const char* id : {"A1", "A2", "A3", "A4", "A5", "A6"}) {
    CHECK_MESSAGE(r2.passed(id), id << ": " << r2.find(id)->detail);
  }
  const auto r3 = validate_assumptions(example3(3, 2.5), 5, grid);
  for (const char* id : {"A1", "A2", "A3", "A4", "A5", "A6", "fprimeF_limit"}) {
    CHECK_MESSAGE(r3.passed(id), id << ": " << r3.find(id)->detail);
  }
  const auto rl = validate_assumptions(linear(), 5, grid);
  CHECK_FALSE(rl.passed("A3"));
  CHECK_FALSE(rl.passed("A4"));
  const auto rs = validate_assumptions(power(7.0 / 3), 5, grid);
  CHECK(rs.passed("A4"));
  CHECK(rs.passed("A7"));
  CHECK_FALSE(rs.passed("A5"));
}
