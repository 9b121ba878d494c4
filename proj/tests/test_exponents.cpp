#include <doctest.h>

#include "nonuniq/exponents.hpp"

#include <cmath>

using namespace nonuniq;

TEST_CASE("sobolev and conjugate exponents in dimension 6") {
  const auto t = exponent_table(6);
  CHECK(t.p_S.value() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.q_S == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.p_F.value() == doctest::Approx(1 + 2.0 / 6));
  CHECK(t.p_0.value() == doctest::Approx(1.5));
  CHECK(t.q_0 == doctest::Approx(3.0));
}

TEST_CASE("joseph-lundgren exponent") {
  CHECK(joseph_lundgren_exponent(10).is_infinite());
  CHECK(joseph_lundgren_exponent(3).is_infinite());
  // Independent long double evaluation of 1 + 4/(7 - 2 sqrt 10).
  const long double ref = 1.0L + 4.0L / (7.0L - 2.0L * std::sqrt(10.0L));
  CHECK(std::abs(joseph_lundgren_exponent(11).value() - static_cast<double>(ref)) < 1e-12);
  CHECK(joseph_lundgren_exponent(11).value() == doctest::Approx(6.9220).epsilon(1e-4));
}

TEST_CASE("rejects dimensions at most two") {
  CHECK_THROWS_AS(exponent_table(2), DomainError);
  CHECK_THROWS_AS(gamma_star(1, 1.5), DomainError);
}

TEST_CASE("conjugacy identities hold for finite entries") {
  for (int N = 3; N <= 50; ++N) {
    const auto t = exponent_table(N);
    CHECK(std::abs(1 / t.p_S.value() + 1 / t.q_S - 1) < 1e-12);
    if (t.p_JL.is_finite()) CHECK(std::abs(1 / t.p_JL.value() + 1 / t.q_JL - 1) < 1e-12);
    if (N > 10) {
      CHECK(t.q_JL < t.q_S);
      CHECK(t.q_S < t.q_0);
    }
  }
}

TEST_CASE("gamma star") {
  CHECK(gamma_star(6, 1.5).value() == doctest::Approx(6.0));
  CHECK(gamma_star(7, 1.0).is_infinite());
  CHECK(gamma_star(5, 1.5).value() == doctest::Approx(gamma_c(5, 3)));
  double prev = 0;
  for (double q : {2.0, 1.5, 1.1, 1.01, 1.001, 1.0001}) {
    const double g = gamma_star(5, q).value();
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("regime classification") {
  CHECK(classify_regime(5, 1.0) == Regime::supercritical_window);
  CHECK(classify_regime(12, 1.0) == Regime::outside);
  CHECK(classify_regime(5, 1.75) == Regime::critical_subcritical_window);
  CHECK(classify_regime(5, 1.5) == Regime::supercritical_window);
  CHECK(classify_regime(5, 3.0) == Regime::outside);
}

TEST_CASE("extended real ordering") {
  const ExtendedReal inf = ExtendedReal::infinity();
  CHECK(ExtendedReal(1e300) < inf);
  CHECK_FALSE(inf < inf);
  CHECK(inf == ExtendedReal::infinity());
  CHECK(std::isinf(inf.value()));
  CHECK(inf.to_string() == "inf");
}
