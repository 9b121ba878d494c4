#include "nonuniq/interp.hpp"
#include "nonuniq/ode.hpp"
#include "nonuniq/quadrature.hpp"
#include "nonuniq/radial_grid.hpp"
#include "nonuniq/roots.hpp"
#include "nonuniq/tridiagonal.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace nonuniq;

TEST_CASE("Dormand-Prince: harmonic oscillator, dense output and events") {
  using DP = DormandPrince<double, 2>;
  OdeOptions<double> o;
  o.rtol = 1e-11;
  o.atol = 1e-13;
  const DP dp(o);
  auto rhs = [](double, const DP::State& y) { return DP::State(y[1], -y[0]); };
  const auto traj = dp.integrate(rhs, 0.0, DP::State(1, 0), 10.0);
  CHECK(traj.status == OdeStatus::completed);
  CHECK(traj.t_end() == 10.0);
  CHECK(traj.final_state()[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-8));
  for (double t : {0.123, 1.7, 4.4, 9.99}) {
    CHECK(traj(t)[0] == doctest::Approx(std::cos(t)).epsilon(1e-8));
    CHECK(traj(t)[1] == doctest::Approx(-std::sin(t)).epsilon(1e-8));
    CHECK(traj.derivative(t)[0] == doctest::Approx(-std::sin(t)).epsilon(1e-6));
  }
  const auto pts = traj.step_points();
  CHECK(pts.front() == 0.0);
  CHECK(pts.back() == 10.0);
  CHECK(std::is_sorted(pts.begin(), pts.end()));

  // first zero of y0 at pi/2
  const auto ev = dp.integrate(rhs, 0.0, DP::State(1, 0), 10.0, [](double, const DP::State& y) { return y[0]; });
  CHECK(ev.status == OdeStatus::event);
  CHECK(ev.t_end() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));

  // a stop predicate halts before the state leaves the admissible set
  const auto st = dp.integrate(rhs, 0.0, DP::State(1, 0), 10.0, {}, [](double, const DP::State& y) { return y[0] < -0.5; });
  CHECK(st.status == OdeStatus::stopped);
  CHECK(st.final_state()[0] >= -0.5);

  // backward integration and extended precision
  const DormandPrince<long double, 1> dpl;
  auto decay = [](long double, const Eigen::Matrix<long double, 1, 1>& y) { return Eigen::Matrix<long double, 1, 1>(-y[0]); };
  const auto back = dpl.integrate(decay, 1.0L, Eigen::Matrix<long double, 1, 1>(1.0L), 0.0L);
  CHECK(static_cast<double>(back.final_state()[0]) == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("PCHIP: linear reproduction and monotonicity") {
  const Pchip<double> lin({0, 0.5, 2, 3}, {1, 2, 5, 7});
  for (double t : {0.0, 0.3, 1.1, 2.9}) {
    CHECK(lin(t) == doctest::Approx(1 + 2 * t));
    CHECK(lin.derivative(t) == doctest::Approx(2));
  }
  // monotone data with a sharp step stay monotone between the nodes
  const Pchip<double> step({0, 1, 2, 3, 4}, {0, 0, 1, 1, 1});
  double prev = step(0);
  for (double t = 0.01; t <= 4; t += 0.01) {
    CHECK(step(t) >= prev - 1e-15);
    CHECK(step(t) <= 1 + 1e-15);
    prev = step(t);
  }
  CHECK_THROWS_AS(Pchip<double>({0, 0}, {1, 2}), DomainError);
  CHECK_THROWS_AS(Pchip<double>({0}, {1}), DomainError);
}

TEST_CASE("Thomas solver agrees with a dense solve") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> d(-1, 1);
  const int n = 40;
  Vector sub(n), diag(n), super(n), rhs(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    sub[i] = i > 0 ? d(gen) : 0;
    super[i] = i + 1 < n ? d(gen) : 0;
    diag[i] = 3 + d(gen);
    rhs[i] = d(gen);
    A(i, i) = diag[i];
    if (i > 0) A(i, i - 1) = sub[i];
    if (i + 1 < n) A(i, i + 1) = super[i];
  }
  const Vector x = solve_tridiagonal<double>(sub, diag, super, rhs);
  const Vector ref = A.partialPivLu().solve(rhs);
  CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("quadrature and roots") {
  CHECK(integrate<double>([](double x) { return x * x * x; }, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(integrate<double>([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
        doctest::Approx(2).epsilon(1e-13));
  CHECK(integrate_panel<double>([](double x) { return x * x; }, 1.0, 2.0) == doctest::Approx(7.0 / 3).epsilon(1e-14));
  const double tail = integrate_to_infinity<double>([](double x) { return std::exp(-x); }, 0.0, 1.0,
                                                    [](double x) { return std::exp(-x); });
  CHECK(tail == doctest::Approx(1).epsilon(1e-12));
  CHECK_THROWS_AS(integrate_to_infinity<double>([](double x) { return 1 / (1 + x); }, 0.0, 1.0,
                                                [](double) { return std::numeric_limits<double>::infinity(); }, 1e-13, 50),
                  DivergentTailError);

  CHECK(bracketed_root<double>([](double x) { return std::cos(x); }, 0.0, 3.0) ==
        doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
  CHECK_THROWS_AS(bracketed_root<double>([](double x) { return x * x + 1; }, -1.0, 1.0), NumericalError);
}

TEST_CASE("radial grid: geometry, conservation form, integrals") {
  const double N = 5;
  const GridSpec spec{1e-3, 1.1, 0.1, 4.0};
  const RadialGrid refl(N, spec, FarField::reflecting), abs(N, spec, FarField::absorbing);
  CHECK(refl.size() == abs.size() + 1);
  CHECK(refl.r()[0] == 0);
  CHECK(refl.r()[1] == doctest::Approx(1e-3));
  CHECK(refl.r()[refl.size() - 1] == doctest::Approx(4.0));
  CHECK(refl.volumes().sum() == doctest::Approx(std::pow(4.0, N) / N).epsilon(1e-12));
  // the last gap absorbs the remainder up to R
  for (int i = 1; i + 1 < refl.size(); ++i) CHECK(refl.r()[i] - refl.r()[i - 1] <= 0.1 * (1 + 1e-12));
  CHECK(refl.r()[refl.size() - 1] - refl.r()[refl.size() - 2] <= 0.15 * (1 + 1e-12));

  // rows of the reflecting stencil sum to zero; r^2 has an exact discrete flux
  Vector r2 = refl.r().array().square();
  const Vector lap = refl.laplacian(r2);
  for (int i = 0; i + 1 < refl.size(); ++i) CHECK(lap[i] == doctest::Approx(2 * N).epsilon(1e-9));
  CHECK(refl.laplacian(Vector::Ones(refl.size())).cwiseAbs().maxCoeff() < 1e-9);

  // K symmetric: <Lap a, b> = <a, Lap b> in the volume inner product
  const Vector a = refl.r().array().sin(), b = refl.r().array().cos();
  CHECK(refl.inner(refl.laplacian(a), b) == doctest::Approx(refl.inner(a, refl.laplacian(b))).epsilon(1e-12));

  // int_0^1 r^{-3} r^4 dr = 1/2 through the decades toward the origin
  CHECK(radial_integral([](double r) { return std::pow(r, -3); }, 0, 1, N) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(refl.cell_average([](double) { return 3.0; }, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(refl.cell_average([](double r) { return r < 0.05 ? 1.0 : 0.0; }, 30, 0.05) <= 1.0);

  const RadialGrid fine = refl.refined();
  CHECK(fine.spec().h0 == doctest::Approx(5e-4));
  CHECK(fine.size() > refl.size());

  // piecewise-linear evaluation, linear decay to zero past the last unknown when absorbing
  auto grid = std::make_shared<const RadialGrid>(abs);
  const RadialField field{grid, Vector::Ones(abs.size()), 0.0};
  CHECK(field(0.0) == 1.0);
  CHECK(field(1.234) == doctest::Approx(1.0));
  CHECK(field(4.0) == 0.0);
  const double last = abs.r()[abs.size() - 1];
  CHECK(field(0.5 * (last + 4.0)) == doctest::Approx(0.5));
  CHECK(field.sup() == 1.0);
}
