#include "nonuniq/stationary.hpp"

#include "nonuniq/exponents.hpp"
#include "nonuniq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace nonuniq {

namespace {

using State2 = Eigen::Matrix<double, 2, 1>;
using Integrator = DormandPrince<double, 2>;

Integrator::Rhs radial_rhs(const Nonlinearity& nl, double N) {
  // s = log r, state (u, w = r u').
  return [&nl, N](double s, const State2& y) {
    State2 dy;
    dy[0] = y[1];
    const double fu = nl.f(y[0]);
    dy[1] = -(N - 2) * y[1] - (fu == 0 ? 0.0 : std::exp(2 * s + nl.log_f(y[0])));
    return dy;
  };
}

OdeOptions<double> ode_options(const StationaryOptions& o) {
  OdeOptions<double> oo;
  oo.rtol = o.rtol;
  oo.atol = o.atol;
  oo.max_step = 0.25;
  return oo;
}

double singular_denominator(const Nonlinearity& nl, double N) {
  const double d = 2 * N - 4 * nl.qf_declared();
  if (!(d > 0)) throw DomainError("singular profile needs 2N - 4 q_f > 0");
  return d;
}

}  // namespace

RadialProfile::RadialProfile(double N, std::string nl_name, ProfileKind kind, double alpha,
                             std::shared_ptr<const Trajectory> traj, Extension below,
                             int points_per_decade, double r_grid_min)
    : N_(N),
      nl_name_(std::move(nl_name)),
      kind_(kind),
      alpha_(alpha),
      traj_(std::move(traj)),
      below_(std::move(below)) {
  r_lo_ = std::exp(traj_->t_begin());
  r_hi_ = std::exp(traj_->t_end());
  const double s0 = std::log(std::max(r_grid_min, r_lo_));
  const double s1 = traj_->t_end();
  const double ds = std::log(10.0) / points_per_decade;
  const int n = static_cast<int>(std::floor((s1 - s0) / ds + 1e-9));
  for (int k = 0; k <= n; ++k) r_.push_back(std::exp(s0 + k * ds));
  if (s1 - (s0 + n * ds) > 1e-9 * ds) r_.push_back(r_hi_);
  for (double r : r_) {
    const State2 y = (*traj_)(std::log(r));
    u_.push_back(y[0]);
    du_.push_back(y[1] / r);
  }
}

double RadialProfile::u_at(double r) const {
  if (r < r_lo_) return below_(r).first;
  if (r > r_hi_ * (1 + 1e-12)) throw OutOfRangeError("profile evaluated beyond its range");
  return (*traj_)(std::log(r))[0];
}

double RadialProfile::du_at(double r) const {
  if (r < r_lo_) return below_(r).second;
  if (r > r_hi_ * (1 + 1e-12)) throw OutOfRangeError("profile evaluated beyond its range");
  return (*traj_)(std::log(r))[1] / r;
}

double RadialProfile::d2u_at(double r) const {
  const double s = std::log(std::clamp(r, r_lo_, r_hi_));
  const State2 y = (*traj_)(s);
  const State2 dy = traj_->derivative(s);
  return (dy[1] - y[1]) / (r * r);
}

double leading_singular_value(const Nonlinearity& nl, double N, double r) {
  return nl.F_inverse(r * r / singular_denominator(nl, N));
}

double asymptotic_theta(const Nonlinearity& nl, double N, double u_value, double r) {
  return singular_denominator(nl, N) * nl.F(u_value) / (r * r) - 1;
}

RadialProfile shoot_regular(const Nonlinearity& nl, double N, double alpha, double r_max,
                            const StationaryOptions& opts) {
  if (!(alpha > 0)) throw DomainError("shoot_regular: alpha must be positive");
  const double fa = nl.f(alpha), dfa = nl.df(alpha);
  if (!std::isfinite(fa) || !std::isfinite(dfa)) throw DomainError("shoot_regular: f(alpha) overflows");
  const double a = -fa / (2 * N);
  const double b = fa * dfa / (8 * N * (N + 2));
  double r0 = a != 0 ? std::sqrt(1e-5 * std::max(alpha, 1.0) / std::abs(a)) : 1e-3 * r_max;
  r0 = std::min(r0, 1e-2 * r_max);
  auto series = [a, b, alpha](double r) {
    const double r2 = r * r;
    return std::make_pair(alpha + a * r2 + b * r2 * r2, 2 * a * r + 4 * b * r2 * r);
  };
  const auto [u0, du0] = series(r0);
  State2 y0(u0, r0 * du0);
  const Integrator integrator(ode_options(opts));
  auto result = std::make_shared<RadialProfile::Trajectory>(integrator.integrate(
      radial_rhs(nl, N), std::log(r0), y0, std::log(r_max),
      [](double, const State2& y) { return y[0]; }));
  if (result->status == OdeStatus::step_underflow || result->status == OdeStatus::max_steps) {
    throw StepUnderflowError("shoot_regular: integration stalled", std::exp(result->t_end()));
  }
  RadialProfile prof(N, nl.name(), ProfileKind::regular, alpha, result, series,
                     opts.points_per_decade, r0);
  if (result->status == OdeStatus::event) {
    prof.zero_crossing = std::exp(result->t_end());
    prof.positive = false;
  }
  prof.reached_r_max = result->status != OdeStatus::event;
  for (double d : prof.du())
    if (!(d < 0)) prof.decreasing = false;
  return prof;
}

RadialProfile singular_solution(const Nonlinearity& nl, double N, double r_min, double r_max,
                                const StationaryOptions& opts) {
  if (!(r_min > 0 && r_max > r_min)) throw DomainError("singular_solution: need 0 < r_min < r_max");
  const double denom = singular_denominator(nl, N);
  const Integrator integrator(ode_options(opts));
  const auto rhs = radial_rhs(nl, N);

  auto seed = [&](double rs) {
    const double theta = opts.seed_theta ? opts.seed_theta(rs) : 0.0;
    const double u = nl.F_inverse(rs * rs * (1 + theta) / denom);
    // Differentiating F(u*) = r^2/denom: r u*' = -2 r^2 f(u*)/denom.
    const double w = -std::exp(std::log(2 * rs * rs / denom) + nl.log_f(u));
    return State2(u, w);
  };
  auto integrate = [&](double rs) {
    return std::make_shared<RadialProfile::Trajectory>(
        integrator.integrate(rhs, std::log(rs), seed(rs), std::log(r_max)));
  };
  auto value_at = [&](const RadialProfile::Trajectory& t, double r) { return t(std::log(r))[0]; };

  double rs = r_min / 64;
  auto coarse = integrate(rs);
  auto fine = integrate(rs / 2);
  int refinements = 0;
  double diff = relative_difference(value_at(*coarse, r_min), value_at(*fine, r_min));
  while (diff > opts.seed_tolerance) {
    if (++refinements > opts.max_seed_refinements) {
      throw SeedSensitivityError("singular_solution: seeds r and r/2 disagree by " +
                                 std::to_string(diff) + " at r_min");
    }
    rs /= 64;
    coarse = integrate(rs);
    fine = integrate(rs / 2);
    diff = relative_difference(value_at(*coarse, r_min), value_at(*fine, r_min));
  }

  auto below = [nl, N, denom](double r) {
    const double u = nl.F_inverse(r * r / denom);
    return std::make_pair(u, -std::exp(std::log(2 * r / denom) + nl.log_f(u)));
  };
  RadialProfile prof(N, nl.name(), ProfileKind::singular, 0.0, fine, below,
                     opts.points_per_decade, r_min);
  prof.seed_radius = rs / 2;
  prof.seed_halving_difference = diff;
  prof.seed_refinements = refinements;
  prof.reached_r_max = fine->status == OdeStatus::completed;
  for (std::size_t i = 0; i < prof.r().size(); ++i) {
    if (!(prof.u()[i] > 0)) prof.positive = false;
    if (!(prof.du()[i] < 0)) prof.decreasing = false;
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Diagnostics

nlohmann::json DecayBoundsReport::to_json() const {
  return {{"delta", delta},         {"exponent_u", exponent_u}, {"exponent_du", exponent_du},
          {"C_fit", C_fit},         {"C_admissible", C_admissible},
          {"holds_u", holds_u},     {"holds_du", holds_du}};
}

DecayBoundsReport decay_bounds_check(const RadialProfile& profile, const Nonlinearity& nl,
                                     double delta, double R0) {
  DecayBoundsReport rep;
  const double qf = nl.qf_declared();
  rep.delta = delta;
  rep.exponent_u = 2 - 2 * qf - 2 * delta;
  rep.exponent_du = 1 - 2 * qf - 2 * delta;
  std::vector<double> ru, rd, rr;
  for (std::size_t i = 0; i < profile.r().size(); ++i) {
    const double r = profile.r()[i];
    if (r > R0) break;
    rr.push_back(r);
    ru.push_back(profile.u()[i] / std::pow(r, rep.exponent_u));
    rd.push_back(std::abs(profile.du()[i]) / std::pow(r, rep.exponent_du));
  }
  if (rr.size() < 2) return rep;
  rep.C_fit = std::max(ru.front(), rd.front());
  rep.C_admissible = std::max(*std::max_element(ru.begin(), ru.end()),
                              *std::max_element(rd.begin(), rd.end()));
  // The bound survives r -> 0 when the ratios do not grow toward the origin
  // over the innermost decade.
  const double r_edge = 10 * rr.front();
  rep.holds_u = rep.holds_du = true;
  for (std::size_t i = 0; i + 1 < rr.size() && rr[i + 1] <= r_edge; ++i) {
    if (ru[i] > ru[i + 1] * (1 + 1e-9)) rep.holds_u = false;
    if (rd[i] > rd[i + 1] * (1 + 1e-9)) rep.holds_du = false;
  }
  return rep;
}

nlohmann::json PohozaevReport::to_json() const {
  nlohmann::json j;
  j["tends_to_zero"] = tends_to_zero;
  j["nonincreasing"] = nonincreasing;
  j["identity_error"] = identity_error;
  std::vector<double> r, P, Q;
  for (const auto& s : samples) {
    r.push_back(s.r);
    P.push_back(s.P);
    Q.push_back(s.Q);
  }
  j["r"] = r;
  j["P"] = P;
  j["Q"] = Q;
  return j;
}

PohozaevReport pohozaev_scan(const RadialProfile& profile, const Nonlinearity& nl) {
  const double N = profile.N();
  const double pS = sobolev_exponent(N);
  auto P_at = [&](double r) {
    const double u = profile.u_at(r), du = profile.du_at(r);
    const double rN = std::pow(r, N);
    return 0.5 * rN * du * du + rN * nl.F0(u) + 0.5 * (N - 2) * rN / r * u * du;
  };
  auto Q_of = [&](double u) { return u * nl.f(u) - (pS + 1) * nl.F0(u); };

  PohozaevReport rep;
  double maxP = 0;
  for (std::size_t i = 0; i < profile.r().size(); ++i) {
    const double r = profile.r()[i];
    PohozaevSample s{r, P_at(r), Q_of(profile.u()[i])};
    maxP = std::max(maxP, std::abs(s.P));
    rep.samples.push_back(s);
  }
  const auto& sm = rep.samples;
  rep.nonincreasing = true;
  for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
    if (sm[i + 1].P > sm[i].P + 1e-9 * maxP) rep.nonincreasing = false;
  }
  bool shrinking = true;
  const double r_edge = 10 * sm.front().r;
  for (std::size_t i = 0; i + 1 < sm.size() && sm[i + 1].r <= r_edge; ++i) {
    if (std::abs(sm[i].P) > std::abs(sm[i + 1].P) * (1 + 1e-9) + 1e-14 * maxP) shrinking = false;
  }
  rep.tends_to_zero = shrinking && std::abs(sm.front().P) <= 1e-2 * maxP;

  double worst = 0;
  for (std::size_t i = 1; i + 1 < sm.size(); i += 4) {
    const double r = sm[i].r;
    const double h = 1e-3 * r;
    const double dP = (P_at(r + h) - P_at(r - h)) / (2 * h);
    const double u = profile.u_at(r);
    const double rhs = -0.5 * (N - 2) * std::pow(r, N - 1) * Q_of(u);
    const double scale = 0.5 * (N - 2) * std::pow(r, N - 1) *
                         (std::abs(u * nl.f(u)) + (pS + 1) * std::abs(nl.F0(u)));
    if (scale > 0) worst = std::max(worst, std::abs(dP - rhs) / scale);
  }
  rep.identity_error = worst;
  return rep;
}

nlohmann::json ConvergenceReport::to_json() const {
  return {{"alpha", alphas}, {"distance", distances}, {"decreasing", decreasing}};
}

ConvergenceReport convergence_to_singular(const Nonlinearity& nl, double N,
                                          const std::vector<double>& alphas, double r_a,
                                          double r_b) {
  const RadialProfile sing = singular_solution(nl, N, r_a, r_b);
  ConvergenceReport rep;
  constexpr int kSamples = 200;
  for (double alpha : alphas) {
    const RadialProfile reg = shoot_regular(nl, N, alpha, r_b);
    double dist = 0;
    if (reg.zero_crossing && *reg.zero_crossing < r_b) {
      dist = std::numeric_limits<double>::infinity();
    } else {
      for (int k = 0; k <= kSamples; ++k) {
        const double r = r_a * std::pow(r_b / r_a, static_cast<double>(k) / kSamples);
        dist = std::max(dist, std::abs(reg.u_at(r) - sing.u_at(r)));
      }
    }
    rep.alphas.push_back(alpha);
    rep.distances.push_back(dist);
  }
  rep.decreasing = true;
  for (std::size_t i = 0; i + 1 < rep.distances.size(); ++i) {
    if (!(rep.distances[i + 1] < rep.distances[i])) rep.decreasing = false;
  }
  return rep;
}

double ode_residual(const RadialProfile& profile, const Nonlinearity& nl) {
  const double N = profile.N();
  double worst = 0;
  for (std::size_t i = 0; i < profile.r().size(); ++i) {
    const double r = profile.r()[i];
    const double u = profile.u()[i];
    const double fu = nl.f(u);
    const double res = profile.d2u_at(r) + (N - 1) / r * profile.du()[i] + fu;
    worst = std::max(worst, std::abs(res) / std::max(1.0, std::abs(fu)));
  }
  return worst;
}

double integral_identity_error(const RadialProfile& profile, const Nonlinearity& nl,
                               const std::vector<double>& radii) {
  const double N = profile.N();
  const double r0 = profile.r_lo();
  const double base = -std::pow(r0, N - 1) * profile.du_at(r0);
  auto integrand = [&](double sigma) {
    const double r = std::exp(sigma);
    return nl.f(profile.u_at(r)) * std::exp(N * sigma);
  };
  double worst = 0;
  for (double r : radii) {
    double acc = base;
    double a = std::log(r0);
    const double b = std::log(r);
    while (a < b) {
      const double c = std::min(b, a + std::log(10.0));
      acc += integrate(integrand, a, c, 1e-13);
      a = c;
    }
    const double lhs = -std::pow(r, N - 1) * profile.du_at(r);
    worst = std::max(worst, relative_difference(lhs, acc));
  }
  return worst;
}

}  // namespace nonuniq
