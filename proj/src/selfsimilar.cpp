#include "nonuniq/selfsimilar.hpp"

#include "nonuniq/exponents.hpp"
#include "nonuniq/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nonuniq {

namespace {

using State2 = Eigen::Matrix<double, 2, 1>;

// g(phi) = f_q(phi) F_q(phi) + f_q(phi) and its derivative.
double source(const Canonical& c, double phi) { return c.fF(phi) + c.f(phi); }

double source_derivative(const Canonical& c, double phi) {
  if (c.exponential()) return std::exp(phi);
  const double p = c.p();
  return 1 / (p - 1) + p * std::pow(std::abs(phi), p - 1);
}

double target_denominator(double q, double N, std::optional<double> q_ref) {
  const double d = 2 * N - 4 * q_ref.value_or(q);
  if (!(d > 0)) throw DomainError("singular profile needs 2N - 4q > 0");
  return d;
}

}  // namespace

ProfileSolution::ProfileSolution(double q, double N, double alpha, double eta_max,
                                 double eta_seed, double c2, double c4,
                                 std::shared_ptr<const Trajectory> traj)
    : q_(q), N_(N), alpha_(alpha), eta_max_(eta_max), eta_seed_(eta_seed), c2_(c2), c4_(c4),
      traj_(std::move(traj)) {}

double ProfileSolution::phi(double eta) const {
  if (eta < 0 || eta > eta_max_ * (1 + 1e-12)) throw OutOfRangeError("eta outside the profile range");
  if (eta <= eta_seed_) {
    const double e2 = eta * eta;
    return alpha_ + c2_ * e2 + c4_ * e2 * e2;
  }
  return (*traj_)(eta)[0];
}

double ProfileSolution::dphi(double eta) const {
  if (eta < 0 || eta > eta_max_ * (1 + 1e-12)) throw OutOfRangeError("eta outside the profile range");
  if (eta <= eta_seed_) return 2 * c2_ * eta + 4 * c4_ * eta * eta * eta;
  return (*traj_)(eta)[1];
}

double ProfileSolution::d2phi(double eta) const {
  if (eta <= eta_seed_) return 2 * c2_ + 12 * c4_ * eta * eta;
  const Canonical c{q_};
  const double v = phi(eta), dv = dphi(eta);
  return -((N_ - 1) / eta + eta / 2) * dv - source(c, v);
}

std::vector<double> ProfileSolution::eta_grid(int per_unit) const {
  const int n = static_cast<int>(std::floor(eta_max_ * per_unit + 1e-9));
  std::vector<double> g;
  g.reserve(n + 1);
  for (int k = 0; k <= n; ++k) g.push_back(static_cast<double>(k) / per_unit);
  return g;
}

ProfileSolution solve_profile(double q, double N, double alpha, double eta_max,
                              const ProfileOptions& opts) {
  if (!(q >= 1)) throw DomainError("canonical index must be at least 1");
  if (!(eta_max > 0)) throw DomainError("eta_max must be positive");
  const Canonical c{q};
  const double g0 = source(c, alpha);
  const double c2 = -g0 / (2 * N);
  const double c4 = -c2 * (1 + source_derivative(c, alpha)) / (4 * (N + 2));
  double eta_seed = 1e-3;
  if (c2 != 0) eta_seed = std::min(eta_seed, std::sqrt(1e-5 * std::max(std::abs(alpha), 1.0) / std::abs(c2)));
  eta_seed = std::min(eta_seed, eta_max / 4);

  OdeOptions<double> oo;
  oo.rtol = opts.rtol;
  oo.atol = opts.atol;
  oo.max_step = 0.1;
  DormandPrince<double, 2> dp(oo);
  auto rhs = [&c, N](double eta, const State2& y) {
    State2 dy;
    dy[0] = y[1];
    dy[1] = -((N - 1) / eta + eta / 2) * y[1] - source(c, y[0]);
    return dy;
  };
  const double e2 = eta_seed * eta_seed;
  State2 y0;
  y0 << alpha + c2 * e2 + c4 * e2 * e2, 2 * c2 * eta_seed + 4 * c4 * e2 * eta_seed;
  auto traj = std::make_shared<DenseTrajectory<double, 2>>(dp.integrate(rhs, eta_seed, y0, eta_max));
  if (traj->status != OdeStatus::completed)
    throw NumericalError("profile integration failed at eta = " + std::to_string(traj->t_end()) +
                         " (alpha = " + std::to_string(alpha) + ")");
  ProfileSolution prof(q, N, alpha, eta_max, eta_seed, c2, c4, std::move(traj));
  for (double eta : prof.eta_grid(64)) {
    if (eta > 0 && !(prof.dphi(eta) < 0)) {
      prof.decreasing = false;
      break;
    }
  }
  return prof;
}

double singular_profile(double q, double N, double eta, std::optional<double> q_ref) {
  if (!(eta > 0)) throw DomainError("singular profile needs eta > 0");
  return Canonical{q}.F_inverse(eta * eta / target_denominator(q, N, q_ref));
}

double singular_profile_derivative(double q, double N, double eta, std::optional<double> q_ref) {
  const double d = target_denominator(q, N, q_ref);
  return Canonical{q}.dF_inverse(eta * eta / d) * 2 * eta / d;
}

double profile_residual(const ProfileSolution& prof, int per_unit) {
  // Centered differences of the dense phi' against the equation's phi''.
  const Canonical c{prof.q()};
  const double N = prof.N();
  double worst = 0;
  const double h = 1e-4;
  for (double eta : prof.eta_grid(per_unit)) {
    if (eta < 10 * h || eta + h > prof.eta_max()) continue;
    const double d2 = (prof.dphi(eta + h) - prof.dphi(eta - h)) / (2 * h);
    const double v = prof.phi(eta), dv = prof.dphi(eta);
    const double t1 = (N - 1) / eta * dv, t2 = eta / 2 * dv, t3 = source(c, v);
    const double res = d2 + t1 + t2 + t3;
    const double scale = std::max({1.0, std::abs(d2), std::abs(t1), std::abs(t2), std::abs(t3)});
    worst = std::max(worst, std::abs(res) / scale);
  }
  return worst;
}

nlohmann::json IntersectionRecord::to_json() const {
  return {{"q", q},
          {"q_ref", q_ref},
          {"N", N},
          {"alpha0", alpha0},
          {"eta0", eta0},
          {"transversality_margin", transversality_margin},
          {"dphi", dphi},
          {"dtarget", dtarget},
          {"max_gap_before", max_gap_before},
          {"first", first},
          {"sign_pattern", sign_pattern},
          {"alpha_boundary", alpha_boundary}};
}

std::optional<IntersectionRecord> first_crossing(double q, double N, double alpha,
                                                 std::optional<double> q_ref,
                                                 const AlphaScanOptions& opts) {
  const ProfileSolution prof = solve_profile(q, N, alpha, opts.eta_max);
  auto gap = [&](double eta) { return prof.phi(eta) - singular_profile(q, N, eta, q_ref); };

  // Log-spaced points below the first uniform point catch crossings very close to the origin.
  const double h = 1.0 / opts.points_per_unit;
  std::vector<double> grid;
  for (double e = 1e-6; e < h * (1 - 1e-9); e *= std::pow(10.0, 1.0 / 32)) grid.push_back(e);
  for (double e : prof.eta_grid(opts.points_per_unit))
    if (e > 0) grid.push_back(e);

  double max_before = -std::numeric_limits<double>::infinity();
  double prev_eta = 0, prev_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double e = grid[k];
    const double gv = gap(e);
    if (gv >= 0) {
      if (k == 0) return std::nullopt;  // already above at the smallest radius: unresolved
      const double eta0 = gv == 0 ? e : bracketed_root(gap, prev_eta, e, prev_gap, gv);
      IntersectionRecord rec;
      rec.q = q;
      rec.q_ref = q_ref.value_or(q);
      rec.N = N;
      rec.alpha0 = alpha;
      rec.eta0 = eta0;
      rec.dphi = prof.dphi(eta0);
      rec.dtarget = singular_profile_derivative(q, N, eta0, q_ref);
      rec.transversality_margin = std::abs(rec.dphi - rec.dtarget);
      rec.max_gap_before = max_before;
      rec.first = true;
      // below before, equal at, above after
      bool above_after = true;
      for (std::size_t j = k; j < grid.size() && grid[j] <= e + 4 * h; ++j)
        if (!(gap(grid[j]) > 0)) above_after = false;
      rec.sign_pattern = max_before < 0 && std::abs(gap(eta0)) < 1e-10 * std::max(1.0, std::abs(prof.phi(eta0))) &&
                         above_after;
      return rec;
    }
    max_before = std::max(max_before, gv);
    prev_eta = e;
    prev_gap = gv;
  }
  return std::nullopt;
}

IntersectionRecord find_alpha0(double q, double N, std::optional<double> q_ref,
                               const AlphaScanOptions& opts) {
  const double ref = singular_profile(q, N, 1.0, q_ref);
  if (!(ref > 0)) throw DomainError("reference value of the singular profile is not positive");
  const double lo = std::log(ref * opts.bracket_low), hi = std::log(ref * opts.bracket_high);
  auto crosses = [&](double log_alpha) {
    return first_crossing(q, N, std::exp(log_alpha), q_ref, opts).has_value();
  };

  int first = -1;
  double step = (hi - lo) / (opts.scan_points - 1);
  for (int k = 0; k < opts.scan_points; ++k) {
    if (crosses(lo + k * step)) {
      first = k;
      break;
    }
  }
  if (first < 0)
    throw NoCrossingError("no profile in the alpha bracket crosses the singular profile");

  double boundary = lo;
  if (first > 0) {
    double a = lo + (first - 1) * step, b = lo + first * step;
    for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
      const double m = (a + b) / 2;
      (crosses(m) ? b : a) = m;
    }
    boundary = b;
  }

  const double wanted = opts.margin_floor * opts.margin_factor;
  double delta = 1e-6;
  std::optional<IntersectionRecord> best;
  while (boundary + delta <= hi + 1e-12) {
    auto rec = first_crossing(q, N, std::exp(boundary + delta), q_ref, opts);
    if (rec && rec->sign_pattern && rec->transversality_margin >= wanted) {
      rec->alpha_boundary = std::exp(boundary);
      return *rec;
    }
    if (rec && rec->sign_pattern && (!best || rec->transversality_margin > best->transversality_margin))
      best = rec;
    delta *= 1.5;
  }
  if (best && best->transversality_margin > opts.margin_floor) {
    best->alpha_boundary = std::exp(boundary);
    return *best;
  }
  throw NoCrossingError("crossings in the alpha bracket are not transversal");
}

nlohmann::json EpsilonChoice::to_json() const {
  return {{"epsilon", epsilon}, {"q", q}, {"record", record.to_json()}, {"tried", tried}};
}

EpsilonChoice choose_epsilon(const Nonlinearity& nl, double N, const std::vector<double>& trials,
                             const AlphaScanOptions& opts) {
  const double qf = nl.qf_declared();
  EpsilonChoice out;
  if (qf == 1.0) {
    out.epsilon = 0;
    out.q = 1;
    out.record = find_alpha0(1.0, N, 1.0, opts);
    out.tried.push_back(0);
    return out;
  }
  const double qS = exponent_table(N).q_S;
  // The supersolution coefficient q - f'F must become nonnegative for large u.
  auto tail_ok = [&](double q) {
    for (double u : {1e3, 1e4, 1e5, 1e6})
      if (nl.fprime_F(u) > q + 1e-12) return false;
    return true;
  };

  std::vector<double> candidates{0.0};
  candidates.insert(candidates.end(), trials.begin(), trials.end());
  bool found = false;
  for (double eps : candidates) {
    const double q = qf + eps;
    if (!(q < qS) || !tail_ok(q)) continue;
    out.tried.push_back(eps);
    try {
      const IntersectionRecord rec = find_alpha0(q, N, qf, opts);
      if (!found || eps < out.epsilon) {
        out.epsilon = eps;
        out.q = q;
        out.record = rec;
        found = true;
      }
      if (eps == 0) break;
    } catch (const NoCrossingError&) {
    }
  }
  if (!found) throw NumericalError("no trial epsilon gives a transversal crossing");
  return out;
}

ThetaInterpolant::ThetaInterpolant(const RadialProfile& profile, const Nonlinearity& nl) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < profile.r().size(); ++k) {
    x.push_back(std::log(profile.r()[k]));
    y.push_back(asymptotic_theta(nl, profile.N(), profile.u()[k], profile.r()[k]));
  }
  pchip_ = Pchip<double>(std::move(x), std::move(y));
  r_min_ = profile.r().front();
  r_max_ = profile.r().back();
}

double ThetaInterpolant::operator()(double r) const {
  if (r < r_min_ * (1 - 1e-12) || r > r_max_ * (1 + 1e-12))
    throw OutOfRangeError("theta requested outside the computed singular profile");
  return pchip_(std::log(r));
}

nlohmann::json IntersectionCurve::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({{"t", p.t}, {"r", p.r}, {"eta", p.eta}});
  return {{"eta0", eta0},          {"points", pts},
          {"root_lost", root_lost}, {"t_lost", t_lost},
          {"r_decreasing", r_decreasing}, {"eta_converges", eta_converges},
          {"continuity", continuity}, {"sign_pattern", sign_pattern}};
}

IntersectionCurve intersection_curve(const Nonlinearity& nl, const RadialProfile& singular,
                                     const ProfileSolution& profile, double eta0,
                                     const std::vector<double>& t_grid,
                                     const AlphaScanOptions& opts) {
  const Canonical c{profile.q()};
  const double N = singular.N();
  const double denom = 2 * N - 4 * nl.qf_declared();
  const ThetaInterpolant theta(singular, nl);

  // Interface equation in log form: log(t F_q(phi(eta))) - log F(u*(sqrt(t) eta)).
  auto exact = [&](double t, double eta) {
    const double r = std::sqrt(t) * eta;
    return std::log(t * c.F(profile.phi(eta))) - std::log(nl.F(singular.u_at(r)));
  };
  // Same equation with u* replaced by its interpolated asymptotic form.
  auto approx = [&](double t, double eta) {
    const double r = std::sqrt(t) * eta;
    return std::log(c.F(profile.phi(eta))) - std::log(eta * eta * (1 + theta(r)) / denom);
  };

  IntersectionCurve out;
  out.eta0 = eta0;
  out.sign_pattern = true;
  std::vector<double> ts(t_grid);
  std::sort(ts.begin(), ts.end());
  const double h = 1.0 / opts.points_per_unit;
  const double eta_hi = std::min(profile.eta_max(), 4 * eta0);

  for (double t : ts) {
    const double s = std::sqrt(t);
    const double eta_lo = std::max(h, theta.r_min() / s);
    bool ok = eta_lo < eta_hi;
    double root = 0;
    if (ok) {
      // First sign change from + (phi below u*) to - on the scan grid.
      double pe = eta_lo, pg = approx(t, eta_lo);
      ok = pg > 0;
      bool found = false;
      for (double e = eta_lo + h; ok && e <= eta_hi; e += h) {
        const double g = approx(t, e);
        if (g <= 0) {
          const double e1 = std::min(e, eta_hi);
          const double ga = exact(t, pe), gb = exact(t, e1);
          if ((ga > 0) != (gb > 0)) {
            root = bracketed_root([&](double x) { return exact(t, x); }, pe, e1, ga, gb);
          } else {
            root = bracketed_root([&](double x) { return approx(t, x); }, pe, e1, pg, g);
          }
          found = true;
          break;
        }
        pe = e;
        pg = g;
      }
      ok = ok && found;
      if (ok) {
        // Sign pattern: ubar < u* just inside, ubar > u* just outside (in F-space, reversed).
        const double inside = exact(t, std::max(eta_lo, root - h));
        const double outside = exact(t, std::min(eta_hi, root + h));
        if (!(inside > 0 && outside < 0)) out.sign_pattern = false;
      }
    }
    if (!ok) {
      out.root_lost = true;
      out.t_lost = t;
      break;
    }
    out.points.push_back({t, s * root, root});
  }

  const auto& p = out.points;
  out.r_decreasing = p.size() >= 2;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (!(p[k].r > p[k - 1].r)) out.r_decreasing = false;
  // |eta - eta0| shrinks monotonically as t decreases over the smallest third of the
  // grid; with logarithmic corrections (q_f = 1) it need not be monotone further out.
  // Below ~1e-10 relative the roots only carry the profile integration error.
  out.eta_converges = p.size() >= 2;
  const double noise = 1e-9 * eta0;
  for (std::size_t k = 1; k < std::max<std::size_t>(3, p.size() / 3) && k < p.size(); ++k)
    if (std::abs(p[k].eta - eta0) + noise < std::abs(p[k - 1].eta - eta0)) out.eta_converges = false;
  // A jump shows up as a slope |d eta / dt| ten times larger than both neighbours.
  out.continuity = true;
  std::vector<double> slope;
  for (std::size_t k = 1; k < p.size(); ++k)
    slope.push_back(std::abs(p[k].eta - p[k - 1].eta) / (p[k].t - p[k - 1].t));
  for (std::size_t k = 0; k < slope.size(); ++k) {
    const double jump = std::abs(p[k + 1].eta - p[k].eta);
    if (jump <= 1e-8) continue;
    double nb = 0;
    if (k > 0) nb = std::max(nb, slope[k - 1]);
    if (k + 1 < slope.size()) nb = std::max(nb, slope[k + 1]);
    if (slope.size() > 1 && slope[k] > 10 * nb) out.continuity = false;
  }
  return out;
}

}  // namespace nonuniq
