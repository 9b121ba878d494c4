#include "nonuniq/supersolution.hpp"

#include "nonuniq/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nonuniq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_fq(const Canonical& c, double phi) {
  if (c.exponential()) return phi;
  return c.p() * std::log(phi);
}

double log_Fq(const Canonical& c, double phi) {
  if (c.exponential()) return -phi;
  const double p = c.p();
  return (1 - p) * std::log(phi) - std::log(p - 1);
}

}  // namespace

double ubar(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t) {
  if (!(t > 0)) throw DomainError("ubar needs t > 0");
  const Canonical c{profile.q()};
  const double phi = profile.phi(r / std::sqrt(t));
  return nl.F_inverse(std::exp(std::log(t) + log_Fq(c, phi)));
}

double ubar_r(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t) {
  if (r == 0) return 0;
  const Canonical c{profile.q()};
  const double eta = r / std::sqrt(t);
  const double phi = profile.phi(eta), dphi = profile.dphi(eta);
  if (dphi == 0) return 0;
  const double u = ubar(nl, profile, r, t);
  const double mag =
      std::exp(nl.log_f(u) + 0.5 * std::log(t) + std::log(std::abs(dphi)) - log_fq(c, phi));
  return dphi < 0 ? -mag : mag;
}

double ubar_t(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t) {
  const Canonical c{profile.q()};
  const double eta = r / std::sqrt(t);
  const double phi = profile.phi(eta), dphi = profile.dphi(eta);
  const double u = ubar(nl, profile, r, t);
  return -std::exp(nl.log_f(u) + log_Fq(c, phi)) * (1 + eta * dphi / (2 * c.fF(phi)));
}

double u_large(const Nonlinearity& nl, double q, double u_scan_max) {
  const double tol = 1e-10 * q;
  auto coef = [&](double u) { return q - nl.fprime_F(u); };
  std::vector<double> us;
  for (double u = 1e-3; u <= u_scan_max * (1 + 1e-12); u *= std::pow(10.0, 1.0 / 40)) us.push_back(u);
  int last_bad = -1;
  for (int k = 0; k < static_cast<int>(us.size()); ++k)
    if (coef(us[k]) < -tol) last_bad = k;
  if (last_bad < 0) return 0;
  if (last_bad + 1 == static_cast<int>(us.size())) return kInf;
  auto g = [&](double u) { return coef(u) + tol; };
  const double root = bracketed_root(g, us[last_bad], us[last_bad + 1]);
  return 1.05 * root;
}

nlohmann::json ResidualReport::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : samples)
    s.push_back({{"r", x.r}, {"u", x.u}, {"coefficient", x.coefficient}, {"residual", x.residual},
                 {"predicted", x.predicted}});
  return {{"t", t},
          {"samples", s},
          {"min_coefficient_above", min_coefficient_above},
          {"min_residual_above", min_residual_above},
          {"max_mismatch", max_mismatch},
          {"holds", holds}};
}

ResidualReport supersolution_residual(const Nonlinearity& nl, const ProfileSolution& profile,
                                      double q, double t, const std::vector<double>& radii,
                                      double large, double tolerance) {
  const double N = profile.N();
  ResidualReport rep;
  rep.t = t;
  rep.min_coefficient_above = kInf;
  rep.min_residual_above = kInf;
  for (double r : radii) {
    if (!(r > 0)) continue;
    const double h = 1e-4 * r;
    const double u = ubar(nl, profile, r, t);
    const double ur = ubar_r(nl, profile, r, t);
    const double urr = (ubar_r(nl, profile, r + h, t) - ubar_r(nl, profile, r - h, t)) / (2 * h);
    const double ut = ubar_t(nl, profile, r, t);
    const double lap = urr + (N - 1) / r * ur;
    const double fu = nl.f(u);
    const double scale = std::max({std::abs(ut), std::abs(lap), fu, 1e-300});
    ResidualSample s;
    s.r = r;
    s.u = u;
    s.coefficient = q - nl.fprime_F(u);
    s.residual = (ut - lap - fu) / scale;
    // (q - f'F) / (f F) |ubar_r|^2
    s.predicted = s.coefficient * ur * ur / (fu * nl.F(u)) / scale;
    rep.max_mismatch = std::max(rep.max_mismatch, std::abs(s.residual - s.predicted));
    if (u >= large) {
      rep.min_coefficient_above = std::min(rep.min_coefficient_above, s.coefficient);
      rep.min_residual_above = std::min(rep.min_residual_above, s.residual);
    }
    rep.samples.push_back(s);
  }
  rep.holds = rep.min_coefficient_above >= -1e-10 * q && rep.min_residual_above >= -tolerance;
  return rep;
}

GluedSupersolution::GluedSupersolution(Nonlinearity nl, RadialProfile singular,
                                       ProfileSolution profile, IntersectionCurve curve,
                                       double t0, double large)
    : nl_(std::move(nl)),
      singular_(std::move(singular)),
      profile_(std::move(profile)),
      curve_(std::move(curve)),
      t0_(t0),
      large_(large) {
  if (curve_.points.size() < 2) throw DomainError("interface curve needs at least two points");
  c0_ = Canonical{profile_.q()}.F(profile_.alpha());
  std::vector<double> lt, eta;
  for (const auto& p : curve_.points) {
    lt.push_back(std::log(p.t));
    eta.push_back(p.eta);
  }
  eta_of_log_t_ = Pchip<double>(std::move(lt), std::move(eta));
}

double GluedSupersolution::interface_radius(double t) const {
  if (!(t > 0) || t > t0_ * (1 + 1e-12)) throw OutOfRangeError("time outside (0, t0]");
  const double lt = std::log(t);
  double guess;
  if (lt <= eta_of_log_t_.front()) guess = curve_.points.front().eta;
  else if (lt >= eta_of_log_t_.back()) guess = curve_.points.back().eta;
  else guess = eta_of_log_t_(lt);

  const Canonical c{profile_.q()};
  const double s = std::sqrt(t);
  auto gap = [&](double eta) {
    return std::log(t) + log_Fq(c, profile_.phi(eta)) - std::log(nl_.F(singular_.u_at(s * eta)));
  };
  for (double d = 1e-3; d <= 0.5; d *= 2) {
    const double lo = guess * (1 - d), hi = std::min(guess * (1 + d), profile_.eta_max());
    const double glo = gap(lo), ghi = gap(hi);
    if (glo > 0 && ghi <= 0) return s * bracketed_root(gap, lo, hi, glo, ghi);
  }
  throw RootLossError("interface root lost", t);
}

double GluedSupersolution::sup(double t) const { return nl_.F_inverse(c0_ * t); }

GluedSupersolution::Slice GluedSupersolution::at(double t) const {
  if (t == 0) return Slice(this, 0, 0);
  return Slice(this, t, interface_radius(t));
}

double GluedSupersolution::Slice::operator()(double r) const {
  if (t_ > 0 && r < r_) return ubar(owner_->nl_, owner_->profile_, r, t_);
  return owner_->singular_.u_at(r);
}

nlohmann::json GluedReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points)
    pts.push_back({{"t", p.t},
                   {"r", p.r},
                   {"u_star", p.u_star},
                   {"continuity", p.continuity},
                   {"kink", p.kink},
                   {"large", p.large},
                   {"min_coefficient", p.min_coefficient}});
  return {{"points", pts},
          {"u_large", u_large},
          {"continuity", continuity},
          {"kink", kink},
          {"large", large},
          {"monotone_largeness", monotone_largeness},
          {"coefficient", coefficient},
          {"sup_identity", sup_identity},
          {"t0_admissible", t0_admissible},
          {"passed", all()}};
}

GluedSupersolution build_glued(const Nonlinearity& nl, const RadialProfile& singular,
                               const ProfileSolution& profile, const IntersectionCurve& curve,
                               double t0) {
  const double large = u_large(nl, profile.q());
  if (!std::isfinite(large))
    throw NumericalError("q - f'F stays negative over the whole u scan");
  double admissible = 0;
  for (const auto& p : curve.points) {
    if (p.t > t0 * (1 + 1e-12)) break;
    if (singular.u_at(p.r) < large) break;
    admissible = p.t;
  }
  if (!(admissible > 0))
    throw NumericalError("u*(r(t)) is below u_large already at the smallest sampled t");
  return GluedSupersolution(nl, singular, profile, curve, std::min(t0, admissible), large);
}

GluedReport check_glued(const GluedSupersolution& v, const std::vector<double>& t_samples) {
  const Nonlinearity& nl = v.nonlinearity();
  const double q = v.q();
  GluedReport rep;
  rep.u_large = v.large();
  rep.continuity = rep.kink = rep.large = rep.coefficient = rep.sup_identity = true;
  std::vector<double> ts(t_samples);
  std::sort(ts.begin(), ts.end());
  bool prefix_ok = true;
  for (double t : ts) {
    if (t > v.t0() * (1 + 1e-12)) break;
    GluedCheckPoint cp;
    cp.t = t;
    cp.r = v.interface_radius(t);
    cp.u_star = v.singular().u_at(cp.r);
    const double ub = ubar(nl, v.profile(), cp.r, t);
    cp.continuity = std::abs(ub - cp.u_star) / std::abs(cp.u_star);
    cp.kink = ubar_r(nl, v.profile(), cp.r, t) - v.singular().du_at(cp.r);
    cp.large = cp.u_star >= v.large();
    cp.min_coefficient = kInf;
    for (int k = 0; k <= 32; ++k) {
      const double u = ubar(nl, v.profile(), cp.r * k / 32.0, t);
      cp.min_coefficient = std::min(cp.min_coefficient, q - nl.fprime_F(u));
    }
    const double top = ubar(nl, v.profile(), 0, t);
    const bool sup_ok = std::abs(top - v.sup(t)) <= 1e-10 * std::abs(top) &&
                        top >= ub * (1 - 1e-12);
    const bool ok_c = cp.continuity <= 1e-8, ok_k = cp.kink > 0,
               ok_q = cp.min_coefficient >= -1e-10 * q;
    rep.continuity &= ok_c;
    rep.kink &= ok_k;
    rep.large &= cp.large;
    rep.coefficient &= ok_q;
    rep.sup_identity &= sup_ok;
    prefix_ok = prefix_ok && ok_c && ok_k && cp.large && ok_q && sup_ok;
    if (prefix_ok) rep.t0_admissible = t;
    rep.points.push_back(cp);
  }
  rep.monotone_largeness = true;
  for (std::size_t k = 1; k < rep.points.size(); ++k)
    if (!(rep.points[k].u_star < rep.points[k - 1].u_star)) rep.monotone_largeness = false;
  return rep;
}

GluedSupersolution construct_supersolution(const Nonlinearity& nl, const RadialProfile& singular,
                                           const std::vector<double>& t_grid,
                                           const SupersolutionOptions& opts) {
  if (t_grid.empty()) throw DomainError("empty t grid");
  const double N = singular.N();
  const EpsilonChoice choice = choose_epsilon(nl, N, {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001},
                                              opts.scan);
  nlohmann::json attempts = nlohmann::json::array();
  for (double factor : opts.margin_factors) {
    AlphaScanOptions scan = opts.scan;
    scan.margin_factor = factor;
    IntersectionRecord rec = choice.record;
    if (factor != opts.scan.margin_factor) {
      try {
        rec = find_alpha0(choice.q, N, nl.qf_declared(), scan);
      } catch (const NoCrossingError&) {
        attempts.push_back({{"margin_factor", factor}, {"outcome", "no crossing"}});
        continue;
      }
    }
    const ProfileSolution profile = solve_profile(choice.q, N, rec.alpha0, scan.eta_max);
    const IntersectionCurve curve = intersection_curve(nl, singular, profile, rec.eta0, t_grid, scan);
    const bool ok = !curve.root_lost && curve.sign_pattern && curve.continuity;
    attempts.push_back({{"margin_factor", factor},
                        {"alpha0", rec.alpha0},
                        {"eta0", rec.eta0},
                        {"margin", rec.transversality_margin},
                        {"outcome", ok ? "accepted" : (curve.root_lost ? "root lost" : "curve check failed")}});
    if (!ok) continue;
    GluedSupersolution v =
        build_glued(nl, singular, profile, curve, *std::max_element(t_grid.begin(), t_grid.end()));
    if (v.t0() < opts.required_t0 * (1 - 1e-12)) {
      attempts.back()["outcome"] = "t0 too small";
      attempts.back()["t0"] = v.t0();
      continue;
    }
    v.selection = {{"epsilon", choice.epsilon},
                   {"q", choice.q},
                   {"record", rec.to_json()},
                   {"smallest_alpha_record", choice.record.to_json()},
                   {"attempts", attempts},
                   {"u_large", v.large()},
                   {"t0", v.t0()}};
    return v;
  }
  throw RootLossError("no alpha0 gives an interface curve on the whole t grid with the required t0",
                      t_grid.front());
}

}  // namespace nonuniq
