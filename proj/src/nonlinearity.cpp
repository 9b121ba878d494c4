#include "nonuniq/nonlinearity.hpp"

#include "nonuniq/exponents.hpp"
#include "nonuniq/quadrature.hpp"
#include "nonuniq/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace nonuniq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integral of exp(-log_ratio(u, x)) over x in [0, inf), i.e. f(u) * F(u).
double scaled_tail_integral(const NonlinearitySpec& s, double u) {
  const double g = s.dlog_f(u);
  if (!(g > 0)) throw DivergentTailError("f is not increasing at the tail start");
  const double q = std::max(s.qf_declared, 1.0);
  auto integrand = [&](double x) { return std::exp(-s.log_ratio(u, x)); };
  auto tail = [&](double x) {
    const double gx = s.dlog_f(u + x);
    if (!(gx > 0)) return kInf;
    return 4 * q * std::exp(-s.log_ratio(u, x)) / gx;
  };
  return integrate_to_infinity(integrand, 0.0, 1.0 / g, tail, 1e-13, 400);
}

}  // namespace

/// Tabulated F on a node set where 1/f changes by about ten percent between
/// neighbours. Between nodes a fixed Gauss-Kronrod panel closes the gap.
class TailTable {
 public:
  TailTable(const NonlinearitySpec& spec, double u_lo)
      : log_f_(spec.log_f), dlog_f_(spec.dlog_f) {
    constexpr double kLogFTop = 650.0;
    std::vector<double> bps = spec.breakpoints;
    std::sort(bps.begin(), bps.end());
    double u = u_lo;
    u_.push_back(u);
    std::size_t next_bp = 0;
    while (next_bp < bps.size() && bps[next_bp] <= u) ++next_bp;
    while (log_f_(u) < kLogFTop) {
      const double g = dlog_f_(u);
      double step = g > 0 ? 0.1 / g : 0.1 * std::max(std::abs(u), 1.0);
      step = std::min(step, 0.1 * std::max(std::abs(u), 1.0));
      double next = u + step;
      if (next_bp < bps.size() && next >= bps[next_bp]) next = bps[next_bp++];
      if (!(next > u) || u_.size() > 200000) break;
      u = next;
      u_.push_back(u);
    }
    const std::size_t n = u_.size();
    F_.assign(n, 0.0);
    F_[n - 1] = std::exp(-log_f_(u_[n - 1])) * scaled_tail_integral(spec, u_[n - 1]);
    for (std::size_t j = n - 1; j-- > 0;) F_[j] = F_[j + 1] + panel(u_[j], u_[j + 1]);
  }

  double u_lo() const { return u_.front(); }
  double u_hi() const { return u_.back(); }
  double F_lo() const { return F_.front(); }
  double F_hi() const { return F_.back(); }

  double F(double u) const {
    const std::size_t j = index_of_u(u);
    return F_[j + 1] + panel(u, u_[j + 1]);
  }

  double F_inverse(double s) const {
    // F_ is decreasing; find j with F_[j] >= s > F_[j+1].
    auto it = std::lower_bound(F_.begin(), F_.end(), s, std::greater<double>());
    std::size_t j = it == F_.begin() ? 0 : static_cast<std::size_t>(it - F_.begin()) - 1;
    j = std::min(j, F_.size() - 2);
    double a = u_[j], b = u_[j + 1];
    const double log_s = std::log(s);
    // Newton on log F(u) - log s, with F' = -1/f, kept inside [a, b].
    const double la = std::log(F_[j]), lb = std::log(F_[j + 1]);
    double u = a + (b - a) * (la - log_s) / (la - lb);
    for (int it_n = 0; it_n < 50; ++it_n) {
      const double Fu = F(u);
      const double G = std::log(Fu) - log_s;
      if (std::abs(G) < 1e-15) return u;
      if (G > 0) a = u; else b = u;
      const double step = G * std::exp(log_f_(u)) * Fu;
      double next = u + step;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - u) <= 4e-16 * std::max(std::abs(u), 1e-300)) return next;
      u = next;
    }
    return u;
  }

 private:
  double panel(double a, double b) const {
    if (a == b) return 0.0;
    auto w = [this](double s) { return std::exp(-log_f_(s)); };
    return integrate_panel(w, a, b);
  }

  std::size_t index_of_u(double u) const {
    auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t j = it == u_.begin() ? 0 : static_cast<std::size_t>(it - u_.begin()) - 1;
    return std::min(j, u_.size() - 2);
  }

  ScalarFn log_f_, dlog_f_;
  std::vector<double> u_, F_;
};

Nonlinearity::Nonlinearity(NonlinearitySpec spec) : spec_(std::move(spec)) {
  if (!spec_.f || !spec_.df || !spec_.d2f || !spec_.log_f || !spec_.dlog_f || !spec_.d2log_f) {
    throw DomainError("nonlinearity '" + spec_.name + "' is missing an evaluation function");
  }
  if (!spec_.log_ratio) {
    auto lf = spec_.log_f;
    spec_.log_ratio = [lf](double u, double x) { return lf(u + x) - lf(u); };
  }
  if (spec_.qf_declared < 1) throw DomainError("q_f must be at least 1");
  if (!spec_.closed_F) {
    try {
      (void)scaled_tail_integral(spec_, 1.0);
      table_ = std::make_shared<const TailTable>(spec_, spec_.extend_by_zero ? 1e-3 : -30.0);
    } catch (const DivergentTailError&) {
      table_.reset();
    }
  }
}

ExtendedReal Nonlinearity::pf_declared() const {
  if (spec_.qf_declared == 1) return ExtendedReal::infinity();
  return spec_.qf_declared / (spec_.qf_declared - 1);
}

double Nonlinearity::f(double u) const {
  if (spec_.extend_by_zero && u <= 0) return 0.0;
  return spec_.f(u);
}

double Nonlinearity::df(double u) const {
  if (spec_.extend_by_zero && u <= 0) return u == 0 ? spec_.df(0.0) : 0.0;
  return spec_.df(u);
}

double Nonlinearity::d2f(double u) const {
  if (spec_.extend_by_zero && u <= 0) return 0.0;
  return spec_.d2f(u);
}

double Nonlinearity::scaled_tail(double u) const { return scaled_tail_integral(spec_, u); }

double Nonlinearity::F_direct(double u) const {
  if (spec_.extend_by_zero && u <= 0) return kInf;
  return std::exp(-log_f(u)) * scaled_tail(u);
}

double Nonlinearity::F(double u) const {
  if (spec_.closed_F) return (*spec_.closed_F)(u);
  if (spec_.extend_by_zero && u <= 0) return kInf;
  if (table_ && u >= table_->u_lo() && u <= table_->u_hi()) return table_->F(u);
  return F_direct(u);
}

double Nonlinearity::F_inverse(double s) const {
  if (!(s > 0)) throw OutOfRangeError("F^{-1} needs a positive argument");
  if (std::isinf(s)) throw OutOfRangeError("F^{-1} of +inf");
  if (spec_.closed_F_inverse) return (*spec_.closed_F_inverse)(s);
  if (table_ && s <= table_->F_lo() && s >= table_->F_hi()) return table_->F_inverse(s);
  // Bracket on a geometric (or, on the whole line, arithmetic) sequence.
  auto h = [&](double u) { return std::log(F(u)) - std::log(s); };
  double a = table_ ? table_->u_lo() : 1.0;
  double b = a;
  if (h(a) > 0) {
    b = a;
    for (int k = 0; h(b) > 0; ++k) {
      a = b;
      b = b > 0 ? 2 * b + 1 : b / 2;
      if (k > 2000 || std::isinf(b)) throw OutOfRangeError("F^{-1}: argument below the range of F");
    }
  } else {
    for (int k = 0; h(a) <= 0; ++k) {
      b = a;
      if (spec_.extend_by_zero) {
        a = a / 2;
        if (a < 1e-300) throw OutOfRangeError("F^{-1}: argument exceeds sup F");
      } else {
        a = a - std::max(1.0, std::abs(a));
        if (k > 2000) throw OutOfRangeError("F^{-1}: argument exceeds sup F");
      }
    }
  }
  return bracketed_root(h, a, b);
}

double Nonlinearity::F0(double u) const {
  if (spec_.closed_F0) return (*spec_.closed_F0)(u);
  if (u <= 0) return 0.0;
  std::vector<double> cuts{0.0};
  for (double b : spec_.breakpoints)
    if (b > 0 && b < u) cuts.push_back(b);
  cuts.push_back(u);
  double sum = 0;
  auto fn = [this](double s) { return f(s); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += integrate(fn, cuts[i], cuts[i + 1], 1e-14);
  return sum;
}

double Nonlinearity::q_ratio(double u) const {
  if (!(u > 0)) throw DomainError("q_ratio needs u > 0");
  const double second = d2f(u);
  if (second == 0) throw DomainError("q_ratio: f'' vanishes at u = " + std::to_string(u));
  const double g = dlog_f(u);
  const double gp = d2log_f(u);
  return g * g / (g * g + gp);
}

double Nonlinearity::fprime_F(double u) const {
  if (spec_.closed_F) {
    const double a = df(u), b = F(u);
    if (std::isfinite(a) && b > 0 && std::isfinite(a * b)) return a * b;
  }
  return dlog_f(u) * scaled_tail(u);
}

double Nonlinearity::F0_over_uf(double u) const {
  if (!(u > 0)) throw DomainError("F0_over_uf needs u > 0");
  auto integrand = [&](double y) { return std::exp(log_ratio(u, -y)); };
  const double g = dlog_f(u);
  double w = g > 0 ? std::min(u, 1.0 / g) : u;
  double y = 0, sum = 0;
  while (y < u) {
    const double b = std::min(u, y + w);
    sum += integrate(integrand, y, b, 1e-14);
    y = b;
    w *= 2;
  }
  return sum / u;
}

// ---------------------------------------------------------------------------
// Builders

Nonlinearity power(double p) {
  if (!(p > 1)) throw DomainError("power: exponent must exceed 1");
  NonlinearitySpec s;
  s.name = "power";
  s.params = {{"p", p}};
  s.f = [p](double u) { return std::pow(u, p); };
  s.df = [p](double u) { return p * std::pow(u, p - 1); };
  s.d2f = [p](double u) { return p * (p - 1) * std::pow(u, p - 2); };
  s.log_f = [p](double u) { return p * std::log(u); };
  s.dlog_f = [p](double u) { return p / u; };
  s.d2log_f = [p](double u) { return -p / (u * u); };
  s.log_ratio = [p](double u, double x) { return p * std::log1p(x / u); };
  s.qf_declared = p / (p - 1);
  s.closed_F = [p](double u) { return u <= 0 ? kInf : std::pow(u, 1 - p) / (p - 1); };
  s.closed_F_inverse = [p](double v) { return std::pow((p - 1) * v, -1 / (p - 1)); };
  s.closed_F0 = [p](double u) { return u <= 0 ? 0.0 : std::pow(u, p + 1) / (p + 1); };
  return Nonlinearity(std::move(s));
}

Nonlinearity exponential() {
  NonlinearitySpec s;
  s.name = "exponential";
  s.f = [](double u) { return std::exp(u); };
  s.df = s.f;
  s.d2f = s.f;
  s.log_f = [](double u) { return u; };
  s.dlog_f = [](double) { return 1.0; };
  s.d2log_f = [](double) { return 0.0; };
  s.log_ratio = [](double, double x) { return x; };
  s.qf_declared = 1.0;
  s.closed_F = [](double u) { return std::exp(-u); };
  s.closed_F_inverse = [](double v) { return -std::log(v); };
  s.closed_F0 = [](double u) { return std::expm1(u); };
  s.extend_by_zero = false;
  return Nonlinearity(std::move(s));
}

Nonlinearity example1(double beta, double gamma) {
  if (!(gamma > 1)) throw DomainError("example1: gamma must exceed 1");
  if (!(beta > 1)) throw DomainError("example1: beta must exceed 1");
  NonlinearitySpec s;
  s.name = "example1";
  s.params = {{"beta", beta}, {"gamma", gamma}};
  s.log_f = [beta, gamma](double u) { return beta * std::log(u) + std::pow(u, gamma); };
  s.dlog_f = [beta, gamma](double u) { return beta / u + gamma * std::pow(u, gamma - 1); };
  s.d2log_f = [beta, gamma](double u) {
    return -beta / (u * u) + gamma * (gamma - 1) * std::pow(u, gamma - 2);
  };
  s.f = [beta, gamma](double u) { return std::pow(u, beta) * std::exp(std::pow(u, gamma)); };
  s.df = [beta, gamma](double u) {
    if (u == 0) return 0.0;
    const double g = beta / u + gamma * std::pow(u, gamma - 1);
    return g * std::pow(u, beta) * std::exp(std::pow(u, gamma));
  };
  s.d2f = [beta, gamma](double u) {
    if (u == 0) return 0.0;
    const double g = beta / u + gamma * std::pow(u, gamma - 1);
    const double gp = -beta / (u * u) + gamma * (gamma - 1) * std::pow(u, gamma - 2);
    return (g * g + gp) * std::pow(u, beta) * std::exp(std::pow(u, gamma));
  };
  s.log_ratio = [beta, gamma](double u, double x) {
    const double L = std::log1p(x / u);
    return beta * L + std::pow(u, gamma) * std::expm1(gamma * L);
  };
  s.qf_declared = 1.0;
  return Nonlinearity(std::move(s));
}

namespace {

// Cutoff profile of the second example: chi' is a piecewise quartic.
double chi(double u) {
  if (u <= 0) return 0.0;
  if (u <= 1) return std::pow(u, 5);
  if (u <= 3) return 10 * (u - 1) - std::pow(u - 2, 5);
  if (u <= 4) return 20 + std::pow(u - 4, 5);
  return 20.0;
}

double dchi(double u) {
  if (u <= 0) return 0.0;
  if (u <= 1) return 5 * std::pow(u, 4);
  if (u <= 3) return 10 - 5 * std::pow(u - 2, 4);
  if (u <= 4) return 5 * std::pow(u - 4, 4);
  return 0.0;
}

double d2chi(double u) {
  if (u <= 0) return 0.0;
  if (u <= 1) return 20 * std::pow(u, 3);
  if (u <= 3) return -20 * std::pow(u - 2, 3);
  if (u <= 4) return 20 * std::pow(u - 4, 3);
  return 0.0;
}

}  // namespace

Nonlinearity example2() {
  constexpr double a = 20.0;
  NonlinearitySpec s;
  s.name = "example2";
  s.params = {{"a", a}};
  s.f = [](double u) { return chi(u) * std::exp(a * u); };
  s.df = [](double u) { return (dchi(u) + a * chi(u)) * std::exp(a * u); };
  s.d2f = [](double u) {
    return (d2chi(u) + 2 * a * dchi(u) + a * a * chi(u)) * std::exp(a * u);
  };
  s.log_f = [](double u) { return std::log(chi(u)) + a * u; };
  s.dlog_f = [](double u) { return dchi(u) / chi(u) + a; };
  s.d2log_f = [](double u) {
    const double r = dchi(u) / chi(u);
    return d2chi(u) / chi(u) - r * r;
  };
  s.log_ratio = [](double u, double x) {
    if (u >= 4 && u + x >= 4) return a * x;
    if (u <= 1 && u + x <= 1) return 5 * std::log1p(x / u) + a * x;
    return std::log(chi(u + x)) - std::log(chi(u)) + a * x;
  };
  s.qf_declared = 1.0;
  s.breakpoints = {1.0, 3.0, 4.0};
  return Nonlinearity(std::move(s));
}

Nonlinearity example3(double beta, double gamma) {
  if (!(gamma > 1 && beta > gamma)) throw DomainError("example3: need 1 < gamma < beta");
  const double d = beta - gamma;
  NonlinearitySpec s;
  s.name = "example3";
  s.params = {{"beta", beta}, {"gamma", gamma}};
  s.f = [beta, gamma](double u) { return std::pow(u, beta) + std::pow(u, gamma); };
  s.df = [beta, gamma](double u) {
    return beta * std::pow(u, beta - 1) + gamma * std::pow(u, gamma - 1);
  };
  s.d2f = [beta, gamma](double u) {
    return beta * (beta - 1) * std::pow(u, beta - 2) + gamma * (gamma - 1) * std::pow(u, gamma - 2);
  };
  s.log_f = [beta, gamma](double u) {
    const double a = beta * std::log(u), b = gamma * std::log(u);
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
  };
  // With t = u^(beta-gamma): f'/f = (beta t + gamma) / (u (t + 1)).
  s.dlog_f = [beta, gamma, d](double u) {
    const double t = std::pow(u, d);
    return t > 1 ? (beta + gamma / t) / (u * (1 + 1 / t)) : (beta * t + gamma) / (u * (t + 1));
  };
  s.d2log_f = [beta, gamma, d](double u) {
    const double t = std::pow(u, d);
    const double w = t > 1 ? 1 / (1 + 1 / t) : t / (1 + t);  // t/(1+t)
    const double g = (beta * w + gamma * (1 - w)) / u;
    const double f2 = (beta * (beta - 1) * w + gamma * (gamma - 1) * (1 - w)) / (u * u);
    return f2 - g * g;
  };
  s.log_ratio = [gamma, d](double u, double x) {
    const double L = std::log1p(x / u);
    const double t = std::pow(u, d);
    const double w = t > 1 ? 1 / (1 + 1 / t) : t / (1 + t);
    return gamma * L + std::log1p(w * std::expm1(d * L));
  };
  s.qf_declared = beta / (beta - 1);
  return Nonlinearity(std::move(s));
}

Nonlinearity linear() {
  NonlinearitySpec s;
  s.name = "linear";
  s.f = [](double u) { return u; };
  s.df = [](double) { return 1.0; };
  s.d2f = [](double) { return 0.0; };
  s.log_f = [](double u) { return std::log(u); };
  s.dlog_f = [](double u) { return 1 / u; };
  s.d2log_f = [](double u) { return -1 / (u * u); };
  s.log_ratio = [](double u, double x) { return std::log1p(x / u); };
  s.qf_declared = 1.0;
  return Nonlinearity(std::move(s));
}

Nonlinearity make_nonlinearity(const nlohmann::json& desc) {
  if (!desc.is_object() || !desc.contains("kind")) {
    throw DomainError("nonlinearity: expected an object with a 'kind' field");
  }
  const std::string kind = desc.at("kind").get<std::string>();
  const nlohmann::json params = desc.contains("params") ? desc.at("params") : desc;
  auto num = [&](const char* key) {
    if (!params.contains(key)) throw DomainError("nonlinearity." + kind + ": missing '" + key + "'");
    return params.at(key).get<double>();
  };
  if (kind == "power") return power(num("p"));
  if (kind == "exponential") return exponential();
  if (kind == "example1") return example1(num("beta"), num("gamma"));
  if (kind == "example2") return example2();
  if (kind == "example3") return example3(num("beta"), num("gamma"));
  if (kind == "linear") return linear();
  throw DomainError("nonlinearity: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Canonical nonlinearity

double Canonical::p() const {
  if (exponential()) return kInf;
  return q / (q - 1);
}

double Canonical::f(double u) const {
  if (exponential()) return std::exp(u);
  return std::pow(std::abs(u), p()) * (u < 0 ? -1.0 : 1.0);
}

double Canonical::F(double u) const {
  if (exponential()) return std::exp(-u);
  if (u <= 0) return kInf;
  return std::pow(u, 1 - p()) / (p() - 1);
}

double Canonical::F_inverse(double s) const {
  if (!(s > 0)) throw OutOfRangeError("F_q^{-1} needs a positive argument");
  if (exponential()) return -std::log(s);
  return std::pow((p() - 1) * s, -1 / (p() - 1));
}

double Canonical::dF_inverse(double s) const { return -f(F_inverse(s)); }

double Canonical::fF(double u) const {
  if (exponential()) return 1.0;
  return u / (p() - 1);
}

// ---------------------------------------------------------------------------
// Assumption validation

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

bool AssumptionReport::passed(const std::string& id) const {
  const auto* c = find(id);
  return c && c->passed;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back({{"id", c.id}, {"passed", c.passed}, {"detail", c.detail}});
  j["q_ratio"] = {{"u", qratio_samples_u}, {"value", qratio_samples}, {"extrapolated", qf_extrapolated}};
  j["fprime_F"] = {{"u", lemma_u}, {"value", lemma_fprimeF}};
  return j;
}

std::vector<double> default_assumption_grid() {
  std::vector<double> g;
  for (int k = -9; k <= 18; ++k) g.push_back(std::pow(10.0, k / 3.0));
  return g;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

AssumptionReport validate_assumptions(const Nonlinearity& nl, double N,
                                      const std::vector<double>& u_grid) {
  AssumptionReport rep;
  const ExponentTable ex = exponent_table(N);
  const double qf = nl.qf_declared();

  {
    const double f0 = nl.f(0.0), df0 = nl.df(0.0);
    const bool ok = std::abs(f0) <= 1e-12 && std::abs(df0) <= 1e-12;
    rep.checks.push_back({"A1", ok, "f(0)=" + fmt(f0) + " f'(0)=" + fmt(df0)});
  }
  {
    bool ok = true;
    std::string detail = "sampled " + std::to_string(u_grid.size()) + " points";
    for (double u : u_grid) {
      if (!(u > 0)) continue;
      double d1 = nl.df(u);
      if (!std::isfinite(d1)) d1 = nl.dlog_f(u);
      double d2 = nl.d2f(u);
      if (!std::isfinite(d2)) {
        const double g = nl.dlog_f(u);
        d2 = g * g + nl.d2log_f(u);
      }
      if (!(d1 > 0) || !(d2 > 0)) {
        ok = false;
        detail = "sign failure at u=" + fmt(u);
        break;
      }
    }
    rep.checks.push_back({"A2", ok, detail});
  }
  {
    bool ok = false;
    std::string detail;
    try {
      for (int k = 0; k <= 18; ++k) {
        const double u = std::pow(10.0, k / 3.0);
        const double q = nl.q_ratio(u);
        rep.qratio_samples_u.push_back(u);
        rep.qratio_samples.push_back(q);
      }
      const auto& q = rep.qratio_samples;
      const std::size_t n = q.size();
      const double d1 = q[n - 2] - q[n - 3], d2 = q[n - 1] - q[n - 2];
      double extrap = q[n - 1];
      if (std::abs(d2 - d1) > 1e-300 && std::abs(d2) < std::abs(d1)) {
        extrap = q[n - 1] - d2 * d2 / (d2 - d1);
      }
      rep.qf_extrapolated = extrap;
      const bool converged = std::abs(d2) < 1e-3;
      ok = converged && std::abs(extrap - qf) < 1e-3;
      detail = "last=" + fmt(q[n - 1]) + " extrapolated=" + fmt(extrap) + " declared=" + fmt(qf);
    } catch (const NumericalError& e) {
      detail = e.what();
    }
    rep.checks.push_back({"A3", ok, detail});
  }
  {
    bool ok = true;
    std::string detail = "Q >= 0 on the sample grid";
    try {
      for (double u : u_grid) {
        if (!(u > 0)) continue;
        const double ratio = 1 - (ex.p_S.value() + 1) * nl.F0_over_uf(u);
        if (ratio < -1e-10) {
          ok = false;
          detail = "Q/(u f)=" + fmt(ratio) + " at u=" + fmt(u);
          break;
        }
      }
    } catch (const NumericalError& e) {
      ok = false;
      detail = e.what();
    }
    rep.checks.push_back({"A4", ok, detail});
  }
  {
    const Regime r = classify_regime(N, qf);
    rep.checks.push_back({"A5", r == Regime::supercritical_window, to_string(r)});
    rep.checks.push_back({"A7", r == Regime::critical_subcritical_window, to_string(r)});
  }
  {
    bool ok = true;
    std::string detail = "q_f > 1";
    if (qf == 1) {
      detail = "q_ratio <= 1 for u >= 100";
      try {
        for (double u : u_grid) {
          if (u < 100) continue;
          const double r = nl.q_ratio(u);
          if (r > 1 + 1e-12) {
            ok = false;
            detail = "q_ratio=" + fmt(r) + " at u=" + fmt(u);
            break;
          }
        }
      } catch (const NumericalError& e) {
        ok = false;
        detail = e.what();
      }
    }
    rep.checks.push_back({"A6", ok, detail});
  }
  {
    bool ok = true;
    std::string detail;
    try {
      double prev_gap = kInf;
      for (double u : {1e2, 1e3, 1e4}) {
        const double v = nl.fprime_F(u);
        rep.lemma_u.push_back(u);
        rep.lemma_fprimeF.push_back(v);
        const double gap = std::abs(v - qf);
        if (gap > prev_gap + 1e-12) ok = false;
        prev_gap = gap;
      }
      ok = ok && prev_gap < 1e-2;
      detail = "f'F(1e4)=" + fmt(rep.lemma_fprimeF.back());
    } catch (const NumericalError& e) {
      ok = false;
      detail = e.what();
    }
    rep.checks.push_back({"fprimeF_limit", ok, detail});
  }
  return rep;
}

}  // namespace nonuniq
