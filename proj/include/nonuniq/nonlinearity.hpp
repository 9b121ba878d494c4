#pragma once

#include "nonuniq/common.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nonuniq {

using ScalarFn = std::function<double(double)>;

/// Everything a builder supplies. Derivatives are analytic; the logarithmic
/// forms keep evaluations finite where f itself overflows.
struct NonlinearitySpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  ScalarFn f, df, d2f;
  ScalarFn log_f;     ///< log f(u), u > 0
  ScalarFn dlog_f;    ///< f'/f
  ScalarFn d2log_f;   ///< (f'/f)'
  /// log f(u+x) - log f(u), evaluated without cancellation for small x.
  std::function<double(double, double)> log_ratio;
  double qf_declared = 1.0;
  std::optional<ScalarFn> closed_F;
  std::optional<ScalarFn> closed_F_inverse;
  std::optional<ScalarFn> closed_F0;
  /// f(u) = 0 for u < 0 when true; otherwise f is defined on the whole line.
  bool extend_by_zero = true;
  std::vector<double> breakpoints;
};

class TailTable;

/// Immutable nonlinearity with its tail integral F(u) = int_u^inf ds/f(s).
class Nonlinearity {
 public:
  explicit Nonlinearity(NonlinearitySpec spec);

  const std::string& name() const { return spec_.name; }
  const nlohmann::json& params() const { return spec_.params; }
  double qf_declared() const { return spec_.qf_declared; }
  /// Growth rate conjugate to q_f; infinite for q_f = 1.
  ExtendedReal pf_declared() const;
  bool has_closed_form_F() const { return spec_.closed_F.has_value(); }
  bool extends_by_zero() const { return spec_.extend_by_zero; }

  double f(double u) const;
  double df(double u) const;
  double d2f(double u) const;
  double log_f(double u) const { return spec_.log_f(u); }
  double dlog_f(double u) const { return spec_.dlog_f(u); }
  double d2log_f(double u) const { return spec_.d2log_f(u); }
  double log_ratio(double u, double x) const { return spec_.log_ratio(u, x); }

  /// Tail integral, +inf where f vanishes on [u, inf).
  double F(double u) const;
  /// Same quantity computed by the adaptive quadrature path only (reference).
  double F_direct(double u) const;
  /// u with F(u) = s.
  double F_inverse(double s) const;
  /// int_0^u f(s) ds.
  double F0(double u) const;

  /// f'(u)^2 / (f(u) f''(u)).
  double q_ratio(double u) const;
  /// f'(u) F(u), evaluated in scaled form so it stays finite for large u.
  double fprime_F(double u) const;
  /// int_0^u f(s) ds / (u f(u)) in scaled form.
  double F0_over_uf(double u) const;

  const NonlinearitySpec& spec() const { return spec_; }

 private:
  double scaled_tail(double u) const;  // int_u^inf f(u)/f(s) ds

  NonlinearitySpec spec_;
  std::shared_ptr<const TailTable> table_;
};

// Builders.
Nonlinearity power(double p);
Nonlinearity exponential();
Nonlinearity example1(double beta, double gamma);
Nonlinearity example2();
Nonlinearity example3(double beta, double gamma);
/// f(u) = u, useful only as a negative control for the validators.
Nonlinearity linear();

/// Builds from {"kind": ..., "params": {...}} or {"kind": ..., <params inline>}.
Nonlinearity make_nonlinearity(const nlohmann::json& desc);

/// Canonical nonlinearity f_q: U^p with p = q/(q-1) for q > 1, e^U for q = 1.
struct Canonical {
  double q;

  bool exponential() const { return q == 1.0; }
  double p() const;
  double f(double u) const;
  double F(double u) const;
  double F_inverse(double s) const;
  /// d/du F_q^{-1}(s) composed with chain-rule factor, i.e. dF_q^{-1}/ds.
  double dF_inverse(double s) const;
  /// f_q(u) F_q(u): u/(p-1) for q > 1, 1 for q = 1.
  double fF(double u) const;
};

struct AssumptionCheck {
  std::string id;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<double> qratio_samples_u;
  std::vector<double> qratio_samples;
  double qf_extrapolated = 0.0;
  std::vector<double> lemma_u;
  std::vector<double> lemma_fprimeF;

  const AssumptionCheck* find(const std::string& id) const;
  bool passed(const std::string& id) const;
  nlohmann::json to_json() const;
};

/// Checks (A1)-(A6) and the limit f'F -> q_f on a sample grid.
AssumptionReport validate_assumptions(const Nonlinearity& nl, double N,
                                      const std::vector<double>& u_grid);
/// Default sample grid: three points per decade on [1e-3, 1e6].
std::vector<double> default_assumption_grid();

}  // namespace nonuniq
