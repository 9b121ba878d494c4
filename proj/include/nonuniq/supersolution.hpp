#pragma once

#include "nonuniq/common.hpp"
#include "nonuniq/interp.hpp"
#include "nonuniq/nonlinearity.hpp"
#include "nonuniq/selfsimilar.hpp"
#include "nonuniq/stationary.hpp"

#include <json.hpp>

#include <vector>

namespace nonuniq {

/// ubar(r, t) = F^{-1}[t F_q(phi(r / sqrt t))].
double ubar(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t);
/// Radial derivative of ubar.
double ubar_r(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t);
/// Time derivative of ubar.
double ubar_t(const Nonlinearity& nl, const ProfileSolution& profile, double r, double t);

/// Largest root of f'(u) F(u) = q (scan plus bisection) times 1.05; 0 if the
/// coefficient q - f'F is nonnegative on the whole scan, +inf if it is still
/// negative at the top of the scan.
double u_large(const Nonlinearity& nl, double q, double u_scan_max = 1e8);

struct ResidualSample {
  double r = 0;
  double u = 0;
  double coefficient = 0;  ///< q - f'(ubar) F(ubar)
  double residual = 0;     ///< (ubar_t - Lap ubar - f(ubar)) / scale
  double predicted = 0;    ///< (q - f'F) / (f F) |ubar_r|^2 / scale
};

struct ResidualReport {
  double t = 0;
  std::vector<ResidualSample> samples;
  double min_coefficient_above = 0;  ///< over samples with u >= u_large
  double min_residual_above = 0;
  double max_mismatch = 0;           ///< max |residual - predicted|
  bool holds = false;
  nlohmann::json to_json() const;
};

/// Residual of the parabolic equation for ubar on the given radii at time t.
ResidualReport supersolution_residual(const Nonlinearity& nl, const ProfileSolution& profile,
                                      double q, double t, const std::vector<double>& radii,
                                      double large, double tolerance = 1e-6);

/// v(., t) = ubar below the interface radius, u* above it.
class GluedSupersolution {
 public:
  GluedSupersolution(Nonlinearity nl, RadialProfile singular, ProfileSolution profile,
                     IntersectionCurve curve, double t0, double large);

  /// v at a fixed time with the interface radius solved once.
  class Slice {
   public:
    double t() const { return t_; }
    double interface_radius() const { return r_; }
    double operator()(double r) const;

   private:
    friend class GluedSupersolution;
    Slice(const GluedSupersolution* owner, double t, double r) : owner_(owner), t_(t), r_(r) {}
    const GluedSupersolution* owner_;
    double t_, r_;
  };

  Slice at(double t) const;
  double operator()(double r, double t) const { return at(t)(r); }

  double interface_radius(double t) const;
  /// sup_x v(x, t) = F^{-1}[c0 t].
  double sup(double t) const;

  double t0() const { return t0_; }
  double c0() const { return c0_; }
  double q() const { return profile_.q(); }
  double N() const { return singular_.N(); }
  double large() const { return large_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  const RadialProfile& singular() const { return singular_; }
  const ProfileSolution& profile() const { return profile_; }
  const IntersectionCurve& curve() const { return curve_; }

  nlohmann::json selection;  ///< how alpha0 was picked (filled by construct_supersolution)

 private:
  Nonlinearity nl_;
  RadialProfile singular_;
  ProfileSolution profile_;
  IntersectionCurve curve_;
  double t0_, c0_, large_;
  Pchip<double> eta_of_log_t_;
};

struct GluedCheckPoint {
  double t = 0, r = 0;
  double u_star = 0;
  double continuity = 0;  ///< |ubar - u*| / u* at the interface
  double kink = 0;        ///< ubar_r - u*' at the interface
  bool large = false;
  double min_coefficient = 0;
};

struct GluedReport {
  std::vector<GluedCheckPoint> points;
  double u_large = 0;
  bool continuity = false, kink = false, large = false, monotone_largeness = false,
       coefficient = false;
  bool sup_identity = false;
  double t0_admissible = 0;  ///< largest sampled t up to which every check passes
  bool all() const { return continuity && kink && large && monotone_largeness && coefficient && sup_identity; }
  nlohmann::json to_json() const;
};

/// Builds v on (0, t0]; t0 is cut back to where u*(r(t)) exceeds u_large.
GluedSupersolution build_glued(const Nonlinearity& nl, const RadialProfile& singular,
                               const ProfileSolution& profile, const IntersectionCurve& curve,
                               double t0);

GluedReport check_glued(const GluedSupersolution& v, const std::vector<double>& t_samples);

struct SupersolutionOptions {
  /// Transversality requirements tried in turn (multiples of the margin floor)
  /// until the interface curve holds on the whole t grid.
  std::vector<double> margin_factors{10, 100, 1000, 3000, 10000, 30000};
  /// A candidate is also rejected when largeness cuts t0 below this.
  double required_t0 = 0;
  AlphaScanOptions scan;
};

/// choose_epsilon, alpha selection, interface curve and gluing in one call.
GluedSupersolution construct_supersolution(const Nonlinearity& nl, const RadialProfile& singular,
                                           const std::vector<double>& t_grid,
                                           const SupersolutionOptions& opts = {});

}  // namespace nonuniq
