#pragma once

#include "nonuniq/common.hpp"
#include "nonuniq/nonlinearity.hpp"
#include "nonuniq/ode.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nonuniq {

/// Seed radius moved too little for the outward integration to forget it.
class SeedSensitivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class ProfileKind { regular, singular };

/// Radial stationary solution. The ODE is integrated in s = log r with state
/// (u, r u'); the dense trajectory makes the profile evaluable between grid points.
class RadialProfile {
 public:
  using Trajectory = DenseTrajectory<double, 2>;
  /// Returns (u, du/dr) for radii below the integrated range.
  using Extension = std::function<std::pair<double, double>(double)>;

  RadialProfile(double N, std::string nl_name, ProfileKind kind, double alpha,
                std::shared_ptr<const Trajectory> traj, Extension below, int points_per_decade,
                double r_grid_min);

  double N() const { return N_; }
  const std::string& nonlinearity_name() const { return nl_name_; }
  ProfileKind kind() const { return kind_; }
  double alpha() const { return alpha_; }

  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& du() const { return du_; }

  /// Radii covered by the integration (the grid may start above r_lo).
  double r_lo() const { return r_lo_; }
  double r_hi() const { return r_hi_; }

  double u_at(double r) const;
  double du_at(double r) const;
  /// u'' from differentiating the local interpolating polynomial.
  double d2u_at(double r) const;

  const Trajectory& trajectory() const { return *traj_; }

  // Diagnostics filled by the constructors below.
  bool positive = true;
  bool decreasing = true;
  bool reached_r_max = true;
  std::optional<double> zero_crossing;
  double seed_radius = 0;
  double seed_halving_difference = 0;
  int seed_refinements = 0;

 private:
  double N_;
  std::string nl_name_;
  ProfileKind kind_;
  double alpha_;
  std::shared_ptr<const Trajectory> traj_;
  Extension below_;
  double r_lo_, r_hi_;
  std::vector<double> r_, u_, du_;
};

struct StationaryOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  int points_per_decade = 64;
  /// Relative agreement required between the seeds r_seed and r_seed/2.
  double seed_tolerance = 1e-8;
  int max_seed_refinements = 6;
  /// Correction theta used in the seed; zero unless the caller supplies one.
  std::function<double(double)> seed_theta;
};

/// Regular solution with u(0) = alpha, u'(0) = 0, up to r_max or the first zero.
RadialProfile shoot_regular(const Nonlinearity& nl, double N, double alpha, double r_max,
                            const StationaryOptions& opts = {});

/// Singular solution on [r_min, r_max], seeded from its leading asymptotics.
RadialProfile singular_solution(const Nonlinearity& nl, double N, double r_min, double r_max,
                                const StationaryOptions& opts = {});

/// theta(r) = (2N - 4 q_f) F(u*(r)) / r^2 - 1.
double asymptotic_theta(const Nonlinearity& nl, double N, double u_value, double r);
/// Leading-order singular value F^{-1}[r^2 / (2N - 4 q_f)].
double leading_singular_value(const Nonlinearity& nl, double N, double r);

struct DecayBoundsReport {
  double delta = 0;
  double exponent_u = 0, exponent_du = 0;
  double C_fit = 0;          ///< constant read off at the smallest grid radius
  double C_admissible = 0;   ///< smallest C valid on the whole of (r_min, R0]
  bool holds_u = false, holds_du = false;
  nlohmann::json to_json() const;
};

DecayBoundsReport decay_bounds_check(const RadialProfile& profile, const Nonlinearity& nl,
                                     double delta, double R0 = 1.0);

struct PohozaevSample {
  double r = 0;
  double P = 0;
  double Q = 0;
};

struct PohozaevReport {
  std::vector<PohozaevSample> samples;
  bool tends_to_zero = false;
  bool nonincreasing = false;
  /// max |dP/dr + (N-2)/2 r^{N-1} Q| / scale from a centered difference of P.
  double identity_error = 0;
  nlohmann::json to_json() const;
};

/// P(r) = r^N u'^2 / 2 + r^N F0(u) + (N-2)/2 r^{N-1} u u', Q(u) = u f - (p_S+1) F0.
PohozaevReport pohozaev_scan(const RadialProfile& profile, const Nonlinearity& nl);

struct ConvergenceReport {
  std::vector<double> alphas;
  std::vector<double> distances;
  bool decreasing = false;
  nlohmann::json to_json() const;
};

/// Sup distance between regular solutions and u* on the annulus [r_a, r_b].
ConvergenceReport convergence_to_singular(const Nonlinearity& nl, double N,
                                          const std::vector<double>& alphas, double r_a = 0.5,
                                          double r_b = 2.0);

/// Max over grid points of |u'' + (N-1)/r u' + f(u)| / max(1, f(u)).
double ode_residual(const RadialProfile& profile, const Nonlinearity& nl);

/// Max relative error of -r^{N-1} u'(r) = int_0^r f(u(s)) s^{N-1} ds at the given radii.
double integral_identity_error(const RadialProfile& profile, const Nonlinearity& nl,
                               const std::vector<double>& radii);

}  // namespace nonuniq
