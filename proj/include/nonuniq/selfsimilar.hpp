#pragma once

#include "nonuniq/common.hpp"
#include "nonuniq/interp.hpp"
#include "nonuniq/nonlinearity.hpp"
#include "nonuniq/ode.hpp"
#include "nonuniq/stationary.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace nonuniq {

/// The alpha scan found no profile crossing the singular one.
class NoCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The interface equation lost its root at some time.
class RootLossError : public NumericalError {
 public:
  RootLossError(const std::string& what, double t) : NumericalError(what), t_(t) {}
  double t() const noexcept { return t_; }

 private:
  double t_;
};

/// Forward self-similar profile phi(eta) for the canonical nonlinearity f_q.
class ProfileSolution {
 public:
  using Trajectory = DenseTrajectory<double, 2>;

  ProfileSolution(double q, double N, double alpha, double eta_max, double eta_seed,
                  double c2, double c4, std::shared_ptr<const Trajectory> traj);

  double q() const { return q_; }
  double N() const { return N_; }
  double alpha() const { return alpha_; }
  double eta_max() const { return eta_max_; }

  double phi(double eta) const;
  double dphi(double eta) const;
  double d2phi(double eta) const;

  /// Uniform sample with the requested density (points per unit eta).
  std::vector<double> eta_grid(int per_unit) const;

  bool decreasing = true;  ///< phi' < 0 on the sampled grid

 private:
  double q_, N_, alpha_, eta_max_, eta_seed_, c2_, c4_;
  std::shared_ptr<const Trajectory> traj_;
};

struct ProfileOptions {
  double rtol = 1e-11;
  double atol = 1e-14;
};

ProfileSolution solve_profile(double q, double N, double alpha, double eta_max,
                              const ProfileOptions& opts = {});

/// F_q^{-1}[eta^2 / (2N - 4 q_ref)]; with q_ref = q this is the singular profile.
double singular_profile(double q, double N, double eta, std::optional<double> q_ref = {});
double singular_profile_derivative(double q, double N, double eta, std::optional<double> q_ref = {});

/// Residual of the profile equation relative to max(1, |terms|), max over the grid.
double profile_residual(const ProfileSolution& prof, int per_unit = 64);

struct IntersectionRecord {
  double q = 0, q_ref = 0, N = 0;
  double alpha0 = 0;
  double eta0 = 0;
  double transversality_margin = 0;  ///< |phi' - target'| at eta0
  double dphi = 0, dtarget = 0;
  double max_gap_before = 0;         ///< max of phi - target on the grid before eta0 (negative)
  bool first = false;
  bool sign_pattern = false;
  double alpha_boundary = 0;         ///< smallest alpha with a crossing, from the scan
  nlohmann::json to_json() const;
};

struct AlphaScanOptions {
  double eta_max = 20.0;
  int points_per_unit = 512;
  double margin_floor = 1e-4;
  /// The accepted alpha must clear this multiple of the floor.
  double margin_factor = 10.0;
  int scan_points = 41;
  double bracket_low = 1e-2;   ///< relative to the target at eta = 1
  double bracket_high = 1e2;
};

/// First transversal intersection of phi(., alpha) with the target curve.
IntersectionRecord find_alpha0(double q, double N, std::optional<double> q_ref = {},
                               const AlphaScanOptions& opts = {});

/// Crossing data for a single alpha, if any (exposed for tests and the CLI).
std::optional<IntersectionRecord> first_crossing(double q, double N, double alpha,
                                                 std::optional<double> q_ref = {},
                                                 const AlphaScanOptions& opts = {});

struct EpsilonChoice {
  double epsilon = 0;
  double q = 1;
  IntersectionRecord record;
  std::vector<double> tried;
  nlohmann::json to_json() const;
};

/// Picks q = q_f + eps: the smallest eps of the trial list that keeps q < q_S,
/// yields a transversal crossing with the t = 0 interface curve and leaves
/// q - f'F >= 0 for large u. eps = 0 for q_f = 1.
EpsilonChoice choose_epsilon(const Nonlinearity& nl, double N,
                             const std::vector<double>& trials = {0.1, 0.05, 0.02, 0.01, 0.005,
                                                                  0.002, 0.001},
                             const AlphaScanOptions& opts = {});

/// Monotone interpolation of theta(r) taken from a computed singular profile.
class ThetaInterpolant {
 public:
  ThetaInterpolant(const RadialProfile& profile, const Nonlinearity& nl);
  double operator()(double r) const;
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

 private:
  Pchip<double> pchip_;  // in log r
  double r_min_, r_max_;
};

struct CurvePoint {
  double t = 0;
  double r = 0;
  double eta = 0;
};

struct IntersectionCurve {
  std::vector<CurvePoint> points;
  double eta0 = 0;
  bool root_lost = false;
  double t_lost = 0;          ///< first time where the root could not be found
  bool r_decreasing = false;  ///< r(t) increases with t, i.e. shrinks as t -> 0
  bool eta_converges = false; ///< eta_*(t) approaches eta0 as t -> 0
  bool continuity = false;
  bool sign_pattern = false;
  nlohmann::json to_json() const;
};

/// Solves t F_q(phi(eta)) = F(u*(sqrt(t) eta)) near eta0 on each t of the grid.
IntersectionCurve intersection_curve(const Nonlinearity& nl, const RadialProfile& singular,
                                     const ProfileSolution& profile, double eta0,
                                     const std::vector<double>& t_grid,
                                     const AlphaScanOptions& opts = {});

}  // namespace nonuniq
