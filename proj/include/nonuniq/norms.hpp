#pragma once

#include "nonuniq/radial_grid.hpp"
#include "nonuniq/stationary.hpp"

#include <json.hpp>

#include <functional>
#include <vector>

namespace nonuniq {

/// Radial integrand |g| with the radii where it is not smooth.
struct RadialIntegrand {
  std::function<double(double)> g;
  std::vector<double> breakpoints;
  /// Integrate the innermost panel by decades in log r and watch for divergence.
  bool singular_at_origin = false;
  /// Smooth between consecutive breakpoints: one fixed Gauss-Kronrod panel each.
  bool smooth_between_breakpoints = false;
};

struct UlNormOptions {
  std::vector<double> centers{0, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2, 2.25, 2.5, 2.75, 3};
  int max_decades = 200;
  /// Decade-to-decade ratio at or above which the origin integral is declared divergent.
  double divergence_ratio = 0.9;
  /// Partial origin-ball integrals reported with the inner radius cut here.
  std::vector<double> cutoffs{1e-2, 1e-4, 1e-6, 1e-8};
};

struct UlNormResult {
  double gamma = 1;
  double value = 0;            ///< +inf when divergent
  double achieving_center = 0;
  bool divergent = false;
  bool origin_is_max = false;
  std::vector<double> centers, ball_integrals;
  /// (int_{cutoff < |x| < 1} |g|^gamma)^{1/gamma}, grows without bound when divergent.
  std::vector<double> cutoff_values;
  nlohmann::json to_json() const;
};

/// Volume of the unit ball in R^N.
double unit_ball_volume(double N);

/// Fraction of the sphere |x| = rho lying in B(z e_1, 1).
double sphere_fraction_in_ball(double rho, double z, double N);

UlNormResult ul_norm(const RadialIntegrand& u, double N, double gamma, const UlNormOptions& opts = {});
UlNormResult ul_norm(const RadialField& u, double gamma, const UlNormOptions& opts = {});
/// Singular profile; below its computed range the profile's asymptotic extension is used.
UlNormResult ul_norm(const RadialProfile& u, double gamma, const UlNormOptions& opts = {});

/// |u* - u| with the nodal differences interpolated linearly (u* is sampled, not
/// interpolated, so the distance sees no interpolation error of the singular
/// profile); inside the first cell u is linear between nodes 0 and 1.
RadialIntegrand difference_integrand(const RadialField& u, const RadialProfile& reference);

struct ConvergenceEntry {
  double t = 0, gamma = 1, distance = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceEntry> entries;
  /// Per gamma: distances strictly decrease as t decreases.
  std::vector<double> gammas;
  std::vector<bool> decreasing;
  nlohmann::json to_json() const;
};

/// Distances ||u(t) - u*||_{L^gamma_ul} for each snapshot and gamma.
ConvergenceTable convergence_report(const std::vector<RadialField>& trajectory, const RadialProfile& reference,
                                    const std::vector<double>& gammas, const UlNormOptions& opts = {});

}  // namespace nonuniq
