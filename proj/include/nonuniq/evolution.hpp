#pragma once

#include "nonuniq/nonlinearity.hpp"
#include "nonuniq/norms.hpp"
#include "nonuniq/radial_grid.hpp"
#include "nonuniq/stationary.hpp"
#include "nonuniq/supersolution.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace nonuniq {

/// A comparison bound was violated beyond tolerance during a run.
class BoundViolationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Grid, exact heat propagator and, when a singular solution is attached, its
/// samples and the per-node reaction factors that keep those samples stationary.
struct EvolutionSetup {
  std::shared_ptr<const RadialGrid> grid;
  std::shared_ptr<const HeatPropagator> heat;
  std::shared_ptr<const Nonlinearity> nl;
  std::shared_ptr<const RadialProfile> singular;  ///< may be null
  Vector singular_values;                          ///< u* at nodes, +inf at r = 0
  Vector reaction_scale;                           ///< G_i(u) = scale_i f(u); ones without u*
  double r_core = 0;

  double N() const { return grid->N(); }
};

/// Setup without a stationary reference (unit reaction factors).
EvolutionSetup make_setup(const Nonlinearity& nl, double N, const GridSpec& spec = {},
                          FarField far = FarField::absorbing);

/// Setup around u*: for nodes at r >= r_core the factor -(A u*)_i / f(u*_i) makes
/// the sampled u* an exact fixed point of the discrete evolution. It differs from 1
/// by the relative truncation error of the stencil, so where u is far below u* the
/// reaction is perturbed only by that relative amount. Inside the core and past R/2
/// (absorbing boundary layer) the factor is 1.
EvolutionSetup make_setup(const Nonlinearity& nl, const RadialProfile& singular,
                          const GridSpec& spec = {}, double r_core = 2e-3);

/// The same setup on RadialGrid::refined().
EvolutionSetup refine(const EvolutionSetup& setup);

RadialField heat_semigroup(const HeatPropagator& heat, const RadialField& field, double tau);

/// Radius where u*(r) = n (0 when n exceeds u* on the whole profile range is impossible:
/// u* is unbounded; returns R when n is below u* nowhere on the domain).
double truncation_radius(const RadialProfile& singular, double n, double r_max);

/// min(u*, n) at the nodes; node 0 carries the cell average over [0, r_{1/2}].
RadialField truncate_initial(const EvolutionSetup& setup, double n);

/// Largest truncation level whose plateau the balanced stencil resolves: u*(r_core).
/// Above it the data coincide with u* in the unbalanced core cells.
double resolved_level(const EvolutionSetup& setup);

/// zeta' = f(zeta), zeta(0) = n.
struct ComparisonOde {
  double n = 0;
  double t_blowup = 0;  ///< F(n)
  const Nonlinearity* nl = nullptr;
  /// F^{-1}[F(n) - t]; +inf from t_blowup on.
  double operator()(double t) const;
};
ComparisonOde comparison_ode(const Nonlinearity& nl, double n);

enum class Scheme {
  exponential,  ///< exact heat propagator, source linear in time, Picard fixed point per step
  splitting     ///< method of lines: backward Euler diffusion + RK4 reaction substeps
};

struct EvolveOptions {
  Scheme scheme = Scheme::exponential;
  double reaction_fraction = 0.1;  ///< h * max f'(u) bound
  double first_step = 1e-12;
  double max_step = 1e-3;
  double max_growth = 1.5;
  double fixed_step = 0;           ///< uniform step when positive
  double fixed_point_tol = 1e-14;
  int max_fixed_point = 100;
  double reaction_substep = 0.02;  ///< splitting: RK4 substep * f'(y) bound
  double blowup_value = 1e12;
};

struct EvolutionResult {
  std::vector<RadialField> snapshots;  ///< one per requested output time
  long steps = 0;
  int max_fixed_point_iterations = 0;
  bool blew_up = false;
  double t_reached = 0;
};

/// Runs du/dt = A u + scale f(u) from u0 (time 0) through the sorted output times.
EvolutionResult evolve(const EvolutionSetup& setup, const Vector& u0, const std::vector<double>& output_times,
                       const EvolveOptions& opts = {});

/// Run from min(u*, n) (n must not exceed resolved_level); with v given, u_n <= min(v, zeta_n) is checked at every
/// output time (r <= R/2) and a violation throws BoundViolationError.
EvolutionResult evolve_truncated(const EvolutionSetup& setup, double n, const std::vector<double>& output_times,
                                 const EvolveOptions& opts = {}, const GluedSupersolution* v = nullptr,
                                 double bound_tol = 1e-6);

/// Two splitting runs (step h and h/2) combined by Richardson extrapolation.
EvolutionResult evolve_splitting_extrapolated(const EvolutionSetup& setup, const Vector& u0,
                                              const std::vector<double>& output_times, double h);

struct PicardReport {
  std::vector<double> times;              ///< substep grid, times.front() == 0
  std::vector<RadialField> final_iterates;  ///< w_k at the final time, k = 1..
  bool monotone = true;
  double max_decrease = 0;  ///< largest w_k - w_{k+1} over all substeps and nodes
  double last_change = 0;   ///< sup |w_k - w_{k-1}| at the final iterate, all times
  bool converged = false;
  bool exceeded_bound = false;
  int iterations = 0;
  nlohmann::json to_json() const;
};

/// w_1 = 0, w_{k+1}(t) = S(t) w0 + int_0^t S(t-s) scale f(w_k(s)) ds on the
/// given substep grid, the integral taken exactly for sources linear between substeps.
PicardReport picard_iterate(const EvolutionSetup& setup, const Vector& w0, const std::vector<double>& times,
                            int k_max, double tol = 0,
                            const std::function<double(double r, double t)>& bound = {});

/// Geometric substep grid on [0, t] starting at t * first_fraction.
std::vector<double> substep_grid(double t, int steps, double first_fraction = 1e-6);

struct DuhamelSample {
  double t = 0;
  double min_defect = 0;  ///< min_i D_i / max(1, avg_i v)
  double r_at_min = 0;
  bool holds = false;
};

struct DuhamelReport {
  std::vector<DuhamelSample> samples;
  double tolerance = 0;
  bool holds = false;
  nlohmann::json to_json() const;
};

/// Cell-averaged defect D(t) = v(t) - S(t)u* - int S(t-s) f(v(s)) ds, evaluated as
/// [v(t) - u*] + int S(t-s)[f(u*) - f(v(s))] ds (u* = S(t)u* + int S f(u*)).
DuhamelReport duhamel_check(const EvolutionSetup& setup, const GluedSupersolution& v,
                            const std::vector<double>& checkpoints, int steps_per_decade = 20,
                            double tolerance = 1e-3);

struct DemoOptions {
  std::vector<double> n_values{10, 30, 100, 300};
  std::vector<double> times{1e-4, 1e-3, 1e-2};
  std::vector<double> gammas{1};
  EvolveOptions evolve;
  double monotone_tol = 1e-8;
  double bound_tol = 1e-6;
  /// Comparisons are restricted to r <= this (away from the absorbing end).
  double compare_radius = 10;
  bool refine = true;
  double refinement_tol = 0.01;
};

struct DemoReport {
  std::vector<double> n_values, times, gammas;
  std::vector<std::vector<double>> sup_u;  ///< [n][t]
  std::vector<double> sup_bound;           ///< F^{-1}[c0 t]
  double resolved_level = 0;
  std::vector<double> effective_n;         ///< min(n, resolved_level), the level actually run
  bool identical_data = false;             ///< all effective truncations coincide

  bool monotone_in_n = false;
  double monotone_violation = 0;
  bool below_bounds = false;
  double bound_violation = 0;  ///< relative, against min(v, zeta_n)
  bool sup_certificate = false;
  std::vector<std::vector<double>> distances;  ///< [gamma][t], limit proxy u_{n_max}
  std::vector<bool> distances_decrease;        ///< per gamma, along decreasing t
  bool distances_ok = false;

  bool refined = false;
  double grid_max_singular = 0, grid_max_singular_refined = 0;
  std::vector<double> sup_u_refined;  ///< limit proxy on the refined grid
  double sup_refinement_change = 0;
  std::vector<std::vector<double>> distances_refined;
  double distance_refinement_change = 0;
  bool two_solutions = false;

  std::vector<RadialField> limit;  ///< u_{n_max} at the output times
  double runtime_seconds = 0;

  bool all() const;
  nlohmann::json to_json() const;
};

DemoReport nonuniqueness_demo(const EvolutionSetup& setup, const GluedSupersolution& v,
                              const DemoOptions& opts = {});

}  // namespace nonuniq
