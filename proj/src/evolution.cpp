#include "nonuniq/evolution.hpp"

#include "nonuniq/quadrature.hpp"
#include "nonuniq/roots.hpp"
#include "nonuniq/tridiagonal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace nonuniq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector reaction(const EvolutionSetup& s, const Vector& u) {
  Vector g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) g[i] = s.reaction_scale[i] * s.nl->f(u[i]);
  return g;
}

double max_slope(const EvolutionSetup& s, const Vector& u) {
  double m = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) m = std::max(m, s.reaction_scale[i] * s.nl->df(u[i]));
  return m;
}

double sup_relative(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct StepOutcome {
  bool ok = false;
  int iterations = 0;
};

// One exponential step: exact heat flow, source linear in time, implicit in the
// right endpoint through a fixed-point iteration.
StepOutcome exponential_step(const EvolutionSetup& s, Vector& u, Vector& m, double h, const EvolveOptions& o) {
  const HeatPropagator& heat = *s.heat;
  const auto w = heat.weights(h);
  const Vector g0 = heat.to_modes(reaction(s, u));
  Vector m1 = w.decay.cwiseProduct(m) + (w.left + w.right).cwiseProduct(g0);
  Vector u1 = heat.from_modes(m1);
  double prev = kInf;
  for (int k = 1; k <= o.max_fixed_point; ++k) {
    const Vector g1 = reaction(s, u1);
    if (!g1.allFinite()) return {false, k};
    m1 = heat.step_modes(m, g0, heat.to_modes(g1), w);
    Vector next = heat.from_modes(m1);
    const double diff = sup_relative(next, u1);
    u1 = std::move(next);
    // the second clause stops at the roundoff floor of the mode transforms
    if (diff <= o.fixed_point_tol || (k >= 3 && diff < 1e-10 && diff >= 0.5 * prev)) {
      u = std::move(u1);
      m = std::move(m1);
      return {true, k};
    }
    prev = diff;
  }
  return {false, o.max_fixed_point};
}

// y' = c f(y) per node with RK4, substeps bounded by the local linearization time.
double react_node(const Nonlinearity& nl, double y, double c, double h, double fraction) {
  auto rhs = [&](double v) { return c * nl.f(v); };
  double t = 0;
  while (t < h) {
    const double slope = std::max(c * nl.df(y), 1e-300);
    double dt = std::min(h - t, fraction / slope);
    if (h - t - dt < 1e-12 * h) dt = h - t;
    if (t + dt == t) return kInf;  // the reaction alone blows up inside this step
    const double k1 = rhs(y), k2 = rhs(y + 0.5 * dt * k1), k3 = rhs(y + 0.5 * dt * k2), k4 = rhs(y + dt * k3);
    y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += dt;
    if (!std::isfinite(y)) return y;
  }
  return y;
}

bool splitting_step(const EvolutionSetup& s, Vector& u, double h, const EvolveOptions& o) {
  const RadialGrid& g = *s.grid;
  const Eigen::Index n = u.size();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = react_node(*s.nl, u[i], s.reaction_scale[i], h, o.reaction_substep);
  if (!y.allFinite()) return false;
  // backward Euler: (V - h K) u_new = V y
  Vector sub = Vector::Zero(n), diag(n), super = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag[i] = g.volumes()[i] - h * g.k_diag()[i];
    if (i > 0) sub[i] = -h * g.k_off()[i - 1];
    if (i + 1 < n) super[i] = -h * g.k_off()[i];
  }
  u = solve_tridiagonal<double>(sub, diag, super, g.volumes().cwiseProduct(y));
  return u.allFinite();
}

Vector singular_samples(const RadialGrid& grid, const RadialProfile& singular) {
  if (singular.r_hi() * (1 + 1e-12) < grid.spec().R)
    throw DomainError("evolution setup: singular profile does not reach the domain radius");
  Vector u(grid.size());
  u[0] = kInf;
  for (int i = 1; i < grid.size(); ++i) u[i] = singular.u_at(grid.r()[i]);
  return u;
}

bool is_checkpoint(double s, const std::vector<double>& ts) {
  return std::any_of(ts.begin(), ts.end(), [&](double t) { return std::abs(s - t) <= 1e-12 * t; });
}

}  // namespace

EvolutionSetup make_setup(const Nonlinearity& nl, double N, const GridSpec& spec, FarField far) {
  EvolutionSetup s;
  auto grid = std::make_shared<const RadialGrid>(N, spec, far);
  s.grid = grid;
  s.heat = std::make_shared<const HeatPropagator>(grid);
  s.nl = std::make_shared<const Nonlinearity>(nl);
  s.reaction_scale = Vector::Ones(grid->size());
  return s;
}

EvolutionSetup make_setup(const Nonlinearity& nl, const RadialProfile& singular, const GridSpec& spec,
                          double r_core) {
  EvolutionSetup s = make_setup(nl, singular.N(), spec, FarField::absorbing);
  s.singular = std::make_shared<const RadialProfile>(singular);
  s.singular_values = singular_samples(*s.grid, singular);
  s.r_core = r_core;
  const RadialGrid& g = *s.grid;
  const Vector& u = s.singular_values;
  const int n = g.size();
  for (int i = 2; i < n; ++i) {
    if (g.r()[i] < r_core || g.r()[i] > g.spec().R / 2) continue;
    double ku = g.k_off()[i - 1] * u[i - 1] + g.k_diag()[i] * u[i];
    if (i + 1 < n) ku += g.k_off()[i] * u[i + 1];
    const double scale = -ku / g.volumes()[i] / nl.f(u[i]);
    if (!(scale > 0.5 && scale < 1.5))
      throw DomainError("evolution setup: grid too coarse to balance u* at r = " + std::to_string(g.r()[i]));
    s.reaction_scale[i] = scale;
  }
  return s;
}

EvolutionSetup refine(const EvolutionSetup& setup) {
  const RadialGrid fine = setup.grid->refined();
  if (setup.singular) return make_setup(*setup.nl, *setup.singular, fine.spec(), setup.r_core);
  return make_setup(*setup.nl, setup.N(), fine.spec(), setup.grid->far_field());
}

RadialField heat_semigroup(const HeatPropagator& heat, const RadialField& field, double tau) {
  if (!(tau > 0)) throw DomainError("heat_semigroup: tau must be positive");
  if (!field.values.allFinite()) throw DomainError("heat_semigroup: non-finite field");
  return {heat.grid_ptr(), heat.apply(field.values, tau), field.time + tau};
}

double truncation_radius(const RadialProfile& singular, double n, double r_max) {
  if (singular.u_at(r_max) >= n) return r_max;
  auto g = [&](double s) { return singular.u_at(std::exp(s)) - n; };
  double lo = std::log(r_max) - 1;
  while (g(lo) < 0) {
    lo -= 5;
    if (lo < -700) throw NumericalError("truncation_radius: profile never reaches the level");
  }
  return std::exp(bracketed_root<double>(g, lo, std::log(r_max)));
}

RadialField truncate_initial(const EvolutionSetup& setup, double n) {
  if (!setup.singular) throw DomainError("truncate_initial: setup has no singular solution");
  if (!(n > 0)) throw DomainError("truncate_initial: n must be positive");
  const RadialGrid& g = *setup.grid;
  Vector u = setup.singular_values.cwiseMin(n);
  const RadialProfile& sing = *setup.singular;
  const double rc = truncation_radius(sing, n, g.spec().R);
  u[0] = g.cell_average([&](double r) { return std::min(sing.u_at(r), n); }, 0, rc);
  return {setup.grid, u, 0.0};
}

double resolved_level(const EvolutionSetup& setup) {
  if (!setup.singular) throw DomainError("resolved_level: setup has no singular solution");
  return setup.singular->u_at(setup.r_core);
}

double ComparisonOde::operator()(double t) const {
  if (t >= t_blowup) return kInf;
  if (t == 0) return n;
  return nl->F_inverse(t_blowup - t);
}

ComparisonOde comparison_ode(const Nonlinearity& nl, double n) {
  if (!(n >= 0)) throw DomainError("comparison_ode: n must be nonnegative");
  return {n, nl.F(n), &nl};
}

EvolutionResult evolve(const EvolutionSetup& setup, const Vector& u0, const std::vector<double>& output_times,
                       const EvolveOptions& opts) {
  if (u0.size() != setup.grid->size()) throw DomainError("evolve: initial data does not match the grid");
  if (!std::is_sorted(output_times.begin(), output_times.end()) || output_times.empty() ||
      output_times.front() <= 0)
    throw DomainError("evolve: output times must be positive and increasing");
  EvolutionResult res;
  Vector u = u0;
  Vector m = setup.heat->to_modes(u);
  double t = 0, h = opts.fixed_step > 0 ? opts.fixed_step : opts.first_step;
  for (double target : output_times) {
    while (t < target) {
      double step;
      if (opts.fixed_step > 0) {
        step = std::min(opts.fixed_step, target - t);
      } else {
        const double limit = opts.reaction_fraction / std::max(max_slope(setup, u), 1e-300);
        step = std::min({h * opts.max_growth, limit, opts.max_step, target - t});
      }
      if (target - t - step < 1e-9 * step) step = target - t;
      bool ok = false;
      for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
        if (opts.scheme == Scheme::exponential) {
          const StepOutcome o = exponential_step(setup, u, m, step, opts);
          ok = o.ok;
          res.max_fixed_point_iterations = std::max(res.max_fixed_point_iterations, o.iterations);
        } else {
          Vector trial = u;
          ok = splitting_step(setup, trial, step, opts);
          if (ok) u = std::move(trial);
        }
        if (!ok) {
          if (opts.fixed_step > 0) break;
          step *= 0.5;
        }
      }
      if (!ok || u.maxCoeff() > opts.blowup_value) {
        res.blew_up = true;
        res.t_reached = t;
        return res;
      }
      t = step == target - t ? target : t + step;
      h = step;
      ++res.steps;
    }
    res.snapshots.push_back({setup.grid, u, target});
  }
  res.t_reached = t;
  return res;
}

EvolutionResult evolve_truncated(const EvolutionSetup& setup, double n, const std::vector<double>& output_times,
                                 const EvolveOptions& opts, const GluedSupersolution* v, double bound_tol) {
  if (n > resolved_level(setup) * (1 + 1e-12))
    throw DomainError("evolve_truncated: level " + std::to_string(n) + " exceeds the resolved level " +
                      std::to_string(resolved_level(setup)) + " of this grid");
  EvolutionResult res = evolve(setup, truncate_initial(setup, n).values, output_times, opts);
  if (!v) return res;
  const ComparisonOde zeta = comparison_ode(*setup.nl, n);
  const RadialGrid& g = *setup.grid;
  for (const RadialField& u : res.snapshots) {
    const auto slice = v->at(u.time);
    for (int i = 0; i < g.size() && g.r()[i] <= g.spec().R / 2; ++i) {
      const double b = std::min(slice(g.r()[i]), zeta(u.time));
      if (u.values[i] > b + bound_tol * std::abs(b))
        throw BoundViolationError("evolve_truncated: u_n exceeds min(v, zeta_n) at t = " + std::to_string(u.time) +
                                  ", r = " + std::to_string(g.r()[i]));
    }
  }
  return res;
}

EvolutionResult evolve_splitting_extrapolated(const EvolutionSetup& setup, const Vector& u0,
                                              const std::vector<double>& output_times, double h) {
  EvolveOptions o;
  o.scheme = Scheme::splitting;
  o.fixed_step = h;
  const EvolutionResult coarse = evolve(setup, u0, output_times, o);
  o.fixed_step = h / 2;
  EvolutionResult fine = evolve(setup, u0, output_times, o);
  if (coarse.blew_up || fine.blew_up) {
    fine.blew_up = true;
    return fine;
  }
  for (std::size_t k = 0; k < fine.snapshots.size(); ++k)
    fine.snapshots[k].values = 2 * fine.snapshots[k].values - coarse.snapshots[k].values;
  fine.steps += coarse.steps;
  return fine;
}

std::vector<double> substep_grid(double t, int steps, double first_fraction) {
  if (!(t > 0) || steps < 1) throw DomainError("substep_grid: need t > 0 and at least one step");
  std::vector<double> ts{0.0};
  if (first_fraction <= 0) {
    for (int k = 1; k <= steps; ++k) ts.push_back(t * k / steps);
    return ts;
  }
  const double lo = std::log(t * first_fraction), hi = std::log(t);
  for (int k = 0; k < steps; ++k) ts.push_back(std::exp(lo + (hi - lo) * k / (steps - 1 > 0 ? steps - 1 : 1)));
  ts.back() = t;
  return ts;
}

PicardReport picard_iterate(const EvolutionSetup& setup, const Vector& w0, const std::vector<double>& times,
                            int k_max, double tol, const std::function<double(double, double)>& bound) {
  if (times.size() < 2 || times.front() != 0) throw DomainError("picard_iterate: time grid must start at 0");
  if (k_max < 1) throw DomainError("picard_iterate: k_max must be positive");
  const HeatPropagator& heat = *setup.heat;
  const RadialGrid& grid = *setup.grid;
  const std::size_t M = times.size() - 1;
  const Eigen::Index n = grid.size();

  PicardReport rep;
  rep.times = times;
  std::vector<HeatPropagator::StepWeights> weights;
  for (std::size_t j = 0; j < M; ++j) weights.push_back(heat.weights(times[j + 1] - times[j]));

  std::vector<Vector> prev(M + 1, Vector::Zero(n));
  rep.final_iterates.push_back({setup.grid, prev.back(), times.back()});
  rep.iterations = 1;
  const Vector m0 = heat.to_modes(w0);
  const double r_cmp = grid.spec().R / 2;

  for (int k = 2; k <= k_max; ++k) {
    std::vector<Vector> src(M + 1);
    for (std::size_t j = 0; j <= M; ++j) src[j] = heat.to_modes(reaction(setup, prev[j]));
    std::vector<Vector> next(M + 1);
    next[0] = w0;
    Vector m = m0;
    for (std::size_t j = 0; j < M; ++j) {
      m = heat.step_modes(m, src[j], src[j + 1], weights[j]);
      next[j + 1] = heat.from_modes(m);
    }
    double change = 0;
    for (std::size_t j = 0; j <= M; ++j) {
      rep.max_decrease = std::max(rep.max_decrease, (prev[j] - next[j]).maxCoeff());
      change = std::max(change, sup_relative(next[j], prev[j]));
      if (bound) {
        for (Eigen::Index i = 0; i < n && grid.r()[i] <= r_cmp; ++i) {
          const double b = bound(grid.r()[i], times[j]);
          if (next[j][i] > b * (1 + 1e-6) + 1e-12) rep.exceeded_bound = true;
        }
      }
    }
    rep.last_change = change;
    rep.final_iterates.push_back({setup.grid, next.back(), times.back()});
    rep.iterations = k;
    prev = std::move(next);
    if (!prev.back().allFinite()) break;
    if (tol > 0 && change <= tol) {
      rep.converged = true;
      break;
    }
  }
  rep.monotone = rep.max_decrease <= 1e-8;
  return rep;
}

nlohmann::json PicardReport::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["monotone"] = monotone;
  j["max_decrease"] = max_decrease;
  j["last_change"] = last_change;
  j["converged"] = converged;
  j["exceeded_bound"] = exceeded_bound;
  j["substeps"] = times.size() - 1;
  nlohmann::json sups = nlohmann::json::array();
  for (const auto& w : final_iterates) sups.push_back(w.sup());
  j["final_sup_by_iterate"] = sups;
  return j;
}

DuhamelReport duhamel_check(const EvolutionSetup& setup, const GluedSupersolution& v,
                            const std::vector<double>& checkpoints, int steps_per_decade, double tolerance) {
  if (checkpoints.empty()) throw DomainError("duhamel_check: no checkpoints");
  const RadialGrid& grid = *setup.grid;
  const HeatPropagator& heat = *setup.heat;
  const Nonlinearity& nl = v.nonlinearity();
  const RadialProfile& sing = v.singular();
  const double N = grid.N();
  const int n = grid.size();
  const double r_cmp = grid.spec().R / 2;

  std::vector<double> cps = checkpoints;
  std::sort(cps.begin(), cps.end());
  if (cps.back() > v.t0()) throw DomainError("duhamel_check: checkpoint beyond t0");
  const double s_first = std::max(v.curve().points.front().t, 1e-12);
  std::vector<double> ss{0.0};
  const double decades = std::log10(cps.back() / s_first);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * steps_per_decade)));
  for (int k = 0; k <= steps; ++k) ss.push_back(s_first * std::pow(10.0, decades * k / steps));
  for (double c : cps)
    if (c > s_first) ss.push_back(c);
  std::sort(ss.begin(), ss.end());
  ss.erase(std::unique(ss.begin(), ss.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
           ss.end());

  // cells away from the origin are short against their radius: one GK15 panel
  auto cell_integral = [&](const std::function<double(double)>& g, int i, double hi) {
    const double lo = grid.cell_lower(i);
    if (lo == 0) return radial_integral(g, 0, hi, N);
    return integrate_panel<double>([&](double r) { return g(r) * std::pow(r, N - 1); }, lo, hi);
  };

  // cell averages of f(u*) - f(v(s)) (zero beyond the interface)
  auto source_at = [&](double s) {
    Vector g = Vector::Zero(n);
    if (s <= 0) return g;
    const auto slice = v.at(s);
    const double ri = slice.interface_radius();
    for (int i = 0; i < n && grid.cell_lower(i) < ri; ++i) {
      const double hi = std::min(grid.cell_upper(i), ri);
      g[i] = cell_integral([&](double r) { return nl.f(sing.u_at(r)) - nl.f(slice(r)); }, i, hi) / grid.volumes()[i];
    }
    return g;
  };

  DuhamelReport rep;
  rep.tolerance = tolerance;
  rep.holds = true;
  Vector m = Vector::Zero(n);
  Vector g_prev = heat.to_modes(source_at(0));
  for (std::size_t j = 0; j + 1 < ss.size(); ++j) {
    const Vector g_next = heat.to_modes(source_at(ss[j + 1]));
    m = heat.step_modes(m, g_prev, g_next, heat.weights(ss[j + 1] - ss[j]));
    g_prev = g_next;
    if (!is_checkpoint(ss[j + 1], cps)) continue;
    const double t = ss[j + 1];
    const Vector duhamel = heat.from_modes(m);
    const auto slice = v.at(t);
    const double ri = slice.interface_radius();
    DuhamelSample smp;
    smp.t = t;
    smp.min_defect = kInf;
    for (int i = 0; i < n && grid.r()[i] <= r_cmp; ++i) {
      double gap = 0, scale = 1;
      if (grid.cell_lower(i) < ri) {
        const double hi = std::min(grid.cell_upper(i), ri);
        gap = cell_integral([&](double r) { return slice(r) - sing.u_at(r); }, i, hi) / grid.volumes()[i];
        scale = std::max(1.0, grid.cell_average([&](double r) { return slice(r); }, i, ri));
      }
      const double d = (gap + duhamel[i]) / scale;
      if (d < smp.min_defect) {
        smp.min_defect = d;
        smp.r_at_min = grid.r()[i];
      }
    }
    smp.holds = smp.min_defect >= -tolerance;
    rep.holds = rep.holds && smp.holds;
    rep.samples.push_back(smp);
  }
  return rep;
}

nlohmann::json DuhamelReport::to_json() const {
  nlohmann::json j;
  j["tolerance"] = tolerance;
  j["holds"] = holds;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : samples)
    j["samples"].push_back({{"t", s.t}, {"min_defect", s.min_defect}, {"r_at_min", s.r_at_min}, {"holds", s.holds}});
  return j;
}

bool DemoReport::all() const {
  return monotone_in_n && below_bounds && sup_certificate && distances_ok && (!refined || two_solutions);
}

DemoReport nonuniqueness_demo(const EvolutionSetup& setup, const GluedSupersolution& v, const DemoOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  if (!setup.singular) throw DomainError("nonuniqueness_demo: setup has no singular solution");
  if (opts.n_values.empty() || !std::is_sorted(opts.n_values.begin(), opts.n_values.end()))
    throw DomainError("nonuniqueness_demo: n values must be increasing");
  std::vector<double> times = opts.times;
  std::sort(times.begin(), times.end());
  if (times.back() > v.t0()) throw DomainError("nonuniqueness_demo: times beyond t0 of the supersolution");

  const RadialGrid& grid = *setup.grid;
  const Nonlinearity& nl = *setup.nl;
  DemoReport rep;
  rep.n_values = opts.n_values;
  rep.times = times;
  rep.gammas = opts.gammas;
  for (double t : times) rep.sup_bound.push_back(v.sup(t));

  rep.resolved_level = resolved_level(setup);
  std::vector<std::vector<RadialField>> runs;
  Vector prev_data;
  rep.identical_data = true;
  for (std::size_t k = 0; k < opts.n_values.size(); ++k) {
    rep.effective_n.push_back(std::min(opts.n_values[k], rep.resolved_level));
    const Vector data = truncate_initial(setup, rep.effective_n.back()).values;
    if (k > 0 && data == prev_data) {
      runs.push_back(runs.back());  // same grid data, same discrete solution
    } else {
      if (k > 0) rep.identical_data = false;
      const EvolutionResult r = evolve(setup, data, times, opts.evolve);
      if (r.blew_up) throw NumericalError("nonuniqueness_demo: run blew up");
      runs.push_back(r.snapshots);
    }
    prev_data = data;
  }

  // (a) monotone in n, (b) below min(v, zeta_n)
  rep.monotone_violation = 0;
  rep.bound_violation = -kInf;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const auto slice = v.at(times[ti]);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const Vector& u = runs[k][ti].values;
      const double zeta = comparison_ode(nl, rep.effective_n[k])(times[ti]);
      for (int i = 0; i < grid.size() && grid.r()[i] <= opts.compare_radius; ++i) {
        if (k + 1 < runs.size())
          rep.monotone_violation = std::max(rep.monotone_violation, u[i] - runs[k + 1][ti].values[i]);
        const double b = std::min(slice(grid.r()[i]), zeta);
        rep.bound_violation = std::max(rep.bound_violation, (u[i] - b) / std::abs(b));
      }
    }
  }
  rep.monotone_in_n = rep.monotone_violation <= opts.monotone_tol;
  rep.below_bounds = rep.bound_violation <= opts.bound_tol;

  rep.sup_u.assign(runs.size(), {});
  rep.sup_certificate = true;
  for (std::size_t k = 0; k < runs.size(); ++k)
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double su = runs[k][ti].sup();
      rep.sup_u[k].push_back(su);
      rep.sup_certificate = rep.sup_certificate && su <= rep.sup_bound[ti] * (1 + opts.bound_tol);
    }

  // (c) distances to u* along decreasing t, limit proxy u_{n_max}
  rep.limit = runs.back();
  const ConvergenceTable tab = convergence_report(rep.limit, *setup.singular, opts.gammas);
  rep.distances.assign(opts.gammas.size(), std::vector<double>(times.size()));
  for (const auto& e : tab.entries) {
    const auto gi = std::find(opts.gammas.begin(), opts.gammas.end(), e.gamma) - opts.gammas.begin();
    const auto ti = std::find(times.begin(), times.end(), e.t) - times.begin();
    rep.distances[gi][ti] = e.distance;
  }
  rep.distances_decrease = tab.decreasing;
  rep.distances_ok = std::all_of(tab.decreasing.begin(), tab.decreasing.end(), [](bool b) { return b; });

  // (d) refinement: u* grid max grows, sup u(t) does not
  rep.grid_max_singular = setup.singular_values.tail(grid.size() - 1).maxCoeff();
  if (opts.refine) {
    rep.refined = true;
    const EvolutionSetup fine = refine(setup);
    rep.grid_max_singular_refined = fine.singular_values.tail(fine.grid->size() - 1).maxCoeff();
    const EvolutionResult r =
        evolve(fine, truncate_initial(fine, rep.effective_n.back()).values, times, opts.evolve);
    if (r.blew_up) throw NumericalError("nonuniqueness_demo: refined run blew up");
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      rep.sup_u_refined.push_back(r.snapshots[ti].sup());
      rep.sup_refinement_change =
          std::max(rep.sup_refinement_change, relative_difference(rep.sup_u_refined[ti], rep.sup_u.back()[ti]));
    }
    const ConvergenceTable ftab = convergence_report(r.snapshots, *setup.singular, opts.gammas);
    rep.distances_refined.assign(opts.gammas.size(), std::vector<double>(times.size()));
    for (const auto& e : ftab.entries) {
      const auto gi = std::find(opts.gammas.begin(), opts.gammas.end(), e.gamma) - opts.gammas.begin();
      const auto ti = std::find(times.begin(), times.end(), e.t) - times.begin();
      rep.distances_refined[gi][ti] = e.distance;
      rep.distance_refinement_change =
          std::max(rep.distance_refinement_change, relative_difference(e.distance, rep.distances[gi][ti]));
    }
    const double growth = rep.grid_max_singular_refined / rep.grid_max_singular - 1;
    rep.two_solutions = growth > rep.sup_refinement_change && rep.sup_refinement_change < opts.refinement_tol;
  }
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

nlohmann::json DemoReport::to_json() const {
  nlohmann::json j;
  j["n_values"] = n_values;
  j["times"] = times;
  j["gammas"] = gammas;
  j["sup_u"] = sup_u;
  j["sup_bound"] = sup_bound;
  j["resolved_level"] = resolved_level;
  j["effective_n"] = effective_n;
  j["identical_data"] = identical_data;
  j["certificates"] = {{"monotone_in_n", monotone_in_n},
                       {"below_min_v_zeta", below_bounds},
                       {"sup_bound", sup_certificate},
                       {"distances_decrease", distances_ok},
                       {"two_solutions", two_solutions}};
  j["monotone_violation"] = monotone_violation;
  j["bound_violation"] = bound_violation;
  j["distances"] = distances;
  j["distances_decrease"] = distances_decrease;
  if (refined) {
    j["refinement"] = {{"grid_max_singular", grid_max_singular},
                       {"grid_max_singular_refined", grid_max_singular_refined},
                       {"sup_u_refined", sup_u_refined},
                       {"sup_change", sup_refinement_change},
                       {"distances_refined", distances_refined},
                       {"distance_change", distance_refinement_change}};
  }
  j["runtime_seconds"] = runtime_seconds;
  j["all"] = all();
  return j;
}

}  // namespace nonuniq
