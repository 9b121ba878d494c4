#include "nonuniq/pipeline.hpp"

#include "nonuniq/evolution.hpp"
#include "nonuniq/exponents.hpp"
#include "nonuniq/nonlinearity.hpp"
#include "nonuniq/norms.hpp"
#include "nonuniq/selfsimilar.hpp"
#include "nonuniq/stationary.hpp"
#include "nonuniq/supersolution.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace nonuniq {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

std::map<std::string, double> ExperimentConfig::default_tolerances() {
  return {{"monotone", 1e-8},        {"bound", 1e-6},          {"refinement", 0.01},
          {"ode_residual", 1e-6},    {"theta", 1e-2},          {"decay_delta", 0.1},
          {"profile_residual", 1e-6}, {"duhamel", 1e-3},       {"residual", 1e-6},
          {"scheme_agreement", 1e-4}};
}

std::vector<double> ExperimentConfig::curve_times() const {
  std::vector<double> ts;
  const double decades = std::log10(runs.curve_t_max / runs.curve_t_min);
  const int n = static_cast<int>(std::lround(decades * runs.curve_per_decade));
  for (int k = 0; k <= n; ++k) ts.push_back(runs.curve_t_min * std::pow(10.0, decades * k / std::max(n, 1)));
  ts.back() = runs.curve_t_max;
  return ts;
}

namespace {

/// Object reader that records the path for error messages and rejects unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out, bool positive = true) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
      if (positive && !(out > 0)) throw ConfigError(at(key), "must be positive");
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void list(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->empty()) throw ConfigError(at(key), "expected a nonempty array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        const std::string p = at(key) + "[" + std::to_string(i) + "]";
        if (!e.is_number()) throw ConfigError(p, "expected a number");
        const double x = e.get<double>();
        if (!(x > 0) || !std::isfinite(x)) throw ConfigError(p, "must be positive and finite");
        out.push_back(x);
      }
    }
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void strictly_increasing(const std::vector<double>& v, const std::string& path) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1]))
      throw ConfigError(path + "[" + std::to_string(i) + "]", "must be strictly increasing");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  if (const json* s = root.find("schema")) {
    if (*s != kConfigSchema) throw ConfigError("schema", std::string("expected \"") + kConfigSchema + "\"");
  }
  if (const json* d = root.find("dim")) {
    if (!d->is_number_integer()) throw ConfigError("dim", "expected an integer");
    c.dim = d->get<int>();
  }
  if (c.dim < 3) throw ConfigError("dim", "must be at least 3, got " + std::to_string(c.dim));

  if (const json* nl = root.find("nonlinearity")) {
    Reader r(*nl, "nonlinearity");
    const json* kind = r.find("kind");
    if (!kind || !kind->is_string()) throw ConfigError("nonlinearity.kind", "expected a string");
    const json* params = r.find("params");
    if (params && !params->is_object()) throw ConfigError("nonlinearity.params", "expected an object");
    r.done();
    c.nonlinearity = {{"kind", *kind}, {"params", params ? *params : json::object()}};
    try {
      (void)make_nonlinearity(c.nonlinearity);
    } catch (const NumericalError& e) {
      throw ConfigError(params ? "nonlinearity.params" : "nonlinearity.kind", e.what());
    }
  }

  if (const json* g = root.find("grids")) {
    Reader r(*g, "grids");
    auto& G = c.grids;
    r.number("r_min", G.r_min);
    r.number("r_max", G.r_max);
    r.integer("points_per_decade", G.points_per_decade);
    r.number("R_domain", G.R_domain);
    r.number("dt", G.dt);
    r.number("h0", G.h0);
    r.number("ratio", G.ratio);
    r.number("dr_max", G.dr_max);
    r.number("r_core", G.r_core);
    r.done();
    if (G.points_per_decade < 1) throw ConfigError("grids.points_per_decade", "must be positive");
    if (!(G.r_min < G.r_max)) throw ConfigError("grids.r_max", "must exceed grids.r_min");
    if (!(G.ratio > 1)) throw ConfigError("grids.ratio", "must exceed 1");
    if (!(G.h0 <= G.dr_max)) throw ConfigError("grids.h0", "must not exceed grids.dr_max");
    if (!(G.dr_max < G.R_domain)) throw ConfigError("grids.dr_max", "must be below grids.R_domain");
    if (!(G.r_core < G.R_domain / 2)) throw ConfigError("grids.r_core", "must be below grids.R_domain / 2");
    if (G.r_max < G.R_domain) throw ConfigError("grids.r_max", "the profile must cover grids.R_domain");
  }

  if (const json* rj = root.find("runs")) {
    Reader r(*rj, "runs");
    auto& R = c.runs;
    r.list("n_list", R.n_list);
    strictly_increasing(R.n_list, "runs.n_list");
    r.list("t_grid", R.t_grid);
    strictly_increasing(R.t_grid, "runs.t_grid");
    r.list("gamma_list", R.gamma_list);
    for (std::size_t i = 0; i < R.gamma_list.size(); ++i) {
      if (R.gamma_list[i] < 1) throw ConfigError("runs.gamma_list[" + std::to_string(i) + "]", "must be at least 1");
    }
    r.number("curve_t_min", R.curve_t_min);
    r.number("curve_t_max", R.curve_t_max);
    r.integer("curve_per_decade", R.curve_per_decade);
    if (!(R.curve_t_min < R.curve_t_max)) throw ConfigError("runs.curve_t_max", "must exceed runs.curve_t_min");
    if (R.curve_per_decade < 1) throw ConfigError("runs.curve_per_decade", "must be positive");
    r.number("splitting_step", R.splitting_step);
    if (const json* a = r.find("alpha_scan")) {
      Reader s(*a, "runs.alpha_scan");
      auto& A = R.alpha_scan;
      s.number("eta_max", A.eta_max);
      s.integer("points_per_unit", A.points_per_unit);
      s.number("bracket_low", A.bracket_low);
      s.number("bracket_high", A.bracket_high);
      s.number("margin_floor", A.margin_floor);
      s.list("margin_factors", A.margin_factors);
      s.number("required_t0", A.required_t0, false);
      s.done();
      if (A.points_per_unit < 1) throw ConfigError("runs.alpha_scan.points_per_unit", "must be positive");
      if (!(A.bracket_low < A.bracket_high))
        throw ConfigError("runs.alpha_scan.bracket_high", "must exceed runs.alpha_scan.bracket_low");
      if (A.required_t0 < 0) throw ConfigError("runs.alpha_scan.required_t0", "must be nonnegative");
    }
    r.done();
  }

  if (const json* t = root.find("tolerances")) {
    if (!t->is_object()) throw ConfigError("tolerances", "expected an object");
    for (const auto& [key, value] : t->items()) {
      const std::string p = "tolerances." + key;
      if (!c.tolerances.count(key)) throw ConfigError(p, "unknown tolerance");
      if (!value.is_number() || !(value.get<double>() > 0)) throw ConfigError(p, "must be a positive number");
      c.tolerances[key] = value.get<double>();
    }
  }

  if (const json* o = root.find("output_dir")) {
    if (!o->is_string() || o->get<std::string>().empty()) throw ConfigError("output_dir", "expected a nonempty string");
    c.output_dir = o->get<std::string>();
  }
  root.done();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  const auto& G = c.grids;
  const auto& R = c.runs;
  const auto& A = R.alpha_scan;
  return {{"schema", kConfigSchema},
          {"dim", c.dim},
          {"nonlinearity", c.nonlinearity},
          {"grids",
           {{"r_min", G.r_min},
            {"r_max", G.r_max},
            {"points_per_decade", G.points_per_decade},
            {"R_domain", G.R_domain},
            {"dt", G.dt},
            {"h0", G.h0},
            {"ratio", G.ratio},
            {"dr_max", G.dr_max},
            {"r_core", G.r_core}}},
          {"runs",
           {{"n_list", R.n_list},
            {"t_grid", R.t_grid},
            {"gamma_list", R.gamma_list},
            {"curve_t_min", R.curve_t_min},
            {"curve_t_max", R.curve_t_max},
            {"curve_per_decade", R.curve_per_decade},
            {"splitting_step", R.splitting_step},
            {"alpha_scan",
             {{"eta_max", A.eta_max},
              {"points_per_unit", A.points_per_unit},
              {"bracket_low", A.bracket_low},
              {"bracket_high", A.bracket_high},
              {"margin_floor", A.margin_floor},
              {"margin_factors", A.margin_factors},
              {"required_t0", A.required_t0}}}}},
          {"tolerances", c.tolerances},
          {"output_dir", c.output_dir.string()}};
}

// ---------------------------------------------------------------------------
// Output helpers

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match the header");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::string s;
  for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
  s += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_double(row[i]);
    s += '\n';
  }
  return s;
}

bool RunResult::passed() const {
  return error.empty() &&
         std::all_of(certificates.begin(), certificates.end(), [](const Certificate& c) { return c.passed; });
}

void RunResult::certify(std::string name, bool ok, std::string detail) {
  certificates.push_back({std::move(name), ok, std::move(detail)});
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"exponents", "validate",  "singular", "profile", "curve",
                                          "supersolution", "evolve", "demo",     "ulnorm"};
  return s;
}

namespace {

/// A stage threw; the certificate carrying its name has already been recorded.
struct StageAborted {};

std::vector<double> log_points(double a, double b, int per_decade) {
  std::vector<double> out;
  const int n = static_cast<int>(std::ceil(std::log10(b / a) * per_decade));
  for (int k = 0; k <= n; ++k) out.push_back(a * std::pow(b / a, static_cast<double>(k) / n));
  return out;
}

/// Drops wall-clock entries so the data file is reproducible.
void strip_runtime(json& j) {
  if (j.is_object()) {
    j.erase("runtime_seconds");
    for (auto& [k, v] : j.items()) strip_runtime(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_runtime(v);
  }
}

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, RunResult& out, std::function<void(const std::string&)> log)
      : cfg_(cfg), out_(out), log_(std::move(log)) {}

  void run(const std::string& sub) {
    if (sub == "exponents") exponents();
    else if (sub == "validate") validate();
    else if (sub == "singular") singular();
    else if (sub == "profile") profile();
    else if (sub == "curve") curve();
    else if (sub == "supersolution") supersolution();
    else if (sub == "evolve") evolve();
    else if (sub == "demo") demo();
    else if (sub == "ulnorm") ulnorm();
    else throw ConfigError("<subcommand>", "unknown subcommand '" + sub + "'");
  }

 private:
  double tol(const std::string& key) const { return cfg_.tolerances.at(key); }
  double N() const { return cfg_.dim; }

  void say(const std::string& msg) const {
    if (log_) log_(msg);
  }

  /// Runs fn; a numerical failure becomes the failed certificate `name` and aborts the run.
  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    say(name);
    try {
      return fn();
    } catch (const NumericalError& e) {
      out_.certify(name, false, e.what());
      out_.error = name + ": " + e.what();
      throw StageAborted{};
    }
  }

  void file(std::string name, std::string content) { out_.files.push_back({std::move(name), std::move(content)}); }

  const Nonlinearity& nl() {
    if (!nl_) nl_.emplace(stage("nonlinearity.build", [&] { return make_nonlinearity(cfg_.nonlinearity); }));
    return *nl_;
  }

  const RadialProfile& sing() {
    if (!sing_) {
      StationaryOptions o;
      o.points_per_decade = cfg_.grids.points_per_decade;
      sing_.emplace(stage("stationary.singular_solution",
                    [&] { return singular_solution(nl(), N(), cfg_.grids.r_min, cfg_.grids.r_max, o); }));
    }
    return *sing_;
  }

  AlphaScanOptions scan() const {
    const auto& A = cfg_.runs.alpha_scan;
    AlphaScanOptions o;
    o.eta_max = A.eta_max;
    o.points_per_unit = A.points_per_unit;
    o.bracket_low = A.bracket_low;
    o.bracket_high = A.bracket_high;
    o.margin_floor = A.margin_floor;
    return o;
  }

  const GluedSupersolution& glued() {
    if (!v_) {
      SupersolutionOptions o;
      o.margin_factors = cfg_.runs.alpha_scan.margin_factors;
      o.required_t0 = cfg_.runs.alpha_scan.required_t0;
      o.scan = scan();
      const auto& s = sing();
      v_.emplace(stage("supersolution.construct", [&] { return construct_supersolution(nl(), s, cfg_.curve_times(), o); }));
    }
    return *v_;
  }

  const EvolutionSetup& setup() {
    if (!setup_) {
      const GridSpec spec{cfg_.grids.h0, cfg_.grids.ratio, cfg_.grids.dr_max, cfg_.grids.R_domain};
      const auto& s = sing();
      setup_.emplace(stage("evolution.setup", [&] { return make_setup(nl(), s, spec, cfg_.grids.r_core); }));
    }
    return *setup_;
  }

  std::vector<double> glued_times() {
    std::vector<double> ts;
    for (double t : cfg_.curve_times())
      if (t <= glued().t0() * (1 + 1e-12)) ts.push_back(t);
    return ts;
  }

  void certify_glued(const GluedReport& g) {
    out_.certify("supersolution.interface_continuity", g.continuity);
    out_.certify("supersolution.kink_sign", g.kink);
    out_.certify("supersolution.interface_large", g.large);
    out_.certify("supersolution.largeness_monotone", g.monotone_largeness);
    out_.certify("supersolution.residual_coefficient", g.coefficient);
    out_.certify("supersolution.sup_identity", g.sup_identity);
  }

  json duhamel() {
    const double t0 = glued().t0();
    std::vector<double> cps;
    for (int k = 4; k >= 0; --k) cps.push_back(t0 * std::pow(10.0, -k));
    const DuhamelReport d = stage("evolution.duhamel_check", [&] {
      return duhamel_check(setup(), glued(), cps, 20, tol("duhamel"));
    });
    out_.certify("evolution.duhamel_inequality", d.holds);
    return d.to_json();
  }

  // -- subcommands -----------------------------------------------------------

  void exponents() {
    const ExponentTable e = stage("exponents.table", [&] { return exponent_table(N()); });
    out_.report = e.to_json();
    out_.certify("exponents.ordering", e.p_F < e.p_0 && e.p_0 < e.p_S && e.p_S < e.p_JL);
  }

  void validate() {
    const AssumptionReport a = stage("nonlinearity.validate",
                                     [&] { return validate_assumptions(nl(), N(), default_assumption_grid()); });
    // A5 and A7 are the two admissible regimes; exactly one of them can hold.
    for (const auto& c : a.checks)
      if (c.id != "A5" && c.id != "A7") out_.certify("nonlinearity." + c.id, c.passed, c.detail);
    const Regime reg = classify_regime(N(), nl().qf_declared());
    out_.certify("nonlinearity.regime_A5_or_A7", a.passed("A5") || a.passed("A7"), to_string(reg));
    out_.report = a.to_json();
    out_.report["regime"] = to_string(reg);
    CsvTable q({"u", "q_ratio"});
    for (std::size_t i = 0; i < a.qratio_samples_u.size(); ++i) q.add({a.qratio_samples_u[i], a.qratio_samples[i]});
    file("qratio.csv", q.str());
    CsvTable l({"u", "fprime_F"});
    for (std::size_t i = 0; i < a.lemma_u.size(); ++i) l.add({a.lemma_u[i], a.lemma_fprimeF[i]});
    file("fprimeF.csv", l.str());
  }

  void singular() {
    const RadialProfile& p = sing();
    out_.certify("stationary.positive", p.positive);
    out_.certify("stationary.decreasing", p.decreasing);
    out_.certify("stationary.reached_r_max", p.reached_r_max);
    const double res = stage("stationary.ode_residual", [&] { return ode_residual(p, nl()); });
    out_.certify("stationary.ode_residual", res <= tol("ode_residual"), format_double(res));

    // theta -> 0: |theta| by decades toward r_lo; the innermost three must decrease
    // (slowly varying corrections are not monotone far out) and end below tolerance.
    json thetas = json::array();
    std::vector<double> th;
    for (double r = 1e-1; r >= p.r_lo() * (1 + 1e-9); r /= 10) {
      th.push_back(std::abs(asymptotic_theta(nl(), N(), p.u_at(r), r)));
      thetas.push_back({{"r", r}, {"abs_theta", th.back()}});
    }
    bool theta_ok = th.size() >= 3 && th.back() < tol("theta");
    for (std::size_t k = th.size() >= 3 ? th.size() - 2 : 1; theta_ok && k < th.size(); ++k)
      theta_ok = th[k] <= th[k - 1] + 1e-9;
    out_.certify("stationary.asymptotics", theta_ok, thetas.dump());

    const DecayBoundsReport d = stage("stationary.decay_bounds",
                                      [&] { return decay_bounds_check(p, nl(), tol("decay_delta")); });
    out_.certify("stationary.decay_bounds", d.holds_u && d.holds_du);

    out_.report = {{"r_lo", p.r_lo()},
                   {"r_hi", p.r_hi()},
                   {"seed_radius", p.seed_radius},
                   {"seed_halving_difference", p.seed_halving_difference},
                   {"ode_residual", res},
                   {"theta", thetas},
                   {"decay_bounds", d.to_json()}};
    CsvTable t({"r", "u", "du", "theta"});
    for (std::size_t i = 0; i < p.r().size(); ++i) {
      const double r = p.r()[i];
      t.add({r, p.u()[i], p.du()[i], asymptotic_theta(nl(), N(), p.u()[i], r)});
    }
    file("singular.csv", t.str());
  }

  void profile() {
    const EpsilonChoice ec = stage("selfsimilar.choose_epsilon", [&] { return choose_epsilon(nl(), N(), {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001}, scan()); });
    const IntersectionRecord& rec = ec.record;
    out_.certify("selfsimilar.transversality", rec.transversality_margin > cfg_.runs.alpha_scan.margin_floor,
                 format_double(rec.transversality_margin));
    out_.certify("selfsimilar.sign_pattern", rec.sign_pattern);
    out_.certify("selfsimilar.first_crossing", rec.first);
    const ProfileSolution prof =
        stage("selfsimilar.solve_profile", [&] { return solve_profile(ec.q, N(), rec.alpha0, cfg_.runs.alpha_scan.eta_max); });
    const double res = profile_residual(prof);
    out_.certify("selfsimilar.profile_residual", res <= tol("profile_residual"), format_double(res));
    out_.certify("selfsimilar.profile_decreasing", prof.decreasing);
    out_.report = ec.to_json();
    out_.report["profile_residual"] = res;
    CsvTable t({"eta", "phi", "dphi", "target"});
    for (double eta : prof.eta_grid(16)) {
      if (eta <= 0) continue;
      t.add({eta, prof.phi(eta), prof.dphi(eta), singular_profile(ec.q, N(), eta, rec.q_ref)});
    }
    file("profile.csv", t.str());
  }

  void curve() {
    const GluedSupersolution& v = glued();
    const IntersectionCurve& c = v.curve();
    out_.certify("selfsimilar.root_kept", !c.root_lost);
    out_.certify("selfsimilar.radius_monotone", c.r_decreasing);
    out_.certify("selfsimilar.eta_converges", c.eta_converges);
    out_.certify("selfsimilar.curve_continuity", c.continuity);
    out_.certify("selfsimilar.curve_sign_pattern", c.sign_pattern);
    out_.report = c.to_json();
    out_.report["selection"] = v.selection;
    CsvTable t({"t", "r", "eta"});
    for (const auto& p : c.points) t.add({p.t, p.r, p.eta});
    file("curve.csv", t.str());
  }

  void supersolution() {
    const GluedSupersolution& v = glued();
    const std::vector<double> ts = glued_times();
    const GluedReport g = stage("supersolution.check_glued", [&] { return check_glued(v, ts); });
    certify_glued(g);

    json residuals = json::array();
    bool res_ok = true;
    for (double t : cfg_.runs.t_grid) {
      if (t > v.t0()) continue;
      const double ri = v.interface_radius(t);
      std::vector<double> radii;
      for (int k = 48; k >= 0; --k) radii.push_back(ri * std::pow(10.0, -k / 8.0));
      const ResidualReport r = stage("supersolution.residual", [&] {
        return supersolution_residual(nl(), v.profile(), v.q(), t, radii, v.large(), tol("residual"));
      });
      res_ok = res_ok && r.holds;
      json rj = r.to_json();
      rj.erase("samples");
      residuals.push_back(rj);
    }
    out_.certify("supersolution.pointwise_residual", res_ok);
    const json dj = duhamel();

    out_.report = {{"selection", v.selection}, {"t0", v.t0()}, {"c0", v.c0()}, {"q", v.q()},
                   {"u_large", v.large()},     {"glued", g.to_json()}, {"residuals", residuals},
                   {"duhamel", dj}};
    CsvTable iface({"t", "r", "u_star", "continuity", "kink", "large", "min_coefficient"});
    for (const auto& p : g.points) iface.add({p.t, p.r, p.u_star, p.continuity, p.kink, p.large ? 1.0 : 0.0, p.min_coefficient});
    file("interface.csv", iface.str());
    CsvTable sl({"t", "r", "v", "u_star"});
    for (double t : cfg_.runs.t_grid) {
      if (t > v.t0()) continue;
      const auto slice = v.at(t);
      for (double r : log_points(1e-6, cfg_.grids.R_domain / 2, 8)) sl.add({t, r, slice(r), sing().u_at(r)});
    }
    file("v_slices.csv", sl.str());
  }

  void evolve() {
    const GluedSupersolution& v = glued();
    const EvolutionSetup& s = setup();
    const double level = resolved_level(s);
    const double n = std::min(cfg_.runs.n_list.front(), level);
    EvolveOptions o;
    o.max_step = cfg_.grids.dt;
    const auto& ts = cfg_.runs.t_grid;
    EvolutionResult run;
    say("evolution.evolve_truncated");
    try {
      run = evolve_truncated(s, n, ts, o, &v, tol("bound"));
      out_.certify("evolution.below_min_v_zeta", true);
    } catch (const BoundViolationError& e) {
      out_.certify("evolution.below_min_v_zeta", false, e.what());
      out_.error = std::string("evolution.below_min_v_zeta: ") + e.what();
      return;
    } catch (const NumericalError& e) {
      out_.certify("evolution.evolve_truncated", false, e.what());
      out_.error = std::string("evolution.evolve_truncated: ") + e.what();
      return;
    }
    out_.certify("evolution.no_blowup", !run.blew_up);
    double min_u = std::numeric_limits<double>::infinity();
    for (const auto& f : run.snapshots) min_u = std::min(min_u, f.values.minCoeff());
    out_.certify("evolution.positive", min_u >= 0, format_double(min_u));

    // Method-of-lines cross-check. The reaction substeps need h max f' small, so stiff
    // data shrink the step and only the output times within the step budget are compared.
    const RadialField u0 = truncate_initial(s, n);
    double stiff = 0;
    for (int i = 0; i < s.grid->size(); ++i) stiff = std::max(stiff, s.reaction_scale[i] * nl().df(u0.values[i]));
    const double h = std::min(cfg_.runs.splitting_step, 0.01 / std::max(stiff, 1e-300));
    constexpr double kStepBudget = 2e5;
    std::vector<double> checked;
    for (double t : ts)
      if (checked.empty() || t / h <= kStepBudget) checked.push_back(t);
    const EvolutionResult mol = stage("evolution.splitting", [&] {
      return evolve_splitting_extrapolated(s, u0.values, checked, h);
    });
    json agreement = json::array();
    double worst = 0;
    for (std::size_t k = 0; k < checked.size(); ++k) {
      const Vector& a = run.snapshots[k].values;
      const Vector& b = mol.snapshots[k].values;
      const double rel = (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
      worst = std::max(worst, rel);
      agreement.push_back({{"t", ts[k]}, {"relative_sup_difference", rel}});
    }
    out_.certify("evolution.scheme_agreement", !mol.blew_up && worst <= tol("scheme_agreement"),
                 format_double(worst) + " over " + std::to_string(checked.size()) + " times");

    json sups = json::array();
    for (std::size_t k = 0; k < ts.size(); ++k)
      sups.push_back({{"t", ts[k]}, {"sup_u", run.snapshots[k].sup()}, {"sup_bound", v.sup(ts[k])}});
    out_.report = {{"n", cfg_.runs.n_list.front()}, {"effective_n", n}, {"resolved_level", level},
                   {"steps", run.steps},           {"sup", sups},        {"scheme_agreement", agreement},
                   {"splitting_step", h}};
    CsvTable t({"t", "r", "u", "u_star"});
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const RadialField& f = run.snapshots[k];
      for (int i = 0; i < s.grid->size(); ++i) t.add({ts[k], s.grid->r()[i], f.values[i], s.singular_values[i]});
    }
    file("evolve.csv", t.str());
  }

  void demo() {
    const GluedSupersolution& v = glued();
    const GluedReport g = stage("supersolution.check_glued", [&] { return check_glued(v, glued_times()); });
    certify_glued(g);
    const json dj = duhamel();

    DemoOptions o;
    o.n_values = cfg_.runs.n_list;
    o.times = cfg_.runs.t_grid;
    o.gammas = cfg_.runs.gamma_list;
    o.evolve.max_step = cfg_.grids.dt;
    o.monotone_tol = tol("monotone");
    o.bound_tol = tol("bound");
    o.refinement_tol = tol("refinement");
    o.compare_radius = cfg_.grids.R_domain / 2;
    const EvolutionSetup& s = setup();
    const DemoReport d = stage("evolution.nonuniqueness_demo", [&] { return nonuniqueness_demo(s, v, o); });
    out_.certify("evolution.monotone_in_n", d.monotone_in_n, format_double(d.monotone_violation));
    out_.certify("evolution.below_min_v_zeta", d.below_bounds, format_double(d.bound_violation));
    out_.certify("evolution.sup_bound", d.sup_certificate);
    out_.certify("norms.distance_decreasing", d.distances_ok);
    out_.certify("evolution.two_solutions", d.refined && d.two_solutions);

    out_.report = d.to_json();
    strip_runtime(out_.report);
    out_.report["supersolution"] = {{"selection", v.selection}, {"t0", v.t0()}, {"c0", v.c0()}, {"glued", g.to_json()}};
    out_.report["duhamel"] = dj;

    CsvTable sup({"n", "effective_n", "t", "sup_u", "sup_bound"});
    for (std::size_t i = 0; i < d.n_values.size(); ++i)
      for (std::size_t k = 0; k < d.times.size(); ++k)
        sup.add({d.n_values[i], d.effective_n[i], d.times[k], d.sup_u[i][k], d.sup_bound[k]});
    file("demo_sup.csv", sup.str());
    CsvTable dist({"gamma", "t", "distance", "distance_refined"});
    for (std::size_t gi = 0; gi < d.gammas.size(); ++gi)
      for (std::size_t k = 0; k < d.times.size(); ++k) {
        const double refined = gi < d.distances_refined.size() ? d.distances_refined[gi][k] : std::nan("");
        dist.add({d.gammas[gi], d.times[k], d.distances[gi][k], refined});
      }
    file("demo_distances.csv", dist.str());
    CsvTable lim({"t", "r", "u", "u_star", "v"});
    for (std::size_t k = 0; k < d.limit.size(); ++k) {
      const RadialField& f = d.limit[k];
      const auto slice = v.at(f.time);
      for (int i = 0; i < s.grid->size(); ++i) {
        const double r = s.grid->r()[i];
        lim.add({f.time, r, f.values[i], s.singular_values[i], r > 0 ? slice(r) : v.sup(f.time)});
      }
    }
    file("demo_limit.csv", lim.str());
  }

  void ulnorm() {
    const RadialProfile& p = sing();
    const double gstar = gamma_star(N(), nl().qf_declared()).value();
    json results = json::array();
    CsvTable t({"gamma", "value", "divergent", "achieving_center"});
    CsvTable cut({"gamma", "cutoff", "partial_norm"});
    const UlNormOptions opts;
    bool boundary = true, origin = true;
    for (double g : cfg_.runs.gamma_list) {
      const UlNormResult r = stage("norms.ul_norm", [&] { return ul_norm(p, g, opts); });
      boundary = boundary && (r.divergent == (g >= gstar));
      origin = origin && r.origin_is_max;
      results.push_back(r.to_json());
      t.add({g, r.value, r.divergent ? 1.0 : 0.0, r.achieving_center});
      for (std::size_t k = 0; k < r.cutoff_values.size(); ++k) cut.add({g, opts.cutoffs[k], r.cutoff_values[k]});
    }
    out_.certify("norms.divergence_boundary", boundary, "gamma* = " + format_double(gstar));
    out_.certify("norms.origin_is_max", origin);
    out_.report = {{"gamma_star", gstar}, {"norms", results}};
    file("ulnorm.csv", t.str());
    file("ulnorm_cutoffs.csv", cut.str());
  }

  const ExperimentConfig& cfg_;
  RunResult& out_;
  std::function<void(const std::string&)> log_;
  std::optional<Nonlinearity> nl_;
  std::optional<RadialProfile> sing_;
  std::optional<GluedSupersolution> v_;
  std::optional<EvolutionSetup> setup_;
};

}  // namespace

RunResult run_pipeline(const std::string& subcommand, const ExperimentConfig& cfg,
                       const std::function<void(const std::string&)>& log) {
  RunResult out;
  out.subcommand = subcommand;
  const auto started = std::chrono::steady_clock::now();
  try {
    Pipeline(cfg, out, log).run(subcommand);
  } catch (const StageAborted&) {
  }
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json report = {{"schema", kReportSchema}, {"subcommand", subcommand}, {"report", out.report}};
  out.files.insert(out.files.begin(), {subcommand + "_report.json", report.dump(2) + "\n"});
  return out;
}

json manifest(const RunResult& result, const ExperimentConfig& cfg) {
  json certs = json::array();
  for (const auto& c : result.certificates) {
    json e = {{"name", c.name}, {"passed", c.passed}};
    if (!c.detail.empty()) e["detail"] = c.detail;
    certs.push_back(e);
  }
  json files = json::array();
  for (const auto& f : result.files) files.push_back({{"name", f.name}, {"bytes", f.content.size()}});

  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));

  json m = {{"schema", kManifestSchema},
            {"subcommand", result.subcommand},
            {"status", result.passed() ? "pass" : "fail"},
            {"config", to_json(cfg)},
            {"versions",
             {{"nonuniq", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"boost", BOOST_LIB_VERSION},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}}},
            {"certificates", certs},
            {"files", files},
            {"created", stamp},
            {"runtime_seconds", result.runtime_seconds}};
  if (!result.error.empty()) m["error"] = result.error;
  return m;
}

void write_outputs(const RunResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  for (const auto& f : result.files) put(f.name, f.content);
  put("manifest.json", manifest(result, cfg).dump(2) + "\n");
}

}  // namespace nonuniq
