#include "nonuniq/norms.hpp"

#include "nonuniq/quadrature.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nonuniq {

namespace {

double sphere_area(double N) { return 2 * std::pow(std::numbers::pi, N / 2) / std::tgamma(N / 2); }

struct OriginPanel {
  double value = 0;
  bool divergent = false;
};

// int_0^b h(r) dr by decades in log r; h already carries the r^{N-1} weight
OriginPanel origin_panel(const std::function<double(double)>& h, double b, const UlNormOptions& opts) {
  const double ln10 = std::log(10.0);
  OriginPanel out;
  double prev = 0;
  int rising = 0, quiet = 0;
  for (int k = 0; k < opts.max_decades; ++k) {
    const double hi = std::log(b) - k * ln10;
    const double piece = integrate<double>(
        [&](double s) {
          const double r = std::exp(s);
          return h(r) * r;
        },
        hi - ln10, hi, 1e-11, 8);
    out.value += piece;
    if (k > 0 && prev > 0 && piece >= opts.divergence_ratio * prev)
      ++rising;
    else
      rising = 0;
    if (rising >= 5 && k >= 8) {
      out.divergent = true;
      return out;
    }
    quiet = piece <= 1e-15 * out.value ? quiet + 1 : 0;
    if (quiet >= 2 || (out.value == 0 && k > 40)) return out;
    prev = piece;
  }
  // still accumulating after max_decades: nothing converged
  out.divergent = prev > 1e-12 * out.value;
  return out;
}

// int_a^b h(r) dr; panels spanning decades away from 0 are integrated in log r
double panel(const std::function<double(double)>& h, double a, double b) {
  if (a == 0 || b <= 10 * a) return integrate<double>(h, a, b, 1e-10, 8);
  const double ln10 = std::log(10.0);
  double sum = 0;
  for (double lo = std::log(a); lo < std::log(b); lo += ln10) {
    const double hi = std::min(lo + ln10, std::log(b));
    sum += integrate<double>(
        [&](double s) {
          const double r = std::exp(s);
          return h(r) * r;
        },
        lo, hi, 1e-11, 8);
  }
  return sum;
}

}  // namespace

double unit_ball_volume(double N) { return sphere_area(N) / N; }

double sphere_fraction_in_ball(double rho, double z, double N) {
  if (z == 0) return rho <= 1 ? 1.0 : 0.0;
  if (rho == 0) return z <= 1 ? 1.0 : 0.0;
  const double c = (rho * rho + z * z - 1) / (2 * rho * z);
  if (c <= -1) return 1.0;
  if (c >= 1) return 0.0;
  const double half = 0.5 * boost::math::ibeta((N - 1) / 2, 0.5, 1 - c * c);
  return c >= 0 ? half : 1 - half;
}

UlNormResult ul_norm(const RadialIntegrand& u, double N, double gamma, const UlNormOptions& opts) {
  if (!(gamma >= 1)) throw DomainError("ul_norm: gamma must be at least 1");
  const double area = sphere_area(N);
  UlNormResult res;
  res.gamma = gamma;
  res.centers = opts.centers;

  auto power_of = [&](double r) { return std::pow(std::abs(u.g(r)), gamma); };

  for (double z : opts.centers) {
    auto h = [&](double r) { return power_of(r) * std::pow(r, N - 1) * sphere_fraction_in_ball(r, z, N); };
    const double lo = std::max(0.0, z - 1), hi = z + 1;
    std::vector<double> pts{lo, hi, std::abs(1 - z)};
    for (double b : u.breakpoints) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double p) { return p < lo || p > hi; }), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double total = 0;
    bool divergent = false;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double a = pts[k], b = pts[k + 1];
      if (b - a <= 1e-15 * b) continue;
      if (a == 0 && u.singular_at_origin) {
        const OriginPanel p = origin_panel(h, b, opts);
        total += p.value;
        divergent = divergent || p.divergent;
      } else if (u.smooth_between_breakpoints && b <= 10 * a) {
        total += integrate_panel<double>(h, a, b);
      } else {
        total += panel(h, a, b);
      }
    }
    if (divergent) {
      res.divergent = true;
      res.ball_integrals.push_back(std::numeric_limits<double>::infinity());
    } else {
      res.ball_integrals.push_back(area * total);
    }
  }

  const auto it = std::max_element(res.ball_integrals.begin(), res.ball_integrals.end());
  res.achieving_center = opts.centers[static_cast<std::size_t>(it - res.ball_integrals.begin())];
  res.value = res.divergent ? std::numeric_limits<double>::infinity() : std::pow(*it, 1 / gamma);
  const double at_origin = res.ball_integrals.front();
  res.origin_is_max = opts.centers.front() == 0 && at_origin >= *it * (1 - 1e-9);

  for (double c : opts.cutoffs) {
    const double ln10 = std::log(10.0);
    double sum = 0;
    for (double hi = 0; hi > std::log(c) + 1e-12; hi -= ln10) {
      const double lo = std::max(hi - ln10, std::log(c));
      sum += integrate<double>(
          [&](double s) {
            const double r = std::exp(s);
            return power_of(r) * std::pow(r, N);
          },
          lo, hi, 1e-11, 8);
    }
    res.cutoff_values.push_back(std::pow(area * sum, 1 / gamma));
  }
  return res;
}

UlNormResult ul_norm(const RadialField& u, double gamma, const UlNormOptions& opts) {
  RadialIntegrand in;
  in.g = [&u](double r) { return u(r); };
  const double r_end = opts.centers.empty() ? 1 : opts.centers.back() + 1;
  for (Eigen::Index i = 1; i < u.values.size() && u.grid->r()[i] <= r_end; ++i) in.breakpoints.push_back(u.grid->r()[i]);
  in.smooth_between_breakpoints = true;
  return ul_norm(in, u.grid->N(), gamma, opts);
}

UlNormResult ul_norm(const RadialProfile& u, double gamma, const UlNormOptions& opts) {
  RadialIntegrand in;
  in.g = [&u](double r) { return u.u_at(r); };
  in.breakpoints = {u.r_lo()};
  in.singular_at_origin = true;
  return ul_norm(in, u.N(), gamma, opts);
}

RadialIntegrand difference_integrand(const RadialField& u, const RadialProfile& reference) {
  const Vector& r = u.grid->r();
  const Eigen::Index n = u.values.size();
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  // nodes beyond the profile range are treated as coinciding with it
  for (Eigen::Index i = 1; i < n && r[i] <= reference.r_hi(); ++i)
    d[static_cast<std::size_t>(i)] = reference.u_at(r[i]) - u.values[i];
  RadialIntegrand in;
  const double r1 = r[1], u0 = u.values[0], u1 = u.values[1];
  in.g = [&u, &reference, d = std::move(d), r1, u0, u1, n](double x) {
    if (x < r1) return std::abs(reference.u_at(x) - (u0 + (u1 - u0) * x / r1));
    const Vector& rr = u.grid->r();
    const auto* it = std::upper_bound(rr.data(), rr.data() + n, x);
    const Eigen::Index i = std::min<Eigen::Index>(it - rr.data(), n - 1);
    if (x >= rr[n - 1]) return std::abs(d[static_cast<std::size_t>(n - 1)]);
    const double w = (x - rr[i - 1]) / (rr[i] - rr[i - 1]);
    return std::abs((1 - w) * d[static_cast<std::size_t>(i - 1)] + w * d[static_cast<std::size_t>(i)]);
  };
  for (Eigen::Index i = 1; i < n && r[i] <= 5; ++i) in.breakpoints.push_back(r[i]);
  in.singular_at_origin = true;
  in.smooth_between_breakpoints = true;
  return in;
}

ConvergenceTable convergence_report(const std::vector<RadialField>& trajectory, const RadialProfile& reference,
                                    const std::vector<double>& gammas, const UlNormOptions& opts) {
  ConvergenceTable tab;
  tab.gammas = gammas;
  std::vector<std::size_t> order(trajectory.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return trajectory[a].time > trajectory[b].time; });
  for (double g : gammas) {
    bool dec = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t idx : order) {
      const RadialField& u = trajectory[idx];
      const double dist = ul_norm(difference_integrand(u, reference), u.grid->N(), g, opts).value;
      tab.entries.push_back({u.time, g, dist});
      dec = dec && dist < prev;
      prev = dist;
    }
    tab.decreasing.push_back(dec);
  }
  return tab;
}

nlohmann::json UlNormResult::to_json() const {
  nlohmann::json j;
  j["gamma"] = gamma;
  j["value"] = divergent ? nlohmann::json("inf") : nlohmann::json(value);
  j["divergent"] = divergent;
  j["achieving_center_radius"] = achieving_center;
  j["origin_is_max"] = origin_is_max;
  j["centers"] = centers;
  nlohmann::json balls = nlohmann::json::array();
  for (double b : ball_integrals) balls.push_back(std::isfinite(b) ? nlohmann::json(b) : nlohmann::json("inf"));
  j["ball_integrals"] = balls;
  j["cutoff_values"] = cutoff_values;
  return j;
}

nlohmann::json ConvergenceTable::to_json() const {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) j["entries"].push_back({{"t", e.t}, {"gamma", e.gamma}, {"distance", e.distance}});
  j["gammas"] = gammas;
  j["decreasing"] = decreasing;
  return j;
}

}  // namespace nonuniq
