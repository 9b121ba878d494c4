#include "nonuniq/radial_grid.hpp"

#include "nonuniq/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace nonuniq {

RadialGrid::RadialGrid(double N, const GridSpec& spec, FarField far) : N_(N), spec_(spec), far_(far) {
  if (!(spec.h0 > 0 && spec.ratio >= 1 && spec.dr_max >= spec.h0 && spec.R > 2 * spec.h0))
    throw DomainError("RadialGrid: inconsistent grid spec");
  std::vector<double> nodes{0.0};
  double dr = spec.h0;
  while (nodes.back() + 1.5 * dr < spec.R) {
    nodes.push_back(nodes.back() + dr);
    dr = std::min(dr * spec.ratio, spec.dr_max);
  }
  nodes.push_back(spec.R);

  // the absorbing end node carries the Dirichlet value and is not an unknown
  const int n = static_cast<int>(nodes.size()) - (far == FarField::absorbing ? 1 : 0);
  r_ = Eigen::Map<const Vector>(nodes.data(), n);
  faces_.assign(n + 1, 0.0);
  for (int i = 1; i <= n; ++i)
    faces_[i] = i < static_cast<int>(nodes.size()) ? 0.5 * (nodes[i - 1] + nodes[i]) : spec.R;

  vol_.resize(n);
  for (int i = 0; i < n; ++i) vol_[i] = (std::pow(faces_[i + 1], N) - std::pow(faces_[i], N)) / N;

  kd_ = Vector::Zero(n);
  ko_ = Vector::Zero(n > 0 ? n - 1 : 0);
  for (int i = 0; i + 1 < static_cast<int>(nodes.size()); ++i) {
    const double c = std::pow(faces_[i + 1], N - 1) / (nodes[i + 1] - nodes[i]);
    kd_[i] -= c;
    if (i + 1 < n) {
      kd_[i + 1] -= c;
      ko_[i] = c;
    }
  }
}

Vector RadialGrid::laplacian(const Vector& u) const {
  const int n = size();
  Vector out = kd_.cwiseProduct(u);
  for (int i = 0; i + 1 < n; ++i) {
    out[i] += ko_[i] * u[i + 1];
    out[i + 1] += ko_[i] * u[i];
  }
  return out.cwiseQuotient(vol_);
}

double RadialField::operator()(double x) const {
  const Vector& r = grid->r();
  const Eigen::Index n = values.size();
  if (x <= 0) return values[0];
  if (x >= r[n - 1]) {
    if (grid->far_field() == FarField::reflecting) return values[n - 1];
    const double R = grid->spec().R;
    return x >= R ? 0.0 : values[n - 1] * (R - x) / (R - r[n - 1]);
  }
  const Eigen::Index i = std::upper_bound(r.data(), r.data() + n, x) - r.data();
  const double w = (x - r[i - 1]) / (r[i] - r[i - 1]);
  return (1 - w) * values[i - 1] + w * values[i];
}

double radial_integral(const std::function<double(double)>& g, double a, double b, double N) {
  if (b <= a) return 0.0;
  auto plain = [&](double lo, double hi) {
    return integrate<double>([&](double r) { return g(r) * std::pow(r, N - 1); }, lo, hi, 1e-11, 10);
  };
  if (a > 0) return plain(a, b);
  // decades toward the origin in s = log r, integrand g r^N
  const double ln10 = std::log(10.0);
  double sum = 0;
  int quiet = 0;
  for (int k = 0; k < 320; ++k) {
    const double hi = std::log(b) - k * ln10;
    const double piece = integrate<double>(
        [&](double s) {
          const double r = std::exp(s);
          return g(r) * std::pow(r, N);
        },
        hi - ln10, hi, 1e-11, 8);
    sum += piece;
    quiet = std::abs(piece) <= 1e-15 * std::abs(sum) ? quiet + 1 : 0;
    if (quiet >= 2 || (sum == 0 && k > 40)) break;
  }
  return sum;
}

double RadialGrid::cell_average(const std::function<double(double)>& g, int i,
                                std::optional<double> split) const {
  const double lo = faces_[i], hi = faces_[i + 1];
  double total;
  if (split && *split > lo && *split < hi)
    total = radial_integral(g, lo, *split, N_) + radial_integral(g, *split, hi, N_);
  else
    total = radial_integral(g, lo, hi, N_);
  return total / vol_[i];
}

double RadialGrid::inner(const Vector& a, const Vector& b) const {
  return (vol_.array() * a.array() * b.array()).sum();
}

RadialGrid RadialGrid::refined() const {
  GridSpec s = spec_;
  s.h0 /= 2;
  s.dr_max /= 2;
  s.ratio = std::sqrt(s.ratio);
  return RadialGrid(N_, s, far_);
}

EtdWeights etd_weights(double z) {
  if (std::abs(z) < 1e-2) {
    // series: left = sum (k+1) z^k/(k+2)!, right = sum z^k/(k+2)!
    double left = 0, right = 0, zk = 1, fact = 2;
    for (int k = 0; k < 10; ++k) {
      left += (k + 1) * zk / fact;
      right += zk / fact;
      zk *= z;
      fact *= k + 3;
    }
    return {std::exp(z), left, right};
  }
  const double e = std::exp(z), em1 = std::expm1(z);
  return {e, (z * e - em1) / (z * z), (em1 - z) / (z * z)};
}

HeatPropagator::HeatPropagator(std::shared_ptr<const RadialGrid> grid) : grid_(std::move(grid)) {
  const RadialGrid& g = *grid_;
  sqrt_vol_ = g.volumes().cwiseSqrt();
  const int n = g.size();
  Vector diag = g.k_diag().cwiseQuotient(g.volumes());
  Vector sub(n - 1);
  for (int i = 0; i + 1 < n; ++i) sub[i] = g.k_off()[i] / (sqrt_vol_[i] * sqrt_vol_[i + 1]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("HeatPropagator: eigen-decomposition failed");
  lambda_ = es.eigenvalues();
  Q_ = es.eigenvectors();
}

Vector HeatPropagator::to_modes(const Vector& u) const {
  return Q_.transpose() * u.cwiseProduct(sqrt_vol_);
}

Vector HeatPropagator::from_modes(const Vector& m) const { return (Q_ * m).cwiseQuotient(sqrt_vol_); }

Vector HeatPropagator::apply(const Vector& u, double tau) const {
  Vector m = to_modes(u);
  m.array() *= (tau * lambda_.array()).exp();
  return from_modes(m);
}

HeatPropagator::StepWeights HeatPropagator::weights(double h) const {
  StepWeights w{h, Vector(lambda_.size()), Vector(lambda_.size()), Vector(lambda_.size())};
  for (Eigen::Index k = 0; k < lambda_.size(); ++k) {
    const EtdWeights e = etd_weights(h * lambda_[k]);
    w.decay[k] = e.decay;
    w.left[k] = h * e.left;
    w.right[k] = h * e.right;
  }
  return w;
}

Vector HeatPropagator::step_modes(const Vector& m, const Vector& g0, const Vector& g1,
                                  const StepWeights& w) const {
  return w.decay.cwiseProduct(m) + w.left.cwiseProduct(g0) + w.right.cwiseProduct(g1);
}

}  // namespace nonuniq
