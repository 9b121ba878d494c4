#pragma once

#include "nonuniq/common.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>

namespace nonuniq {

struct GridSpec {
  double h0 = 1e-4;       ///< first spacing next to the origin
  double ratio = 1.05;    ///< geometric growth of the spacing
  double dr_max = 0.05;   ///< spacing cap, uniform beyond
  double R = 20.0;        ///< domain radius
};

enum class FarField { absorbing, reflecting };

/// Radial node set with finite-volume cells [r_{i-1/2}, r_{i+1/2}] in the
/// r^{N-1} dr measure. The discrete Laplacian is A = V^{-1} K with K symmetric
/// tridiagonal, so A is self-adjoint for the weights V.
class RadialGrid {
 public:
  RadialGrid(double N, const GridSpec& spec, FarField far = FarField::absorbing);

  double N() const { return N_; }
  const GridSpec& spec() const { return spec_; }
  FarField far_field() const { return far_; }
  /// Number of unknowns (the absorbing end node is excluded).
  int size() const { return static_cast<int>(r_.size()); }
  const Vector& r() const { return r_; }
  const Vector& volumes() const { return vol_; }
  double cell_lower(int i) const { return faces_[i]; }
  double cell_upper(int i) const { return faces_[i + 1]; }

  /// K entries: diagonal and first off-diagonal (K(i, i+1)).
  const Vector& k_diag() const { return kd_; }
  const Vector& k_off() const { return ko_; }

  /// A u.
  Vector laplacian(const Vector& u) const;

  /// Average of g over cell i in the r^{N-1} measure; the integrand may be
  /// singular at r = 0 (integrated by decades there) and `split` marks a kink.
  double cell_average(const std::function<double(double)>& g, int i,
                      std::optional<double> split = {}) const;

  /// Weighted inner product sum V_i a_i b_i.
  double inner(const Vector& a, const Vector& b) const;

  /// Same construction with h0 and dr_max halved and the ratio square-rooted.
  RadialGrid refined() const;

 private:
  double N_;
  GridSpec spec_;
  FarField far_;
  Vector r_, vol_, kd_, ko_;
  std::vector<double> faces_;
};

/// Time-stamped grid function.
struct RadialField {
  std::shared_ptr<const RadialGrid> grid;
  Vector values;
  double time = 0;

  /// Piecewise linear in r; zero past the last unknown for an absorbing end.
  double operator()(double r) const;
  double sup() const { return values.maxCoeff(); }
};

/// int_a^b g(r) r^{N-1} dr; for a = 0 the part below b is integrated in log r by decades.
double radial_integral(const std::function<double(double)>& g, double a, double b, double N);

/// phi-function weights for one exponential step of size h with z = lambda h:
/// e^z, the weight of the left source value and the weight of the right one
/// (exact for sources linear in time).
struct EtdWeights {
  double decay, left, right;
};
EtdWeights etd_weights(double z);

/// Exact discrete heat semigroup e^{tau A} from the eigen-decomposition of the
/// symmetrized operator V^{-1/2} K V^{-1/2}.
class HeatPropagator {
 public:
  explicit HeatPropagator(std::shared_ptr<const RadialGrid> grid);

  const RadialGrid& grid() const { return *grid_; }
  std::shared_ptr<const RadialGrid> grid_ptr() const { return grid_; }
  const Vector& eigenvalues() const { return lambda_; }

  Vector to_modes(const Vector& u) const;
  Vector from_modes(const Vector& m) const;

  /// e^{tau A} u.
  Vector apply(const Vector& u, double tau) const;

  /// Per-mode weights of one exponential step of size h (left/right already times h).
  struct StepWeights {
    double h;
    Vector decay, left, right;
  };
  StepWeights weights(double h) const;

  /// decay * m + left * g0 + right * g1, everything in mode coordinates.
  Vector step_modes(const Vector& m, const Vector& g0_modes, const Vector& g1_modes,
                    const StepWeights& w) const;

 private:
  std::shared_ptr<const RadialGrid> grid_;
  Vector lambda_, sqrt_vol_;
  Eigen::MatrixXd Q_;
};

}  // namespace nonuniq
