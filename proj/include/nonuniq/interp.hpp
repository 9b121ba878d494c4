#pragma once

#include "nonuniq/common.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace nonuniq {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
template <typename Scalar>
class Pchip {
 public:
  Pchip() = default;

  Pchip(std::vector<Scalar> x, std::vector<Scalar> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("pchip needs at least two matching points");
    d_.assign(n, Scalar(0));
    std::vector<Scalar> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0)) throw DomainError("pchip abscissae must increase");
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0) {
        d_[i] = 0;
      } else {
        const Scalar w1 = 2 * h[i] + h[i - 1];
        const Scalar w2 = h[i] + 2 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  Scalar front() const { return x_.front(); }
  Scalar back() const { return x_.back(); }

  Scalar operator()(Scalar t) const {
    const std::size_t i = interval(t);
    const Scalar h = x_[i + 1] - x_[i];
    const Scalar s = (t - x_[i]) / h;
    const Scalar h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const Scalar h10 = s * (1 - s) * (1 - s);
    const Scalar h01 = s * s * (3 - 2 * s);
    const Scalar h11 = s * s * (s - 1);
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
  }

  Scalar derivative(Scalar t) const {
    const std::size_t i = interval(t);
    const Scalar h = x_[i + 1] - x_[i];
    const Scalar s = (t - x_[i]) / h;
    const Scalar dh00 = 6 * s * (s - 1) / h;
    const Scalar dh10 = (1 - s) * (1 - 3 * s);
    const Scalar dh01 = -dh00;
    const Scalar dh11 = s * (3 * s - 2);
    return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
  }

 private:
  static Scalar end_slope(Scalar h0, Scalar h1, Scalar del0, Scalar del1) {
    Scalar d = ((2 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= 0) return 0;
    if (del0 * del1 <= 0 && std::abs(d) > std::abs(3 * del0)) return 3 * del0;
    return d;
  }

  std::size_t interval(Scalar t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
  }

  std::vector<Scalar> x_, y_, d_;
};

}  // namespace nonuniq
