#pragma once

// Dormand-Prince 5(4) with the standard continuous extension of order 4.

#include "nonuniq/common.hpp"

#include <Eigen/Core>
#include <Eigen/LU>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace nonuniq {

template <typename Scalar>
struct OdeOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(1e-14);
  Scalar initial_step = Scalar(0);  // 0 selects automatically
  Scalar max_step = std::numeric_limits<Scalar>::infinity();
  std::int64_t max_steps = 1'000'000;
};

/// One accepted step with the coefficients of its interpolating polynomial.
template <typename Scalar, int Dim>
struct DenseSegment {
  using State = Eigen::Matrix<Scalar, Dim, 1>;
  Scalar t0;
  Scalar h;
  State c1, c2, c3, c4, c5;

  State operator()(Scalar t) const {
    const Scalar th = (t - t0) / h;
    const Scalar th1 = Scalar(1) - th;
    return c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)));
  }

  /// Time derivative of the interpolant.
  State derivative(Scalar t) const {
    const Scalar th = (t - t0) / h;
    const Scalar th1 = Scalar(1) - th;
    const State a = c4 + th1 * c5;
    const State b = c3 + th * a;
    const State c = c2 + th1 * b;
    const State db = a - th * c5;
    const State dc = th1 * db - b;
    return (c + th * dc) / h;
  }
};

enum class OdeStatus { completed, event, stopped, step_underflow, max_steps };

/// Piecewise polynomial solution of an initial value problem.
template <typename Scalar, int Dim>
class DenseTrajectory {
 public:
  using State = Eigen::Matrix<Scalar, Dim, 1>;
  using Segment = DenseSegment<Scalar, Dim>;

  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  const std::vector<Segment>& segments() const { return segments_; }

  Scalar t_begin() const { return segments_.front().t0; }
  Scalar t_end() const { return t_end_; }
  const State& final_state() const { return y_end_; }

  /// Evaluates the interpolant; t is clamped to the covered interval.
  State operator()(Scalar t) const {
    const Scalar forward = segments_.front().h > 0 ? Scalar(1) : Scalar(-1);
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), t,
        [forward](Scalar value, const Segment& s) { return forward * value < forward * s.t0; });
    if (it != segments_.begin()) --it;
    return (*it)(t);
  }

  State derivative(Scalar t) const { return segment_at(t).derivative(t); }

  const Segment& segment_at(Scalar t) const {
    const Scalar forward = segments_.front().h > 0 ? Scalar(1) : Scalar(-1);
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), t,
        [forward](Scalar value, const Segment& s) { return forward * value < forward * s.t0; });
    if (it != segments_.begin()) --it;
    return *it;
  }

  /// Grid of accepted step endpoints, including the initial point.
  std::vector<Scalar> step_points() const {
    std::vector<Scalar> pts;
    pts.reserve(segments_.size() + 1);
    for (const auto& s : segments_) pts.push_back(s.t0);
    pts.push_back(t_end_);
    return pts;
  }

  OdeStatus status = OdeStatus::completed;

 private:
  template <typename S, int D>
  friend class DormandPrince;

  std::vector<Segment> segments_;
  Scalar t_end_{};
  State y_end_;
};

/// Adaptive Dormand-Prince 5(4) integrator.
///
/// The optional event function is monitored for sign changes; its first root
/// terminates the integration and is located on the dense output. The optional
/// stop predicate rejects states that must not be stepped over (for example a
/// solution that has left the domain of the right-hand side).
template <typename Scalar, int Dim>
class DormandPrince {
 public:
  using State = Eigen::Matrix<Scalar, Dim, 1>;
  using Rhs = std::function<State(Scalar, const State&)>;
  using EventFn = std::function<Scalar(Scalar, const State&)>;
  using StopFn = std::function<bool(Scalar, const State&)>;

  explicit DormandPrince(OdeOptions<Scalar> opts = {}) : opts_(opts) {}

  DenseTrajectory<Scalar, Dim> integrate(const Rhs& rhs, Scalar t0, const State& y0, Scalar t1,
                                         const EventFn& event = {},
                                         const StopFn& stop = {}) const {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;

    static constexpr Scalar a21 = Scalar(1) / 5;
    static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                            a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                            a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                            a65 = Scalar(-5103) / 18656;
    static constexpr Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                            b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
    static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                            c5 = Scalar(8) / 9;
    static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                            e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                            e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
    static constexpr Scalar d1 = Scalar(-12715105075.0L / 11282082432.0L),
                            d3 = Scalar(87487479700.0L / 32700410799.0L),
                            d4 = Scalar(-10690763975.0L / 1880347072.0L),
                            d5 = Scalar(701980252875.0L / 199316789632.0L),
                            d6 = Scalar(-1453857185.0L / 822651844.0L),
                            d7 = Scalar(69997945.0L / 29380423.0L);

    DenseTrajectory<Scalar, Dim> traj;
    const Scalar dir = t1 >= t0 ? Scalar(1) : Scalar(-1);
    const Scalar span = abs(t1 - t0);
    Scalar t = t0;
    State y = y0;
    State k1 = rhs(t, y);
    Scalar h = opts_.initial_step > 0 ? opts_.initial_step : initial_step(rhs, t, y, k1, dir, span);
    h = min(h, min(span, opts_.max_step));
    Scalar ev_prev = event ? event(t, y) : Scalar(0);

    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    Scalar err_old = Scalar(1e-4);
    bool rejected_last = false, stop_rejected = false;
    std::int64_t steps = 0;

    while (dir * (t1 - t) > 0) {
      if (++steps > opts_.max_steps) {
        traj.status = OdeStatus::max_steps;
        break;
      }
      if (h < 10 * eps * abs(t) || h < std::numeric_limits<Scalar>::min()) {
        traj.status = stop_rejected ? OdeStatus::stopped : OdeStatus::step_underflow;
        break;
      }
      const bool last = h >= abs(t1 - t);
      if (last) h = abs(t1 - t);
      const Scalar hs = dir * h;

      const State k2 = rhs(t + c2 * hs, y + hs * (a21 * k1));
      const State k3 = rhs(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      const State k4 = rhs(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      const State k5 = rhs(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Scalar t_new = last ? t1 : t + hs;
      const State y6 = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      const State k6 = rhs(t + hs, y6);
      const State y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = rhs(t_new, y_new);
      const State err_vec = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      Scalar err = 0;
      bool finite = y_new.allFinite() && k7.allFinite();
      if (finite) {
        for (int i = 0; i < y.size(); ++i) {
          const Scalar sc = opts_.atol + opts_.rtol * max(abs(y[i]), abs(y_new[i]));
          err = max(err, abs(err_vec[i]) / sc);
        }
      }
      stop_rejected = finite && stop && stop(t_new, y_new);
      if (stop_rejected) finite = false;

      if (!finite || err > 1) {
        const Scalar fac = finite ? max(Scalar(0.2), Scalar(0.9) * pow(err, Scalar(-0.2))) : Scalar(0.25);
        h *= fac;
        rejected_last = true;
        continue;
      }

      DenseSegment<Scalar, Dim> seg;
      seg.t0 = t;
      seg.h = t_new - t;
      const State ydiff = y_new - y;
      const State bspl = seg.h * k1 - ydiff;
      seg.c1 = y;
      seg.c2 = ydiff;
      seg.c3 = bspl;
      seg.c4 = ydiff - seg.h * k7 - bspl;
      seg.c5 = seg.h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      if (event) {
        const Scalar ev_new = event(t_new, y_new);
        if ((ev_prev < 0) != (ev_new < 0) || ev_new == 0) {
          const Scalar te = locate_event(seg, event, ev_prev);
          const DenseSegment<Scalar, Dim> full = seg;
          seg = truncate(full, te);
          traj.segments_.push_back(seg);
          traj.t_end_ = te;
          traj.y_end_ = full(te);
          traj.status = OdeStatus::event;
          return traj;
        }
        ev_prev = ev_new;
      }

      traj.segments_.push_back(seg);
      t = t_new;
      y = y_new;
      k1 = k7;

      Scalar fac = Scalar(0.9) * pow(max(err, Scalar(1e-10)), Scalar(-0.17)) *
                   pow(err_old, Scalar(0.04));
      fac = std::clamp(fac, Scalar(0.2), Scalar(10));
      if (rejected_last) fac = min(fac, Scalar(1));
      err_old = max(err, Scalar(1e-4));
      rejected_last = false;
      h = min(h * fac, opts_.max_step);
    }

    traj.t_end_ = t;
    traj.y_end_ = y;
    if (traj.segments_.empty()) {
      DenseSegment<Scalar, Dim> seg;
      seg.t0 = t;
      seg.h = dir * eps;
      seg.c1 = y;
      seg.c2 = State::Zero(y.size());
      seg.c3 = seg.c2;
      seg.c4 = seg.c2;
      seg.c5 = seg.c2;
      traj.segments_.push_back(seg);
    }
    return traj;
  }

 private:
  Scalar initial_step(const Rhs& rhs, Scalar t, const State& y, const State& f0, Scalar dir,
                      Scalar span) const {
    using std::abs;
    using std::max;
    using std::min;
    using std::sqrt;
    Scalar d0 = 0, d1 = 0;
    for (int i = 0; i < y.size(); ++i) {
      const Scalar sc = opts_.atol + opts_.rtol * abs(y[i]);
      d0 = max(d0, abs(y[i]) / sc);
      d1 = max(d1, abs(f0[i]) / sc);
    }
    Scalar h0 = (d0 < 1e-5 || d1 < 1e-5) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
    h0 = min(h0, min(span, opts_.max_step));
    State f1 = rhs(t + dir * h0, State(y + dir * h0 * f0));
    for (int k = 0; k < 60 && !f1.allFinite(); ++k) {
      h0 /= 10;
      f1 = rhs(t + dir * h0, State(y + dir * h0 * f0));
    }
    Scalar d2 = 0;
    for (int i = 0; i < y.size(); ++i) {
      const Scalar sc = opts_.atol + opts_.rtol * abs(y[i]);
      d2 = max(d2, abs(f1[i] - f0[i]) / sc);
    }
    d2 /= h0;
    const Scalar dm = max(d1, d2);
    const Scalar h1 = dm <= 1e-15 ? max(Scalar(1e-6), h0 * Scalar(1e-3))
                                  : std::pow(Scalar(0.01) / dm, Scalar(0.2));
    return min(100 * h0, h1);
  }

  static Scalar locate_event(const DenseSegment<Scalar, Dim>& seg, const EventFn& event,
                             Scalar ev_prev) {
    const Scalar ta = seg.t0;
    const Scalar tb = seg.t0 + seg.h;
    auto g = [&](Scalar s) { return event(s, seg(s)); };
    Scalar ga = ev_prev;
    Scalar gb = g(tb);
    if (gb == 0) return tb;
    if ((ga < 0) == (gb < 0)) return tb;
    std::uintmax_t iters = 200;
    auto tol = [](Scalar a, Scalar b) {
      return std::abs(a - b) <= 4 * std::numeric_limits<Scalar>::epsilon() *
                                    std::max(std::abs(a), std::abs(b));
    };
    Scalar lo = std::min(ta, tb), hi = std::max(ta, tb);
    Scalar glo = ta < tb ? ga : gb, ghi = ta < tb ? gb : ga;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    return (r.first + r.second) / 2;
  }

  /// Restriction of a segment to [t0, te], re-expressed in the same basis by
  /// interpolating five samples of the original quartic.
  static DenseSegment<Scalar, Dim> truncate(const DenseSegment<Scalar, Dim>& full, Scalar te) {
    DenseSegment<Scalar, Dim> out;
    out.t0 = full.t0;
    out.h = te - full.t0;
    if (out.h == Scalar(0)) {
      out.h = full.h * std::numeric_limits<Scalar>::epsilon();
    }
    // Values at theta = 0, 1/4, 1/2, 3/4, 1 in the new parameterization.
    State v[5];
    for (int j = 0; j < 5; ++j) v[j] = full(out.t0 + out.h * Scalar(j) / 4);
    // Basis: p(th) = c1 + th*(c2 + (1-th)*(c3 + th*(c4 + (1-th)*c5))).
    // p(0)=c1, p(1)=c1+c2; remaining three from th=1/4,1/2,3/4.
    out.c1 = v[0];
    out.c2 = v[4] - v[0];
    // Residual r(th) = (p - c1 - th*c2) / (th*(1-th)) = c3 + th*c4 + th*(1-th)*c5.
    auto resid = [&](int j) {
      const Scalar th = Scalar(j) / 4;
      return State((v[j] - out.c1 - th * out.c2) / (th * (Scalar(1) - th)));
    };
    const State r1 = resid(1), r2 = resid(2), r3 = resid(3);
    // r(th) = c3 + c4 th + c5 (th - th^2); solve the 3x3 system for each component.
    Eigen::Matrix<Scalar, 3, 3> m;
    for (int j = 1; j <= 3; ++j) {
      const Scalar th = Scalar(j) / 4;
      m(j - 1, 0) = 1;
      m(j - 1, 1) = th;
      m(j - 1, 2) = th - th * th;
    }
    const Eigen::Matrix<Scalar, 3, 3> minv = m.inverse();
    out.c3 = minv(0, 0) * r1 + minv(0, 1) * r2 + minv(0, 2) * r3;
    out.c4 = minv(1, 0) * r1 + minv(1, 1) * r2 + minv(1, 2) * r3;
    out.c5 = minv(2, 0) * r1 + minv(2, 1) * r2 + minv(2, 2) * r3;
    return out;
  }

  OdeOptions<Scalar> opts_;
};

}  // namespace nonuniq
