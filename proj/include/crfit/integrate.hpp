// Copyright 2026 The crfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "crfit/errors.hpp"

namespace crfit {

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0; // 0 chooses a starting step automatically
  long long max_steps = 10000000;
};

struct IntegrateStats {
  long long accepted = 0;
  long long rejected = 0;
  long long rhs_evals = 0;
};

/// One accepted step of the embedded 5(4) pair together with its quartic
/// interpolant. eval reproduces the continuous extension anywhere inside
/// [t0, t0 + h] (h is signed) to the accuracy of the step itself.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Eigen::VectorXcd r1, r2, r3, r4, r5;

  void eval(double t, Eigen::VectorXcd& out) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    out = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

/// Ordered collection of dense steps spanning one forward integration.
class DenseSpan {
 public:
  void clear() { steps_.clear(); }
  bool empty() const { return steps_.empty(); }
  std::size_t size() const { return steps_.size(); }
  const DenseStep& step(std::size_t i) const { return steps_[i]; }
  void add(DenseStep step) { steps_.push_back(std::move(step)); }

  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t0 + steps_.back().h; }

  bool covers(double t) const {
    if (steps_.empty()) return false;
    const double a = t_begin(), b = t_end();
    const double pad = 1e-9 * (1.0 + std::abs(b - a));
    return t >= std::min(a, b) - pad && t <= std::max(a, b) + pad;
  }

  /// Steps are stored with ascending t0 (forward spans only).
  void eval(double t, Eigen::VectorXcd& out) const {
    if (steps_.empty()) throw NumericalError("dense span: empty");
    std::size_t lo = 0, hi = steps_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (steps_[mid].t0 <= t)
        lo = mid;
      else
        hi = mid;
    }
    steps_[lo].eval(t, out);
  }

 private:
  std::vector<DenseStep> steps_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                        kC5 = 8.0 / 9.0;
inline constexpr double kA21 = 1.0 / 5.0;
inline constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
inline constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0,
                        kA43 = 32.0 / 9.0;
inline constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                        kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
inline constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                        kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                        kA65 = -5103.0 / 18656.0;
inline constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0,
                        kA74 = 125.0 / 192.0, kA75 = -2187.0 / 6784.0,
                        kA76 = 11.0 / 84.0;
// Difference between the 5th and 4th order weights.
inline constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                        kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                        kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
// Weights of the dense-output quartic.
inline constexpr double kD1 = -12715105075.0 / 11282082432.0,
                        kD3 = 87487479700.0 / 32700410799.0,
                        kD4 = -10690763975.0 / 1880347072.0,
                        kD5 = 701980252875.0 / 199316789632.0,
                        kD6 = -1453857185.0 / 822651844.0,
                        kD7 = 69997945.0 / 29380423.0;
// Step controller (PI form).
inline constexpr double kSafe = 0.9, kBeta = 0.04;
inline constexpr double kExpo1 = 0.2 - kBeta * 0.75;
inline constexpr double kFacc1 = 5.0;  // max shrink is h/5 per retry
inline constexpr double kFacc2 = 0.1;  // max growth is 10h per step

inline double error_norm(const Eigen::VectorXcd& err, const Eigen::VectorXcd& y,
                         const Eigen::VectorXcd& ynew, double atol,
                         double rtol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc =
        atol + rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
    const double e = std::abs(err(i)) / sc;
    acc += e * e;
  }
  return std::sqrt(acc / double(err.size()));
}

template <class Rhs>
double initial_step_guess(Rhs&& rhs, double t, const Eigen::VectorXcd& y,
                          const Eigen::VectorXcd& k1, double dir, double hmax,
                          double atol, double rtol, IntegrateStats& st) {
  double dnf = 0.0, dny = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = atol + rtol * std::abs(y(i));
    const double f = std::abs(k1(i)) / sc;
    const double v = std::abs(y(i)) / sc;
    dnf += f * f;
    dny += v * v;
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  Eigen::VectorXcd y1 = y + (dir * h) * k1;
  Eigen::VectorXcd k2(y.size());
  rhs(t + dir * h, y1, k2);
  ++st.rhs_evals;
  double der2 = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = atol + rtol * std::abs(y(i));
    const double d = std::abs(k2(i) - k1(i)) / sc;
    der2 += d * d;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                     : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, hmax});
}

}  // namespace detail

/// Adaptive Dormand-Prince integration of y' = f(t, y) from t0 to t1
/// (either direction). y is updated in place. on_step(step, y_new) is
/// invoked for every accepted step when want_dense is true; the DenseStep
/// then carries the continuous extension over that step.
template <class Rhs, class StepCallback>
void integrate_core(Rhs&& rhs, double t0, double t1, Eigen::VectorXcd& y,
                    const IntegratorOptions& opt, IntegrateStats& st,
                    bool want_dense, StepCallback&& on_step) {
  const double span = std::abs(t1 - t0);
  if (span == 0.0) return;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const Eigen::Index n = y.size();

  Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  Eigen::VectorXcd ytmp(n), ynew(n), yerr(n);
  DenseStep step;

  rhs(t0, y, k1);
  ++st.rhs_evals;

  const double hmax = std::min(opt.max_step, span);
  double h = (opt.initial_step > 0.0)
                 ? std::min(opt.initial_step, hmax)
                 : detail::initial_step_guess(rhs, t0, y, k1, dir, hmax,
                                              opt.abs_tol, opt.rel_tol, st);

  double t = t0;
  double facold = 1e-4;
  bool rejected = false;
  bool nonfinite_seen = false;
  long long steps_taken = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++steps_taken > opt.max_steps) {
      std::ostringstream os;
      os << "integrate: more than " << opt.max_steps << " steps at t = " << t
         << "; the problem appears stiff for this tolerance";
      throw NumericalError(os.str());
    }
    const double remaining = std::abs(t1 - t);
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    if (h < 1e-14 * std::max(std::abs(t), span)) {
      std::ostringstream os;
      if (nonfinite_seen)
        os << "integrate: solution blew up near t = " << t
           << " (non-finite values); reduce the correction magnitude or the "
              "learning rate";
      else
        os << "integrate: step size underflow at t = " << t
           << "; the problem appears stiff for this tolerance";
      throw NumericalError(os.str());
    }
    const double hs = dir * h;

    ytmp = y + hs * (detail::kA21 * k1);
    rhs(t + detail::kC2 * hs, ytmp, k2);
    ytmp = y + hs * (detail::kA31 * k1 + detail::kA32 * k2);
    rhs(t + detail::kC3 * hs, ytmp, k3);
    ytmp = y + hs * (detail::kA41 * k1 + detail::kA42 * k2 + detail::kA43 * k3);
    rhs(t + detail::kC4 * hs, ytmp, k4);
    ytmp = y + hs * (detail::kA51 * k1 + detail::kA52 * k2 +
                     detail::kA53 * k3 + detail::kA54 * k4);
    rhs(t + detail::kC5 * hs, ytmp, k5);
    ytmp = y + hs * (detail::kA61 * k1 + detail::kA62 * k2 +
                     detail::kA63 * k3 + detail::kA64 * k4 + detail::kA65 * k5);
    rhs(t + hs, ytmp, k6);
    ynew = y + hs * (detail::kA71 * k1 + detail::kA73 * k3 +
                     detail::kA74 * k4 + detail::kA75 * k5 + detail::kA76 * k6);
    rhs(t + hs, ynew, k7);
    st.rhs_evals += 6;
    yerr = hs * (detail::kE1 * k1 + detail::kE3 * k3 + detail::kE4 * k4 +
                 detail::kE5 * k5 + detail::kE6 * k6 + detail::kE7 * k7);

    const bool finite = ynew.allFinite() && yerr.allFinite();
    const double err =
        finite ? detail::error_norm(yerr, y, ynew, opt.abs_tol, opt.rel_tol)
               : 10.0;
    if (!finite) nonfinite_seen = true;

    const double fac11 = std::pow(err, detail::kExpo1);
    if (err <= 1.0) {
      // Accept. fac uses the error of the previous accepted step (PI form).
      const double fac = fac11 / std::pow(facold, detail::kBeta);
      facold = std::max(err, 1e-4);
      double hnew =
          h / std::clamp(fac / detail::kSafe, detail::kFacc2, detail::kFacc1);
      if (want_dense) {
        step.t0 = t;
        step.h = hs;
        step.r1 = y;
        step.r2 = ynew - y;
        step.r3 = hs * k1 - step.r2;
        step.r4 = step.r2 - hs * k7 - step.r3;
        step.r5 = hs * (detail::kD1 * k1 + detail::kD3 * k3 +
                        detail::kD4 * k4 + detail::kD5 * k5 +
                        detail::kD6 * k6 + detail::kD7 * k7);
        on_step(step, ynew);
      }
      ++st.accepted;
      if (rejected) hnew = std::min(hnew, h);
      rejected = false;
      t = last ? t1 : t + hs;
      y.swap(ynew);
      k1.swap(k7);
      h = std::min(hnew, hmax);
    } else {
      ++st.rejected;
      rejected = true;
      h = h / std::min(detail::kFacc1, fac11 / detail::kSafe);
    }
  }
}

namespace detail {
struct NullStep {
  void operator()(const DenseStep&, const Eigen::VectorXcd&) const {}
};
}  // namespace detail

template <class Rhs>
void integrate(Rhs&& rhs, double t0, double t1, Eigen::VectorXcd& y,
               const IntegratorOptions& opt = {},
               IntegrateStats* stats = nullptr) {
  IntegrateStats local;
  IntegrateStats& st = stats ? *stats : local;
  integrate_core(std::forward<Rhs>(rhs), t0, t1, y, opt, st, false,
                 detail::NullStep{});
}

template <class Rhs>
void integrate_dense(Rhs&& rhs, double t0, double t1, Eigen::VectorXcd& y,
                     DenseSpan& span, const IntegratorOptions& opt = {},
                     IntegrateStats* stats = nullptr) {
  IntegrateStats local;
  IntegrateStats& st = stats ? *stats : local;
  integrate_core(
      std::forward<Rhs>(rhs), t0, t1, y, opt, st, true,
      [&span](const DenseStep& s, const Eigen::VectorXcd&) { span.add(s); });
}

/// Recorded forward solution, replayable at arbitrary times for the adjoint
/// sweep. While the accepted-step count stays below store_limit the full
/// dense output is kept; beyond that the recorder falls back to sparse
/// checkpoints and transparently re-integrates one checkpoint window at a
/// time on demand. The right-hand side object passed to record must outlive
/// the trajectory: replays call back into it.
class ForwardTrajectory {
 public:
  using RhsFn =
      std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

  /// breakpoints: interior times (ascending) where the right-hand side has a
  /// kink; integration restarts there and replay windows never straddle one.
  template <class Rhs>
  static ForwardTrajectory record(Rhs& rhs, double t0, double t1,
                                  const Eigen::VectorXcd& y0,
                                  const IntegratorOptions& opt,
                                  std::size_t store_limit,
                                  const std::vector<double>& breakpoints = {},
                                  IntegrateStats* stats = nullptr) {
    if (!(t1 > t0)) throw NumericalError("trajectory: t1 must exceed t0");
    ForwardTrajectory traj;
    traj.opt_ = opt;
    traj.store_limit_ = std::max<std::size_t>(store_limit, 4);
    traj.rhs_ = [&rhs](double t, const Eigen::VectorXcd& y,
                       Eigen::VectorXcd& dydt) { rhs(t, y, dydt); };
    traj.t0_ = t0;
    traj.t1_ = t1;

    std::vector<double> edges;
    edges.push_back(t0);
    for (double b : breakpoints)
      if (b > t0 && b < t1) edges.push_back(b);
    edges.push_back(t1);

    IntegrateStats local;
    IntegrateStats& st = stats ? *stats : local;
    Eigen::VectorXcd y = y0;
    traj.push_checkpoint(t0, y, true);
    for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
      integrate_core(rhs, edges[seg], edges[seg + 1], y, opt, st, true,
                     [&traj](const DenseStep& s, const Eigen::VectorXcd& yn) {
                       traj.on_step(s, yn);
                     });
      traj.push_checkpoint(edges[seg + 1], y, true);
    }
    traj.final_ = y;
    return traj;
  }

  const Eigen::VectorXcd& final_state() const { return final_; }
  double t_begin() const { return t0_; }
  double t_end() const { return t1_; }
  bool dense_mode() const { return dense_mode_; }

  void eval(double t, Eigen::VectorXcd& out) const {
    t = std::clamp(t, t0_, t1_);
    if (dense_mode_) {
      dense_.eval(t, out);
      return;
    }
    if (cache_a_.covers(t)) {
      cache_a_.eval(t, out);
      return;
    }
    if (cache_b_.covers(t)) {
      cache_b_.eval(t, out);
      return;
    }
    replay_window(t);
    cache_a_.eval(t, out);
  }

 private:
  struct Checkpoint {
    double t;
    Eigen::VectorXcd y;
    bool edge; // segment boundary; kept through thinning
  };

  void on_step(const DenseStep& s, const Eigen::VectorXcd& ynew) {
    if (dense_mode_) {
      dense_.add(s);
      if (dense_.size() > store_limit_) demote_to_checkpoints();
      return;
    }
    if (++steps_since_checkpoint_ >= checkpoint_stride_) {
      push_checkpoint(s.t0 + s.h, ynew, false);
      steps_since_checkpoint_ = 0;
      if (checkpoints_.size() > store_limit_) thin_checkpoints();
    }
  }

  void push_checkpoint(double t, const Eigen::VectorXcd& y, bool edge) {
    if (!checkpoints_.empty() && std::abs(checkpoints_.back().t - t) < 1e-12) {
      checkpoints_.back().edge = checkpoints_.back().edge || edge;
      return;
    }
    checkpoints_.push_back({t, y, edge});
  }

  /// Convert the dense record accumulated so far into sparse checkpoints
  /// (state at the start of every stride-th step) and keep recording in
  /// checkpoint mode.
  void demote_to_checkpoints() {
    dense_mode_ = false;
    std::vector<Checkpoint> edges;
    edges.swap(checkpoints_);
    for (std::size_t idx = 0; idx < dense_.size();
         idx += checkpoint_stride_)
      checkpoints_.push_back({dense_.step(idx).t0, dense_.step(idx).r1, false});
    for (auto& cp : edges) {
      bool merged = false;
      for (auto& existing : checkpoints_)
        if (std::abs(existing.t - cp.t) < 1e-12) {
          existing.edge = existing.edge || cp.edge;
          merged = true;
          break;
        }
      if (!merged) checkpoints_.push_back(std::move(cp));
    }
    std::sort(checkpoints_.begin(), checkpoints_.end(),
              [](const Checkpoint& a, const Checkpoint& b) { return a.t < b.t; });
    steps_since_checkpoint_ = dense_.size() % checkpoint_stride_;
    dense_.clear();
  }

  /// Drop every other interior checkpoint; segment edges always survive.
  void thin_checkpoints() {
    checkpoint_stride_ *= 2;
    std::vector<Checkpoint> kept;
    kept.reserve(checkpoints_.size() / 2 + 2);
    bool drop = false;
    for (auto& cp : checkpoints_) {
      if (cp.edge) {
        kept.push_back(std::move(cp));
        drop = false;
        continue;
      }
      if (!drop) kept.push_back(std::move(cp));
      drop = !drop;
    }
    checkpoints_.swap(kept);
  }

  void replay_window(double t) const {
    // Window = consecutive checkpoints around t; never straddles an envelope
    // kink because segment edges are themselves checkpoints.
    std::size_t lo = 0, hi = checkpoints_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (checkpoints_[mid].t <= t)
        lo = mid;
      else
        hi = mid;
    }
    if (lo + 1 >= checkpoints_.size()) lo = checkpoints_.size() - 2;
    Eigen::VectorXcd y = checkpoints_[lo].y;
    cache_b_ = std::move(cache_a_);
    cache_a_ = DenseSpan();
    IntegrateStats st;
    integrate_core(rhs_, checkpoints_[lo].t, checkpoints_[lo + 1].t, y, opt_,
                   st, true,
                   [this](const DenseStep& s, const Eigen::VectorXcd&) {
                     cache_a_.add(s);
                   });
  }

  bool dense_mode_ = true;
  DenseSpan dense_;
  std::vector<Checkpoint> checkpoints_;
  std::size_t store_limit_ = 0;
  std::size_t checkpoint_stride_ = 64;
  std::size_t steps_since_checkpoint_ = 0;
  RhsFn rhs_;
  IntegratorOptions opt_;
  double t0_ = 0.0, t1_ = 0.0;
  Eigen::VectorXcd final_;
  mutable DenseSpan cache_a_, cache_b_;
};

}  // namespace crfit
