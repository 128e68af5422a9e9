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

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "crfit/dataio.hpp"
#include "crfit/dynamics.hpp"
#include "crfit/params.hpp"

namespace crfit {

/// Everything needed to score a parameter vector against datapoints: the
/// simulation context, the pulse conventions of the dataset, and the
/// parametrization of the corrections.
struct FitModel {
  SimContext sim;
  double drive_freq_q1 = 0.0;
  double drive_freq_q2 = 0.0;
  int risefall_dt = 32;
  double sigma_dt = 8.0;
  ActiveTerms active;
  double modulation_freq = 0.0;
  bool complex_params = false;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t store_limit = 200000; // dense steps kept before checkpoint mode

  int dim() const { return sim.dim(); }
  int n_params() const { return param_count(dim(), complex_params); }

  PulseSchedule schedule_for(const DataPoint& pt) const {
    PulseSchedule s;
    s.dt_ns = sim.params.dt_ns;
    s.drive_freq_q1 = drive_freq_q1;
    s.drive_freq_q2 = drive_freq_q2;
    s.pulse_q1 = {pt.a1, pt.duration_dt, risefall_dt, sigma_dt};
    s.pulse_q2 = {pt.a2, pt.duration_dt, risefall_dt, sigma_dt};
    return s;
  }

  CorrectionSet corrections(const ParamVector& p) const {
    return params_to_corrections(p, dim(), active, modulation_freq,
                                 complex_params);
  }
};

struct FitModelOptions {
  Frame frame = Frame::rotating;
  ActiveTerms active;
  std::optional<double> modulation_freq; // default: qubit 2 frequency
  bool complex_params = false;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t store_limit = 200000;
};

inline FitModel make_fit_model(const Dataset& ds,
                               const FitModelOptions& opt = {}) {
  FitModel m;
  m.sim = prepare_context(ds.device, opt.frame);
  m.drive_freq_q1 = ds.drive_freq_q1;
  m.drive_freq_q2 = ds.drive_freq_q2;
  m.risefall_dt = ds.risefall_dt;
  m.sigma_dt = ds.sigma_dt;
  m.active = opt.active;
  m.modulation_freq = opt.modulation_freq.value_or(ds.device.omega2);
  m.complex_params = opt.complex_params;
  m.rel_tol = opt.rel_tol;
  m.abs_tol = opt.abs_tol;
  m.store_limit = opt.store_limit;
  return m;
}

namespace detail {

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

/// L1 distance between simulated and observed outcome probabilities plus
/// its derivative with respect to the raw simulated entries. The
/// subgradient at a kink is taken as zero. For normalized points the
/// simulated vector is renormalized over the computational subspace before
/// comparison, and the weights carry the quotient-rule terms.
struct LossTerms {
  double loss = 0.0;
  std::array<double, 4> weight = {0.0, 0.0, 0.0, 0.0}; // dL/dPs_m (raw)
};

inline LossTerms l1_terms(const ProbabilityVector& sim, const DataPoint& pt) {
  LossTerms out;
  const double ps[4] = {sim.p00, sim.p01, sim.p10, sim.p11};
  const double ob[4] = {pt.probs.p00, pt.probs.p01, pt.probs.p10,
                        pt.probs.p11};
  if (!pt.normalized) {
    for (int m = 0; m < 4; ++m) {
      const double d = ps[m] - ob[m];
      out.loss += std::abs(d);
      out.weight[m] = sign(d);
    }
    return out;
  }
  const double S = ps[0] + ps[1] + ps[2] + ps[3];
  if (!(S > 0.0)) {
    for (int m = 0; m < 4; ++m) out.loss += std::abs(ob[m]);
    return out; // flat in this degenerate region; weights stay zero
  }
  double sdot = 0.0;
  double s[4];
  for (int m = 0; m < 4; ++m) {
    const double d = ps[m] / S - ob[m];
    out.loss += std::abs(d);
    s[m] = sign(d);
    sdot += s[m] * ps[m];
  }
  for (int m = 0; m < 4; ++m) out.weight[m] = s[m] / S - sdot / (S * S);
  return out;
}

/// Backward generator: the adjoint obeys the state equation itself
/// (lambda' = -iH lambda for Hermitian H in any frame), augmented with
/// running quadratures d q_k/dt = Re[lambda^+ (-i dH/dp_k) psi] for every
/// parameter of an active block. Sharing one W = conj(lambda_lab)
/// psi_lab^T outer product collapses all quadratures into elementwise
/// reads of W.
class AdjointQuadratureRhs {
 public:
  AdjointQuadratureRhs(SchrodingerRhs& state_rhs, const ForwardTrajectory& traj,
                       const ActiveTerms& active, bool complex_params)
      : rhs_(&state_rhs), traj_(&traj), active_(active),
        complex_(complex_params), dim_(state_rhs.context().dim()) {
    if (active_.m) blocks_.push_back(0);
    if (active_.d1) blocks_.push_back(1);
    if (active_.d2) blocks_.push_back(2);
    const int d = dim_;
    lam_.resize(d);
    dlam_.resize(d);
    psi_.resize(d);
    u_.resize(d);
    lam_lab_.resize(d);
    psi_lab_.resize(d);
    w_.resize(d, d);
  }

  int dim() const { return dim_; }
  int n_quad() const {
    return int(blocks_.size()) * (complex_ ? 2 : 1) * dim_ * dim_;
  }
  int n_total() const { return dim_ + n_quad(); }

  /// Position of block b's quadrature slots inside the augmented vector.
  int quad_offset(int block, bool imag_part) const {
    int pos = 0;
    for (int b : blocks_) {
      if (b == block)
        return dim_ + (pos + (imag_part ? 1 : 0)) * dim_ * dim_;
      pos += complex_ ? 2 : 1;
    }
    throw DimensionError("adjoint: block is not active");
  }

  void operator()(double t, const Eigen::VectorXcd& z, Eigen::VectorXcd& dz) {
    dz.resize(z.size());
    lam_ = z.head(dim_);
    (*rhs_)(t, lam_, dlam_);
    dz.head(dim_) = dlam_;
    dz.tail(n_quad()).setZero();

    traj_->eval(t, psi_);
    if (rhs_->context().frame == Frame::rotating) {
      rhs_->frame_phases(t, u_);
      psi_lab_ = u_.cwiseProduct(psi_);
      lam_lab_ = u_.cwiseProduct(lam_);
    } else {
      psi_lab_ = psi_;
      lam_lab_ = lam_;
    }
    w_.noalias() = lam_lab_.conjugate() * psi_lab_.transpose();

    const PulseSchedule& sched = rhs_->schedule();
    const CorrectionSet* corr = rhs_->corrections();
    const double cm = corr ? std::cos(corr->modulation_freq * t) : 1.0;
    for (int b : blocks_) {
      double cb = 1.0;
      if (b == 1) cb = envelope(sched.pulse_q1, t, sched.dt_ns) * cm;
      if (b == 2) cb = envelope(sched.pulse_q2, t, sched.dt_ns) * cm;
      if (cb == 0.0) continue;
      const int ro = quad_offset(b, false);
      for (int r = 0; r < dim_; ++r)
        for (int c = r + 1; c < dim_; ++c) {
          const double g = 0.5 * cb * (w_(r, c) + w_(c, r)).imag();
          dz(ro + r * dim_ + c) = g;
          dz(ro + c * dim_ + r) = g;
        }
      if (complex_) {
        const int io = quad_offset(b, true);
        for (int r = 0; r < dim_; ++r)
          for (int c = r + 1; c < dim_; ++c) {
            const double g = 0.5 * cb * (w_(r, c) - w_(c, r)).real();
            dz(io + r * dim_ + c) = g;
            dz(io + c * dim_ + r) = -g;
          }
      }
    }
  }

  const std::vector<int>& blocks() const { return blocks_; }

 private:
  SchrodingerRhs* rhs_;
  const ForwardTrajectory* traj_;
  ActiveTerms active_;
  bool complex_;
  int dim_;
  std::vector<int> blocks_;
  Eigen::VectorXcd lam_, dlam_, psi_, u_, lam_lab_, psi_lab_;
  ComplexMatrix w_;
};

}  // namespace detail

/// Loss of one datapoint at parameters p (forward solve only).
inline double point_loss(const ParamVector& p, const DataPoint& pt,
                         const FitModel& model) {
  const CorrectionSet corr = model.corrections(p);
  const PulseSchedule sched = model.schedule_for(pt);
  const StateVector psi0 =
      make_initial_state(pt.initial_state, model.sim.params.levels);
  const StateVector psi = evolve(model.sim, &corr, sched, psi0, model.rel_tol,
                                 model.abs_tol);
  return detail::l1_terms(computational_probs(psi, model.sim.params.levels), pt)
      .loss;
}

struct PointGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Loss and full parameter gradient of one datapoint via one forward solve
/// (recorded) and one backward adjoint solve with in-flight quadratures.
inline PointGradient loss_gradient(const ParamVector& p, const DataPoint& pt,
                                   const FitModel& model) {
  const int d = model.dim();
  const CorrectionSet corr = model.corrections(p);
  const PulseSchedule sched = model.schedule_for(pt);
  const StateVector psi0 =
      make_initial_state(pt.initial_state, model.sim.params.levels);

  IntegratorOptions opt;
  opt.rel_tol = model.rel_tol;
  opt.abs_tol = model.abs_tol;
  opt.max_step = carrier_limited_max_step(model.sim, sched, &corr);

  SchrodingerRhs rhs(model.sim, sched, &corr);
  const double t_end = sched.duration_ns();
  const std::vector<double> breaks = sched.breakpoints();

  IntegrateStats fwd_stats;
  const ForwardTrajectory traj = ForwardTrajectory::record(
      rhs, 0.0, t_end, psi0, opt, model.store_limit, breaks, &fwd_stats);
  const StateVector& phi_end = traj.final_state();
  // Probabilities are moduli, identical in both frames.
  const detail::LossTerms terms =
      detail::l1_terms(computational_probs(phi_end, model.sim.params.levels), pt);

  detail::AdjointQuadratureRhs adj(rhs, traj, model.active,
                                   model.complex_params);
  Eigen::VectorXcd z = Eigen::VectorXcd::Zero(adj.n_total());
  const auto idx = computational_indices(model.sim.params.levels);
  for (int m = 0; m < 4; ++m)
    z(idx[m]) = 2.0 * terms.weight[m] * phi_end(idx[m]);

  std::vector<double> edges;
  edges.push_back(0.0);
  for (double b : breaks) edges.push_back(b);
  edges.push_back(t_end);
  try {
    for (std::size_t k = edges.size() - 1; k > 0; --k)
      integrate(adj, edges[k], edges[k - 1], z, opt);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "adjoint backward solve failed (forward solve took "
       << fwd_stats.accepted << " steps, " << fwd_stats.rejected
       << " rejections): " << e.what();
    throw NumericalError(os.str());
  }

  // The quadratures integrated from T down to 0 carry a minus sign relative
  // to the forward-time integral defining dL/dp.
  PointGradient out;
  out.loss = terms.loss;
  out.grad = Eigen::VectorXd::Zero(model.n_params());
  for (int b : adj.blocks()) {
    const int ro = adj.quad_offset(b, false);
    const int fo = block_re_offset(b, d, model.complex_params);
    for (int k = 0; k < d * d; ++k) out.grad(fo + k) = -z(ro + k).real();
    if (model.complex_params) {
      const int io = adj.quad_offset(b, true);
      const int fi = block_im_offset(b, d);
      for (int k = 0; k < d * d; ++k) out.grad(fi + k) = -z(io + k).real();
    }
  }
  return out;
}

/// Central finite differences of point_loss, for cross-checking the adjoint
/// gradient. coords empty means every coordinate.
inline Eigen::VectorXd finite_difference_gradient(
    const ParamVector& p, const DataPoint& pt, const FitModel& model,
    double step, const std::vector<int>& coords = {}) {
  if (!(step > 0.0)) throw DataError("finite differences: step must be > 0");
  std::vector<int> idx = coords;
  if (idx.empty()) {
    idx.resize(p.size());
    for (int i = 0; i < int(p.size()); ++i) idx[i] = i;
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p.size());
  ParamVector q = p;
  for (int k : idx) {
    if (k < 0 || k >= int(p.size()))
      throw DimensionError("finite differences: coordinate out of range");
    const double saved = q(k);
    q(k) = saved + step;
    const double lp = point_loss(q, pt, model);
    q(k) = saved - step;
    const double lm = point_loss(q, pt, model);
    q(k) = saved;
    g(k) = (lp - lm) / (2.0 * step);
  }
  return g;
}

struct BatchGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Sum of point losses and gradients. Points are solved independently (in
/// parallel when workers allows) and reduced in index order, so the result
/// does not depend on the worker count.
inline BatchGradient batch_gradient(const ParamVector& p,
                                    const std::vector<DataPoint>& points,
                                    const FitModel& model, int workers = 1) {
  std::vector<PointGradient> per_point(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    try {
      per_point[i] = loss_gradient(p, points[i], model);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "point " << i << " (a1=" << points[i].a1 << ", a2=" << points[i].a2
         << ", duration_dt=" << points[i].duration_dt << ", state="
         << to_string(points[i].initial_state) << "): " << e.what();
      throw NumericalError(os.str());
    }
  });
  BatchGradient out;
  out.grad = Eigen::VectorXd::Zero(model.n_params());
  for (const PointGradient& pg : per_point) {
    out.loss += pg.loss;
    out.grad += pg.grad;
  }
  return out;
}

/// Sum of point losses only (no gradients), reduced in index order.
inline double batch_loss(const ParamVector& p,
                         const std::vector<DataPoint>& points,
                         const FitModel& model, int workers = 1) {
  std::vector<double> per_point(points.size(), 0.0);
  parallel_for(points.size(), workers, [&](std::size_t i) {
    try {
      per_point[i] = point_loss(p, points[i], model);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "point " << i << " (a1=" << points[i].a1 << ", a2=" << points[i].a2
         << ", duration_dt=" << points[i].duration_dt << ", state="
         << to_string(points[i].initial_state) << "): " << e.what();
      throw NumericalError(os.str());
    }
  });
  double loss = 0.0;
  for (double v : per_point) loss += v;
  return loss;
}

}  // namespace crfit
