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
#include <complex>
#include <utility>
#include <vector>

#include "crfit/hamiltonian.hpp"
#include "crfit/integrate.hpp"

namespace crfit {

/// Probabilities of the four two-qubit computational outcomes. With leakage
/// levels present the four entries sum to less than one.
struct ProbabilityVector {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;

  double sum() const { return p00 + p01 + p10 + p11; }
  double operator[](int i) const {
    return i == 0 ? p00 : i == 1 ? p01 : i == 2 ? p10 : p11;
  }
};

/// Flat indices of |00>, |01>, |10>, |11> in the product basis.
inline std::array<int, 4> computational_indices(int levels) {
  return {0, 1, levels, levels + 1};
}

inline ProbabilityVector computational_probs(const StateVector& psi,
                                             int levels) {
  if (psi.size() != levels * levels)
    throw DimensionError("computational_probs: state has wrong dimension");
  const auto idx = computational_indices(levels);
  ProbabilityVector p;
  p.p00 = std::norm(psi(idx[0]));
  p.p01 = std::norm(psi(idx[1]));
  p.p10 = std::norm(psi(idx[2]));
  p.p11 = std::norm(psi(idx[3]));
  return p;
}

/// Right-hand side of the Schrodinger equation for one schedule, in the
/// frame of the context. In the rotating frame the state is
/// phi = exp(i Lambda t) psi with Lambda = diag(H_static); the generator
/// becomes exp(i Lambda t)(H - Lambda)exp(-i Lambda t), applied matrix-free.
/// Reused across evaluations; owns all scratch storage.
class SchrodingerRhs {
 public:
  SchrodingerRhs(const SimContext& ctx, const PulseSchedule& sched,
                 const CorrectionSet* corr)
      : ctx_(&ctx), sched_(sched), corr_(corr) {
    sched_.validate();
    if (corr_ != nullptr && corr_->dim() != ctx.dim())
      throw DimensionError("rhs: correction dimension mismatch");
    const int d = ctx.dim();
    h_.resize(d, d);
    u_.resize(d);
    w_.resize(d);
    diag_c_ = ctx.static_diag.cast<std::complex<double>>();
  }

  const SimContext& context() const { return *ctx_; }
  const PulseSchedule& schedule() const { return sched_; }
  const CorrectionSet* corrections() const { return corr_; }

  /// Lab-frame H(t) into h.
  void assemble_lab(double t, ComplexMatrix& h) const {
    h = ctx_->h_static;
    const double s1 = envelope(sched_.pulse_q1, t, sched_.dt_ns);
    const double s2 = envelope(sched_.pulse_q2, t, sched_.dt_ns);
    const double c1 =
        ctx_->params.drive_strength1 * s1 * std::cos(sched_.drive_freq_q1 * t);
    const double c2 =
        ctx_->params.drive_strength2 * s2 * std::cos(sched_.drive_freq_q2 * t);
    if (c1 != 0.0) h.noalias() += c1 * ctx_->x1;
    if (c2 != 0.0) h.noalias() += c2 * ctx_->x2;
    if (corr_ != nullptr) {
      if (corr_->active_m) h += corr_->m;
      if (corr_->active_d1 || corr_->active_d2) {
        const double cm = std::cos(corr_->modulation_freq * t);
        if (corr_->active_d1 && s1 != 0.0) h.noalias() += (s1 * cm) * corr_->d1;
        if (corr_->active_d2 && s2 != 0.0) h.noalias() += (s2 * cm) * corr_->d2;
      }
    }
  }

  /// Phases u_j = exp(-i Lambda_j t) mapping the rotating-frame state to the
  /// lab frame: psi = u .* phi.
  void frame_phases(double t, Eigen::VectorXcd& u) const {
    const Eigen::VectorXd& lam = ctx_->static_diag;
    for (Eigen::Index j = 0; j < lam.size(); ++j)
      u(j) = std::polar(1.0, -lam(j) * t);
  }

  void operator()(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt) {
    const std::complex<double> mi(0.0, -1.0);
    assemble_lab(t, h_);
    if (ctx_->frame == Frame::lab) {
      dydt.noalias() = h_ * y;
      dydt *= mi;
      return;
    }
    frame_phases(t, u_);
    w_ = u_.cwiseProduct(y);
    h_.diagonal() -= diag_c_;
    dydt.noalias() = h_ * w_;
    dydt = mi * u_.conjugate().cwiseProduct(dydt);
  }

 private:
  const SimContext* ctx_;
  PulseSchedule sched_;
  const CorrectionSet* corr_;
  Eigen::VectorXcd diag_c_;
  mutable ComplexMatrix h_;
  mutable Eigen::VectorXcd u_, w_;
};

/// Integrate one schedule from t = 0 to its end and return the final state
/// in the lab frame, regardless of the integration frame of the context.
inline StateVector evolve(const SimContext& ctx, const CorrectionSet* corr,
                          const PulseSchedule& sched, const StateVector& psi0,
                          double rel_tol = 1e-8, double abs_tol = 1e-10,
                          IntegrateStats* stats = nullptr) {
  if (psi0.size() != ctx.dim())
    throw DimensionError("evolve: initial state has wrong dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-6)
    throw DataError("evolve: initial state must be normalized");
  if (corr != nullptr) corr->validate();

  IntegratorOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  opt.max_step = carrier_limited_max_step(ctx, sched, corr);

  SchrodingerRhs rhs(ctx, sched, corr);
  const double t_end = sched.duration_ns();
  StateVector y = psi0; // u(0) = 1, so both frames share the initial state
  if (t_end > 0.0) {
    IntegrateStats local;
    IntegrateStats& st = stats ? *stats : local;
    double t = 0.0;
    for (double b : sched.breakpoints()) {
      integrate(rhs, t, b, y, opt, &st);
      t = b;
    }
    integrate(rhs, t, t_end, y, opt, &st);
  }
  if (ctx.frame == Frame::rotating) {
    Eigen::VectorXcd u(ctx.dim());
    rhs.frame_phases(t_end, u);
    y = u.cwiseProduct(y);
  }
  if (!y.allFinite())
    throw NumericalError("evolve: non-finite state after integration");
  return y;
}

/// Convenience entry point building a context per call.
inline StateVector evolve(const DeviceParams& dp, const CorrectionSet& corr,
                          const PulseSchedule& sched, const StateVector& psi0,
                          double rel_tol = 1e-8, double abs_tol = 1e-10,
                          Frame frame = Frame::rotating) {
  const SimContext ctx = prepare_context(dp, frame);
  return evolve(ctx, &corr, sched, psi0, rel_tol, abs_tol);
}

/// Reference propagator for piecewise-constant Hamiltonians: each segment is
/// applied as exp(-i H tau) psi through a full eigendecomposition. Slow and
/// dependency-free of the step integrator; used to cross-check it.
inline StateVector propagate_exact(
    const std::vector<std::pair<ComplexMatrix, double>>& segments,
    StateVector psi) {
  for (const auto& [h, tau] : segments) {
    if (h.rows() != h.cols() || h.rows() != psi.size())
      throw DimensionError("propagate_exact: segment dimension mismatch");
    if (!(tau > 0.0))
      throw DataError("propagate_exact: segment duration must be positive");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (hermiticity_residual(h) > 1e-12 * scale)
      throw DataError("propagate_exact: segment is not Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success)
      throw NumericalError("propagate_exact: eigendecomposition failed");
    Eigen::VectorXcd phases(h.rows());
    for (Eigen::Index j = 0; j < h.rows(); ++j)
      phases(j) = std::polar(1.0, -es.eigenvalues()(j) * tau);
    psi = es.eigenvectors() *
          phases.cwiseProduct(es.eigenvectors().adjoint() * psi);
  }
  return psi;
}

/// |<a|b>|^2 of normalized states.
inline double fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size())
    throw DimensionError("fidelity: dimension mismatch");
  return std::norm(a.dot(b));
}

}  // namespace crfit
