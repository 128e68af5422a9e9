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

#include <cmath>
#include <limits>
#include <numbers>

#include "crfit/device.hpp"
#include "crfit/errors.hpp"
#include "crfit/operators.hpp"
#include "crfit/pulses.hpp"

namespace crfit {

/// Data-driven additive correction to the device Hamiltonian:
///
///   H_c = M + S1(t) cos(wm t) D1 + S2(t) cos(wm t) D2
///
/// where S1, S2 are the dimensionless pulse envelopes of the schedule being
/// played and wm is one shared modulation carrier. M, D1, D2 are Hermitian
/// with zero diagonal; the diagonal of the model is trusted and never
/// corrected. Inactive terms are kept as zero matrices and skipped.
struct CorrectionSet {
  ComplexMatrix m;
  ComplexMatrix d1;
  ComplexMatrix d2;
  bool active_m = false;
  bool active_d1 = false;
  bool active_d2 = false;
  double modulation_freq = 0.0; // rad/ns

  int dim() const { return int(m.rows()); }

  static CorrectionSet zero(int dim, double modulation_freq) {
    CorrectionSet c;
    c.m = ComplexMatrix::Zero(dim, dim);
    c.d1 = ComplexMatrix::Zero(dim, dim);
    c.d2 = ComplexMatrix::Zero(dim, dim);
    c.modulation_freq = modulation_freq;
    return c;
  }

  void validate() const {
    for (const ComplexMatrix* a : {&m, &d1, &d2}) {
      if (a->rows() != m.rows() || a->cols() != m.rows())
        throw DimensionError("corrections: matrices must be square and equal size");
      if (!is_finite(*a)) throw DataError("corrections: non-finite entry");
      if (hermiticity_residual(*a) > 1e-12)
        throw DataError("corrections: matrix is not Hermitian");
      if (a->diagonal().cwiseAbs().maxCoeff() != 0.0)
        throw DataError("corrections: diagonal must be exactly zero");
    }
    if (!std::isfinite(modulation_freq))
      throw DataError("corrections: non-finite modulation frequency");
  }
};

/// Drift Hamiltonian of the coupled pair, rad/ns:
///   sum_i [ w_i N_i + (delta_i/2) N_i (N_i - 1) ] + j12 (a1^+ a2 + a1 a2^+).
inline ComplexMatrix static_hamiltonian(const DeviceParams& dp) {
  dp.validate();
  const int L = dp.levels;
  const ComplexMatrix a = ladder(L);
  const ComplexMatrix n = number_op(L);
  const ComplexMatrix n1 = embed(n, Qubit::first, L);
  const ComplexMatrix n2 = embed(n, Qubit::second, L);
  const ComplexMatrix a1 = embed(a, Qubit::first, L);
  const ComplexMatrix a2 = embed(a, Qubit::second, L);
  const ComplexMatrix id = ComplexMatrix::Identity(L * L, L * L);
  ComplexMatrix h = dp.omega1 * n1 + dp.omega2 * n2;
  h += 0.5 * dp.delta1 * (n1 * (n1 - id));
  h += 0.5 * dp.delta2 * (n2 * (n2 - id));
  h += dp.j12 * (a1.adjoint() * a2 + a1 * a2.adjoint());
  return h;
}

/// Microwave drive term at time t:
///   sum_i Omega_i S_i(t) cos(w_di t) (a_i + a_i^+).
inline ComplexMatrix drive_term(const DeviceParams& dp,
                                const PulseSchedule& sched, double t_ns) {
  const int L = dp.levels;
  const ComplexMatrix a = ladder(L);
  const ComplexMatrix a1 = embed(a, Qubit::first, L);
  const ComplexMatrix a2 = embed(a, Qubit::second, L);
  const double c1 = dp.drive_strength1 * envelope(sched.pulse_q1, t_ns, sched.dt_ns) *
                    std::cos(sched.drive_freq_q1 * t_ns);
  const double c2 = dp.drive_strength2 * envelope(sched.pulse_q2, t_ns, sched.dt_ns) *
                    std::cos(sched.drive_freq_q2 * t_ns);
  return c1 * (a1 + a1.adjoint()) + c2 * (a2 + a2.adjoint());
}

/// Full lab-frame Hamiltonian: drift + drive + active corrections. The
/// D terms share the drive envelopes but carry their own cosine at the
/// correction modulation frequency.
inline ComplexMatrix total_hamiltonian(const DeviceParams& dp,
                                       const CorrectionSet& corr,
                                       const PulseSchedule& sched,
                                       double t_ns) {
  if (corr.dim() != dp.dim())
    throw DimensionError("total_hamiltonian: correction dimension mismatch");
  ComplexMatrix h = static_hamiltonian(dp) + drive_term(dp, sched, t_ns);
  if (corr.active_m) h += corr.m;
  const double cm = std::cos(corr.modulation_freq * t_ns);
  if (corr.active_d1)
    h += (envelope(sched.pulse_q1, t_ns, sched.dt_ns) * cm) * corr.d1;
  if (corr.active_d2)
    h += (envelope(sched.pulse_q2, t_ns, sched.dt_ns) * cm) * corr.d2;
  return h;
}

/// Rates of the effective block-diagonal generator of an ideal
/// cross-resonance drive, (ZI, ZX) up to a global constant:
///   zi = Delta - sqrt(Delta^2 + Omega^2),
///   zx = -j12 * Omega / sqrt(Delta^2 + Omega^2).
/// Both vanish as Omega -> 0 (for Delta > 0), and zx saturates at
/// -j12 * sign(Omega) for |Omega| >> |Delta|.
struct CrCoefficients {
  double zi_rate = 0.0;
  double zx_rate = 0.0;
};

inline CrCoefficients effective_cr_coefficients(double delta, double omega,
                                                double j12) {
  const double root = std::sqrt(delta * delta + omega * omega);
  CrCoefficients c;
  c.zi_rate = delta - root;
  c.zx_rate = (root == 0.0) ? 0.0 : -j12 * omega / root;
  return c;
}

/// Integration frame. The rotating frame removes the drift diagonal
/// Lambda = diag(H_static): psi_lab = exp(-i Lambda t) phi. Observable
/// probabilities are identical in both frames; the rotating frame just
/// leaves slower phases for the integrator to track.
enum class Frame { lab, rotating };

/// Precomputed time-independent pieces shared by every solve on one device.
struct SimContext {
  DeviceParams params;
  Frame frame = Frame::rotating;
  ComplexMatrix h_static;     // full drift, lab frame
  ComplexMatrix x1, x2;       // a_i + a_i^+, embedded
  Eigen::VectorXd static_diag; // Lambda, real
  double diag_absmax = 0.0;   // max_j |Lambda_j|
  double diag_span = 0.0;     // max Lambda - min Lambda

  int dim() const { return params.dim(); }
};

inline SimContext prepare_context(const DeviceParams& dp,
                                  Frame frame = Frame::rotating) {
  dp.validate();
  SimContext c;
  c.params = dp;
  c.frame = frame;
  c.h_static = static_hamiltonian(dp);
  const ComplexMatrix a = ladder(dp.levels);
  const ComplexMatrix a1 = embed(a, Qubit::first, dp.levels);
  const ComplexMatrix a2 = embed(a, Qubit::second, dp.levels);
  c.x1 = a1 + a1.adjoint();
  c.x2 = a2 + a2.adjoint();
  c.static_diag = c.h_static.diagonal().real();
  c.diag_absmax = c.static_diag.cwiseAbs().maxCoeff();
  c.diag_span = c.static_diag.maxCoeff() - c.static_diag.minCoeff();
  return c;
}

/// Upper bound on the integrator step: a tenth of the period of the fastest
/// oscillation the right-hand side can contain in the active frame. In the
/// lab frame that is the fastest carrier or diagonal phase; in the rotating
/// frame carriers beat against the residual detunings, bounded by the
/// diagonal span.
inline double carrier_limited_max_step(const SimContext& ctx,
                                       const PulseSchedule& sched,
                                       const CorrectionSet* corr) {
  double carrier =
      std::max(std::abs(sched.drive_freq_q1), std::abs(sched.drive_freq_q2));
  if (corr != nullptr && (corr->active_d1 || corr->active_d2))
    carrier = std::max(carrier, std::abs(corr->modulation_freq));
  const double omega_max = (ctx.frame == Frame::lab)
                               ? std::max(carrier, ctx.diag_absmax)
                               : carrier + ctx.diag_span;
  if (omega_max <= 0.0) return std::numeric_limits<double>::infinity();
  const double f_max = omega_max / (2.0 * std::numbers::pi);
  return 1.0 / (10.0 * f_max);
}

}  // namespace crfit
