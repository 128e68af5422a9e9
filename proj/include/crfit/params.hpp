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

#include <complex>

#include "crfit/errors.hpp"
#include "crfit/hamiltonian.hpp"

namespace crfit {

using ParamVector = Eigen::VectorXd;

/// Which correction matrices the optimizer is allowed to move. Inactive
/// blocks stay exactly zero and receive zero gradient.
struct ActiveTerms {
  bool m = false;
  bool d1 = false;
  bool d2 = true;
};

/// Unconstrained parametrization of the correction set. The vector holds one
/// dim x dim block per matrix, row-major, in the order [M, D1, D2]; in
/// complex mode each matrix gets a real block followed by an imaginary
/// block, [M_re, M_im, D1_re, D1_im, D2_re, D2_im]. A block reshapes to a
/// square matrix A which enters the model as the Hermitian average
/// (A + A^dagger)/2 with the diagonal forced to zero, so every point of
/// parameter space maps to an admissible correction.
inline int param_count(int dim, bool complex_mode = false) {
  return (complex_mode ? 6 : 3) * dim * dim;
}

inline int block_re_offset(int block, int dim, bool complex_mode) {
  return (complex_mode ? 2 * block : block) * dim * dim;
}

inline int block_im_offset(int block, int dim) {
  return (2 * block + 1) * dim * dim;
}

inline ParamVector zero_params(int dim, bool complex_mode = false) {
  return ParamVector::Zero(param_count(dim, complex_mode));
}

/// Zero the parameter slots that feed matrix diagonals. Those slots never
/// influence the model (diagonals are dropped), so keeping them pinned at
/// zero costs nothing and keeps the vector canonical.
inline void zero_diagonal_params(ParamVector& p, int dim,
                                 bool complex_mode = false) {
  const int nblocks = complex_mode ? 6 : 3;
  for (int b = 0; b < nblocks; ++b)
    for (int j = 0; j < dim; ++j) p(b * dim * dim + j * dim + j) = 0.0;
}

namespace detail {

inline ComplexMatrix block_to_matrix(const ParamVector& p, int block, int dim,
                                     bool complex_mode) {
  ComplexMatrix a(dim, dim);
  const int ro = block_re_offset(block, dim, complex_mode);
  if (complex_mode) {
    const int io = block_im_offset(block, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        a(r, c) = std::complex<double>(p(ro + r * dim + c), p(io + r * dim + c));
  } else {
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) a(r, c) = p(ro + r * dim + c);
  }
  ComplexMatrix h = hermitize(a);
  h.diagonal().setZero();
  return h;
}

}  // namespace detail

inline CorrectionSet params_to_corrections(const ParamVector& p, int dim,
                                           const ActiveTerms& active,
                                           double modulation_freq,
                                           bool complex_mode = false) {
  if (p.size() != param_count(dim, complex_mode))
    throw DimensionError("params_to_corrections: wrong parameter count");
  CorrectionSet corr = CorrectionSet::zero(dim, modulation_freq);
  corr.active_m = active.m;
  corr.active_d1 = active.d1;
  corr.active_d2 = active.d2;
  if (active.m) corr.m = detail::block_to_matrix(p, 0, dim, complex_mode);
  if (active.d1) corr.d1 = detail::block_to_matrix(p, 1, dim, complex_mode);
  if (active.d2) corr.d2 = detail::block_to_matrix(p, 2, dim, complex_mode);
  return corr;
}

/// Canonical inverse: store each Hermitian matrix directly, so a round trip
/// through params_to_corrections is the identity on admissible corrections.
/// Real mode keeps only the real part.
inline ParamVector corrections_to_params(const CorrectionSet& corr,
                                         bool complex_mode = false) {
  const int dim = corr.dim();
  ParamVector p = zero_params(dim, complex_mode);
  const ComplexMatrix* mats[3] = {&corr.m, &corr.d1, &corr.d2};
  for (int b = 0; b < 3; ++b) {
    const int ro = block_re_offset(b, dim, complex_mode);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        p(ro + r * dim + c) = (*mats[b])(r, c).real();
        if (complex_mode)
          p(block_im_offset(b, dim) + r * dim + c) = (*mats[b])(r, c).imag();
      }
  }
  zero_diagonal_params(p, dim, complex_mode);
  return p;
}

}  // namespace crfit
