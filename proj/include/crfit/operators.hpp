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
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>

#include "crfit/errors.hpp"

namespace crfit {

using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

/// Which transmon of the pair an operator acts on.
enum class Qubit { first, second };

inline bool is_finite(const ComplexMatrix& a) { return a.allFinite(); }

/// max_ij |A_ij - conj(A_ji)|, 0 for an exactly Hermitian matrix.
inline double hermiticity_residual(const ComplexMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// Bosonic lowering operator truncated to `levels` states:
/// a|n> = sqrt(n)|n-1>.
inline ComplexMatrix ladder(int levels) {
  if (levels < 2) throw DimensionError("ladder: levels must be >= 2");
  ComplexMatrix a = ComplexMatrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

/// Number operator diag(0, 1, ..., levels-1).
inline ComplexMatrix number_op(int levels) {
  if (levels < 2) throw DimensionError("number_op: levels must be >= 2");
  ComplexMatrix n = ComplexMatrix::Zero(levels, levels);
  for (int k = 0; k < levels; ++k) n(k, k) = double(k);
  return n;
}

/// Lift a single-transmon operator onto the two-transmon product space.
/// Basis ordering is |n1 n2> with n2 fastest: flat index = levels*n1 + n2.
inline ComplexMatrix embed(const ComplexMatrix& op, Qubit which, int levels) {
  if (levels < 2) throw DimensionError("embed: levels must be >= 2");
  if (op.rows() != levels || op.cols() != levels)
    throw DimensionError("embed: operator must be levels x levels");
  const ComplexMatrix id = ComplexMatrix::Identity(levels, levels);
  if (which == Qubit::first) return Eigen::kroneckerProduct(op, id).eval();
  return Eigen::kroneckerProduct(id, op).eval();
}

/// Hermitian part (A + A^dagger)/2. The result is exactly Hermitian:
/// entries (i,j) and (j,i) are built from the same two summands.
inline ComplexMatrix hermitize(const ComplexMatrix& a) {
  if (a.rows() != a.cols())
    throw DimensionError("hermitize: matrix must be square");
  return 0.5 * (a + a.adjoint()).eval();
}

/// Product basis state |n1 n2> as a flat state vector.
inline StateVector basis_state(int levels, int n1, int n2) {
  if (levels < 2) throw DimensionError("basis_state: levels must be >= 2");
  if (n1 < 0 || n1 >= levels || n2 < 0 || n2 >= levels)
    throw DimensionError("basis_state: occupation out of range");
  StateVector v = StateVector::Zero(levels * levels);
  v(levels * n1 + n2) = 1.0;
  return v;
}

}  // namespace crfit
