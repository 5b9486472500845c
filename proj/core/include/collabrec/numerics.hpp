// Copyright 2026 The collabrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COLLABREC_NUMERICS_HPP_
#define COLLABREC_NUMERICS_HPP_

#include <span>

#include "collabrec/types.hpp"

namespace collabrec {

// Top singular triplets: a ~= u * diag(singular_values) * v^T.
//
// Sign convention: each pair (u_j, v_j) is flipped so that the entry of v_j
// with the largest magnitude is positive (lowest index on ties). When the
// requested rank exceeds rank(a), the trailing columns of both factors are
// completed to orthonormal sets by Gram-Schmidt over the standard basis,
// taken in index order.
struct TruncatedSvd {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

// 1 <= rank <= min(rows, cols); entries must be finite.
//
// Small problems go through a direct bidiagonal SVD. Once min(rows, cols)
// exceeds kGramSvdThreshold the factor on the shorter side comes from a
// symmetric eigendecomposition of the Gram matrix, and the other factor is
// recovered as a^T u / sigma (or a v / sigma) and re-orthonormalized.
TruncatedSvd truncated_svd(const Matrix& a, Index rank);
TruncatedSvd truncated_svd(const SparseMatrix& a, Index rank);

inline constexpr Index kGramSvdThreshold = 256;

// Minimum-norm least-squares solution of a * g ~= b, i.e. pinv(a) * b.
// Singular values below max(rows, cols) * sigma_max * 1e-12 are dropped.
Matrix pseudoinverse_solve(const Matrix& a, const Matrix& b);

double pseudoinverse_cutoff(Index rows, Index cols, double sigma_max);

double rmse(std::span<const double> predicted, std::span<const double> actual);
double rmse(const Vector& predicted, const Vector& actual);

}  // namespace collabrec

#endif  // COLLABREC_NUMERICS_HPP_
