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

#include "collabrec/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace collabrec {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_rank(Index rows, Index cols, Index rank) {
  if (rank < 1 || rank > std::min(rows, cols)) {
    throw InvalidArgument("svd rank " + std::to_string(rank) +
                          " outside [1, " +
                          std::to_string(std::min(rows, cols)) + "]");
  }
}

bool all_finite(const SparseMatrix& a) {
  const auto* values = a.valuePtr();
  return std::all_of(values, values + a.nonZeros(),
                     [](double v) { return std::isfinite(v); });
}

// Two rounds of Cholesky QR. Fails when q^T q is not numerically positive
// definite, which only happens for badly conditioned input.
bool cholesky_qr2(Matrix& q) {
  for (int round = 0; round < 2; ++round) {
    Matrix gram = q.transpose() * q;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    llt.matrixU().solveInPlace<Eigen::OnTheRight>(q);
    if (!q.allFinite()) return false;
  }
  return true;
}

// Orthonormalizes the columns of q in order with two passes of modified
// Gram-Schmidt. Flagged columns are replaced by the first standard basis
// vector that is not (numerically) in the span of the columns before them.
void orthonormalize(Matrix& q, const std::vector<bool>& flagged) {
  if (std::none_of(flagged.begin(), flagged.end(), [](bool f) { return f; })) {
    Matrix attempt = q;
    if (cholesky_qr2(attempt)) {
      q = std::move(attempt);
      return;
    }
  }
  const Index n = q.rows();
  const double min_residual2 = 1.0 / (2.0 * static_cast<double>(n));
  Index next_basis = 0;
  for (Index j = 0; j < q.cols(); ++j) {
    auto project_out = [&](Eigen::Ref<Vector> w) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Index i = 0; i < j; ++i) w -= q.col(i).dot(w) * q.col(i);
      }
    };
    if (!flagged[j]) {
      Vector w = q.col(j);
      project_out(w);
      const double norm = w.norm();
      if (norm > 0.0) {
        q.col(j) = w / norm;
        continue;
      }
    }
    Vector w(n);
    for (; next_basis < n; ++next_basis) {
      w.setZero();
      w[next_basis] = 1.0;
      project_out(w);
      if (w.squaredNorm() >= min_residual2) break;
    }
    if (next_basis == n) {
      throw NumericalError("svd: could not complete an orthonormal basis");
    }
    ++next_basis;
    q.col(j) = w / w.norm();
  }
}

void apply_sign_convention(TruncatedSvd& svd) {
  for (Index j = 0; j < svd.v.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < svd.v.rows(); ++i) {
      const double a = std::abs(svd.v(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (svd.v(best, j) < 0.0) {
      svd.v.col(j) *= -1.0;
      svd.u.col(j) *= -1.0;
    }
  }
}

TruncatedSvd finalize(Matrix u, Vector s, Matrix v, double zero_below) {
  std::vector<bool> flagged(s.size());
  for (Index j = 0; j < s.size(); ++j) {
    flagged[j] = !(s[j] > zero_below);
    if (flagged[j]) s[j] = 0.0;
  }
  orthonormalize(u, flagged);
  orthonormalize(v, flagged);
  TruncatedSvd out{std::move(u), std::move(s), std::move(v)};
  apply_sign_convention(out);
  return out;
}

TruncatedSvd direct_svd(const Matrix& a, Index rank) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double zero_below =
      static_cast<double>(std::max(a.rows(), a.cols())) * s[0] * kEps;
  return finalize(svd.matrixU().leftCols(rank), s.head(rank),
                  svd.matrixV().leftCols(rank), zero_below);
}

struct TopEigen {
  Vector values;
  Matrix vectors;
};

// Leading eigenpairs of a symmetric positive semidefinite Gram matrix.
// Coordinates with a zero diagonal belong to all-zero columns of the factor;
// they are exact null directions and are left out of the dense solve.
TopEigen top_eigenpairs(const Matrix& gram, Index rank) {
  const Index k = gram.rows();
  std::vector<Index> active, inactive;
  for (Index i = 0; i < k; ++i) {
    (gram(i, i) > 0.0 ? active : inactive).push_back(i);
  }
  const Index na = static_cast<Index>(active.size());
  Matrix sub(na, na);
  for (Index c = 0; c < na; ++c) {
    for (Index r = 0; r < na; ++r) sub(r, c) = gram(active[r], active[c]);
  }

  TopEigen out{Vector::Zero(rank), Matrix::Zero(k, rank)};
  Index filled = 0;
  if (na > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sub);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("svd: symmetric eigensolver did not converge");
    }
    for (Index j = na - 1; j >= 0 && filled < rank; --j, ++filled) {
      out.values[filled] = std::max(solver.eigenvalues()[j], 0.0);
      for (Index r = 0; r < na; ++r) {
        out.vectors(active[r], filled) = solver.eigenvectors()(r, j);
      }
    }
  }
  for (std::size_t i = 0; i < inactive.size() && filled < rank; ++i, ++filled) {
    out.vectors(inactive[i], filled) = 1.0;
  }
  return out;
}

template <typename MatrixType>
TruncatedSvd gram_svd(const MatrixType& a, Index rank) {
  const bool tall = a.rows() >= a.cols();
  Matrix gram;
  if constexpr (std::is_same_v<MatrixType, SparseMatrix>) {
    const SparseMatrix g = tall ? SparseMatrix(a.transpose() * a)
                                : SparseMatrix(a * a.transpose());
    gram = Matrix(g);
  } else {
    gram = tall ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  }
  auto eig = top_eigenpairs(gram, rank);

  const double lambda_max = eig.values.size() > 0 ? eig.values[0] : 0.0;
  const double zero_lambda = 16.0 * kEps *
                             static_cast<double>(std::max(a.rows(), a.cols())) *
                             lambda_max;
  Vector s(rank);
  for (Index j = 0; j < rank; ++j) {
    s[j] = eig.values[j] > zero_lambda ? std::sqrt(eig.values[j]) : 0.0;
  }
  Matrix other = tall ? Matrix(a * eig.vectors) : Matrix(a.transpose() * eig.vectors);
  for (Index j = 0; j < rank; ++j) {
    if (s[j] > 0.0) other.col(j) /= s[j];
  }
  // Anything the Gram route could not resolve is reported as zero.
  if (tall) return finalize(std::move(other), std::move(s), std::move(eig.vectors), 0.0);
  return finalize(std::move(eig.vectors), std::move(s), std::move(other), 0.0);
}

}  // namespace

TruncatedSvd truncated_svd(const Matrix& a, Index rank) {
  check_rank(a.rows(), a.cols(), rank);
  if (!a.allFinite()) throw InvalidArgument("svd input has non-finite entries");
  if (std::min(a.rows(), a.cols()) <= kGramSvdThreshold) {
    return direct_svd(a, rank);
  }
  return gram_svd(a, rank);
}

TruncatedSvd truncated_svd(const SparseMatrix& a, Index rank) {
  check_rank(a.rows(), a.cols(), rank);
  if (!all_finite(a)) throw InvalidArgument("svd input has non-finite entries");
  if (std::min(a.rows(), a.cols()) <= kGramSvdThreshold) {
    return direct_svd(Matrix(a), rank);
  }
  return gram_svd(a, rank);
}

double pseudoinverse_cutoff(Index rows, Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * 1e-12;
}

Matrix pseudoinverse_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("pseudoinverse_solve: row counts differ (" +
                          std::to_string(a.rows()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw InvalidArgument("pseudoinverse_solve: non-finite input");
  }
  if (a.size() == 0) return Matrix::Zero(a.cols(), b.cols());
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = pseudoinverse_cutoff(a.rows(), a.cols(), s[0]);
  Index kept = 0;
  while (kept < s.size() && s[kept] > cutoff) ++kept;
  if (kept == 0) return Matrix::Zero(a.cols(), b.cols());

  Matrix projected = svd.matrixU().leftCols(kept).transpose() * b;
  projected = s.head(kept).cwiseInverse().asDiagonal() * projected;
  Matrix g = svd.matrixV().leftCols(kept) * projected;
  if (!g.allFinite()) {
    throw NumericalError("pseudoinverse_solve: non-finite result");
  }
  return g;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw InvalidArgument("rmse: length mismatch");
  }
  if (predicted.empty()) throw InvalidArgument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double rmse(const Vector& predicted, const Vector& actual) {
  return rmse(std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())),
              std::span<const double>(actual.data(), static_cast<std::size_t>(actual.size())));
}

}  // namespace collabrec
