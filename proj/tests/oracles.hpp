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

// Naive reference implementations used only as test oracles, independent of
// Eigen's decompositions.

#ifndef COLLABREC_TESTS_ORACLES_HPP_
#define COLLABREC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "collabrec/types.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const collabrec::Matrix& m) {
  Grid g(static_cast<std::size_t>(m.rows()),
         std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

inline collabrec::Matrix from_grid(const Grid& g) {
  collabrec::Matrix m(static_cast<Eigen::Index>(g.size()),
                      g.empty() ? 0 : static_cast<Eigen::Index>(g[0].size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g[i].size(); ++j) m(i, j) = g[i][j];
  return m;
}

inline Grid multiply(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), p = b.empty() ? 0 : b[0].size();
  Grid c(n, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < p; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

inline Grid transpose(const Grid& a) {
  if (a.empty()) return {};
  Grid t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues in descending order.
inline std::vector<double> jacobi_eigenvalues(Grid a, int max_sweeps = 100) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

// Gauss-Jordan inversion with partial pivoting.
inline Grid gauss_jordan_inverse(Grid a) {
  const std::size_t n = a.size();
  Grid inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// (A^T A)^{-1} A^T B.
inline Grid normal_equations(const Grid& a, const Grid& b) {
  const Grid at = transpose(a);
  return multiply(gauss_jordan_inverse(multiply(at, a)), multiply(at, b));
}

// Explicit double sum over feature pairs.
inline double naive_fm(double w0, const std::vector<double>& w, const Grid& v,
                       const std::vector<double>& x) {
  double y = w0;
  for (std::size_t j = 0; j < x.size(); ++j) y += w[j] * x[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double dot = 0.0;
      for (std::size_t f = 0; f < v[i].size(); ++f) dot += v[i][f] * v[j][f];
      y += dot * x[i] * x[j];
    }
  }
  return y;
}

inline double central_difference(const std::function<double(double)>& f, double at,
                                 double step) {
  return (f(at + step) - f(at - step)) / (2.0 * step);
}

}  // namespace oracle

#endif  // COLLABREC_TESTS_ORACLES_HPP_
