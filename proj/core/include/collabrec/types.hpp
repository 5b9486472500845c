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

#ifndef COLLABREC_TYPES_HPP_
#define COLLABREC_TYPES_HPP_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <stdexcept>
#include <string>

namespace collabrec {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Every failure in the library surfaces as an Error (or a subclass). The
// message is meant to be shown to a user as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Violated preconditions on shapes, counts, or ranges.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown (non-finite values, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace collabrec

#endif  // COLLABREC_TYPES_HPP_
