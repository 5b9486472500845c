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

#ifndef COLLABREC_LEARNERS_HPP_
#define COLLABREC_LEARNERS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "collabrec/collaboration.hpp"
#include "collabrec/types.hpp"

namespace collabrec {

// SGD settings for the factorization machine. The learning rate at epoch t
// (1-based) is learning_rate / (1 + lr_decay * (t - 1)).
inline constexpr double kFlattenedRowSquaredNorm = 2.0;

struct TrainConfig {
  Index latent_dim = 100;
  Index epochs = 30;
  double learning_rate = 0.002;
  double lr_decay = 1.0;
  double init_scale = 0.01;
  double l2_linear = 0.0;
  double l2_latent = 0.0;
  bool shuffle = true;
  // Trains on c * x with c^2 = kFlattenedRowSquaredNorm / mean ||x_i||^2 and
  // folds c back into w and V, so hyperparameters carry over from one-hot
  // flattened inputs to dense reduced ones. c = 1 on flattened data.
  bool scale_inputs = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Second-order factorization machine:
//   y(x) = w0 + sum_j w_j x_j + sum_{j<j'} <v_j, v_j'> x_j x_j'
struct FmModel {
  double w0 = 0.0;
  Vector w;
  RowMatrix v;  // input_dim x latent_dim, row j is the latent vector of feature j

  Index input_dim() const { return w.size(); }
  Index latent_dim() const { return v.cols(); }
};

struct FmGradient {
  double w0 = 0.0;
  Vector w;
  RowMatrix v;
};

struct TrainReport {
  std::vector<double> epoch_mse;  // mean squared residual seen during each epoch
};

FmModel fm_train(const RowMatrix& x, const Vector& y, const TrainConfig& config,
                 TrainReport* report = nullptr);
FmModel fm_train(const SparseMatrix& x, const Vector& y,
                 const TrainConfig& config, TrainReport* report = nullptr);

// O(d q) evaluation through 1/2 sum_f [(sum_j v_jf x_j)^2 - sum_j v_jf^2 x_j^2].
double fm_predict(const FmModel& model, std::span<const double> x);
double fm_predict(const FmModel& model, const SparseMatrix& x, Index row);
Vector fm_predict(const FmModel& model, const RowMatrix& x);
Vector fm_predict(const FmModel& model, const SparseMatrix& x);

// Gradient of 1/2 (y(x) - y)^2 with respect to w0, w and v.
FmGradient fm_gradient(const FmModel& model, std::span<const double> x,
                       double y);

Predictor as_predictor(FmModel model);

void save_model(const std::filesystem::path& dir, const FmModel& model,
                const TrainConfig& config);
FmModel load_fm_model(const std::filesystem::path& dir,
                      TrainConfig* config = nullptr);

// Ridge regression with an unpenalized intercept.
struct RidgeModel {
  double intercept = 0.0;
  Vector beta;
  double lambda = 0.0;

  Index input_dim() const { return beta.size(); }
};

RidgeModel ridge_train(const RowMatrix& x, const Vector& y, double lambda);
RidgeModel ridge_train(const SparseMatrix& x, const Vector& y, double lambda);
double ridge_predict(const RidgeModel& model, std::span<const double> x);
Vector ridge_predict(const RidgeModel& model, const RowMatrix& x);
Vector ridge_predict(const RidgeModel& model, const SparseMatrix& x);

Predictor as_predictor(RidgeModel model);

}  // namespace collabrec

#endif  // COLLABREC_LEARNERS_HPP_
