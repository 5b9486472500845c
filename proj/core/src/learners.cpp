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

#include "collabrec/learners.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "collabrec/matrix_io.hpp"
#include "collabrec/seed.hpp"

namespace collabrec {
namespace {

// Sparse and dense rows share the SGD code through this small view.
struct DenseRows {
  const double* data;
  Index n;
  Index d;

  explicit DenseRows(const RowMatrix& x) : data(x.data()), n(x.rows()), d(x.cols()) {}
  DenseRows(std::span<const double> row)
      : data(row.data()), n(1), d(static_cast<Index>(row.size())) {}

  Index rows() const { return n; }
  Index cols() const { return d; }
  template <typename F>
  void for_each(Index r, F&& f) const {
    const double* row = data + r * d;
    for (Index j = 0; j < d; ++j) {
      if (row[j] != 0.0) f(j, row[j]);
    }
  }
};

struct SparseRows {
  const SparseMatrix& x;
  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  template <typename F>
  void for_each(Index r, F&& f) const {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      if (it.value() != 0.0) f(it.col(), it.value());
    }
  }
};

// Returns the prediction and leaves sum_j v_j x_j in `sums`.
template <typename Rows>
double predict_row(const FmModel& m, const Rows& rows, Index r,
                   Eigen::Ref<Eigen::RowVectorXd> sums) {
  sums.setZero();
  double linear = m.w0;
  double squares = 0.0;
  rows.for_each(r, [&](Index j, double xj) {
    linear += m.w[j] * xj;
    const auto vj = m.v.row(j);
    sums.noalias() += xj * vj;
    squares += xj * xj * vj.squaredNorm();
  });
  return linear + 0.5 * (sums.squaredNorm() - squares);
}

FmModel init_model(Index d, const TrainConfig& config, Rng& rng) {
  FmModel m;
  m.w = Vector::Zero(d);
  m.v.resize(d, config.latent_dim);
  std::normal_distribution<double> normal(0.0, config.init_scale);
  for (Index i = 0; i < m.v.size(); ++i) m.v.data()[i] = normal(rng);
  return m;
}

// Multiplier that brings the mean squared row norm to that of a flattened
// rating row (two ones).
template <typename Rows>
double input_scale(const Rows& rows) {
  double total = 0.0;
  for (Index r = 0; r < rows.rows(); ++r) {
    rows.for_each(r, [&](Index, double xj) { total += xj * xj; });
  }
  const double mean = total / static_cast<double>(rows.rows());
  if (!(mean > 0.0)) return 1.0;
  return std::sqrt(kFlattenedRowSquaredNorm / mean);
}

template <typename Rows>
struct ScaledRows {
  const Rows& inner;
  double scale;
  Index rows() const { return inner.rows(); }
  Index cols() const { return inner.cols(); }
  template <typename F>
  void for_each(Index r, F&& f) const {
    inner.for_each(r, [&](Index j, double xj) { f(j, scale * xj); });
  }
};

template <typename Rows>
FmModel train_impl(const Rows& rows, const Vector& y, const TrainConfig& config,
                   TrainReport* report) {
  config.validate();
  const Index n = rows.rows();
  const Index d = rows.cols();
  if (n < 1 || d < 1) throw InvalidArgument("fm_train: empty design matrix");
  if (y.size() != n) throw InvalidArgument("fm_train: y length differs from rows");

  Rng rng(config.seed);
  FmModel m = init_model(d, config, rng);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Eigen::RowVectorXd sums(config.latent_dim);
  if (report) report->epoch_mse.clear();

  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate /
                      (1.0 + config.lr_decay * static_cast<double>(epoch - 1));
    double squared = 0.0;
    for (const Index r : order) {
      const double residual = predict_row(m, rows, r, sums) - y[r];
      squared += residual * residual;
      const double step = lr * residual;
      m.w0 -= step;
      rows.for_each(r, [&](Index j, double xj) {
        m.w[j] -= step * xj + lr * config.l2_linear * m.w[j];
        auto vj = m.v.row(j);
        // d/dv_jf = residual * x_j * (sums_f - v_jf x_j)
        vj = vj * (1.0 + step * xj * xj - lr * config.l2_latent) -
             (step * xj) * sums;
      });
    }
    const double mse = squared / static_cast<double>(n);
    if (!std::isfinite(mse) || !std::isfinite(m.w0) || !m.w.allFinite() ||
        !m.v.allFinite()) {
      throw NumericalError("fm_train diverged at epoch " + std::to_string(epoch));
    }
    if (report) report->epoch_mse.push_back(mse);
  }
  return m;
}

void check_dim(const FmModel& m, Index d) {
  if (d != m.input_dim()) {
    throw InvalidArgument("fm_predict: expected " + std::to_string(m.input_dim()) +
                          " features, got " + std::to_string(d));
  }
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim < 1) throw InvalidArgument("latent_dim must be positive");
  if (epochs < 1) throw InvalidArgument("epochs must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(lr_decay >= 0.0)) throw InvalidArgument("lr_decay must be nonnegative");
  if (!(init_scale >= 0.0)) throw InvalidArgument("init_scale must be nonnegative");
  if (!(l2_linear >= 0.0) || !(l2_latent >= 0.0)) {
    throw InvalidArgument("l2 penalties must be nonnegative");
  }
}

template <typename Rows>
FmModel train_dispatch(const Rows& rows, const Vector& y, const TrainConfig& config,
                       TrainReport* report) {
  if (!config.scale_inputs || rows.rows() < 1) return train_impl(rows, y, config, report);
  const double c = input_scale(rows);
  if (c == 1.0) return train_impl(rows, y, config, report);
  // y(c x) under (w, V) equals y(x) under (c w, c V).
  FmModel m = train_impl(ScaledRows<Rows>{rows, c}, y, config, report);
  m.w *= c;
  m.v *= c;
  return m;
}

FmModel fm_train(const RowMatrix& x, const Vector& y, const TrainConfig& config,
                 TrainReport* report) {
  return train_dispatch(DenseRows(x), y, config, report);
}

FmModel fm_train(const SparseMatrix& x, const Vector& y,
                 const TrainConfig& config, TrainReport* report) {
  return train_dispatch(SparseRows{x}, y, config, report);
}

double fm_predict(const FmModel& model, std::span<const double> x) {
  check_dim(model, static_cast<Index>(x.size()));
  Eigen::RowVectorXd sums(model.latent_dim());
  return predict_row(model, DenseRows(x), 0, sums);
}

double fm_predict(const FmModel& model, const SparseMatrix& x, Index row) {
  check_dim(model, x.cols());
  Eigen::RowVectorXd sums(model.latent_dim());
  return predict_row(model, SparseRows{x}, row, sums);
}

Vector fm_predict(const FmModel& model, const RowMatrix& x) {
  check_dim(model, x.cols());
  Vector out(x.rows());
  Eigen::RowVectorXd sums(model.latent_dim());
  const DenseRows rows(x);
  for (Index r = 0; r < x.rows(); ++r) {
    out[r] = predict_row(model, rows, r, sums);
  }
  return out;
}

Vector fm_predict(const FmModel& model, const SparseMatrix& x) {
  check_dim(model, x.cols());
  Vector out(x.rows());
  Eigen::RowVectorXd sums(model.latent_dim());
  for (Index r = 0; r < x.rows(); ++r) {
    out[r] = predict_row(model, SparseRows{x}, r, sums);
  }
  return out;
}

FmGradient fm_gradient(const FmModel& model, std::span<const double> x,
                       double y) {
  const double residual = fm_predict(model, x) - y;
  FmGradient g;
  g.w0 = residual;
  g.w.resize(model.input_dim());
  g.v.resize(model.input_dim(), model.latent_dim());
  Eigen::RowVectorXd sums = Eigen::RowVectorXd::Zero(model.latent_dim());
  for (Index j = 0; j < model.input_dim(); ++j) sums += x[j] * model.v.row(j);
  for (Index j = 0; j < model.input_dim(); ++j) {
    g.w[j] = residual * x[j];
    g.v.row(j) = residual * x[j] * (sums - x[j] * model.v.row(j));
  }
  return g;
}

Predictor as_predictor(FmModel model) {
  auto shared = std::make_shared<const FmModel>(std::move(model));
  return {shared->input_dim(),
          [shared](std::span<const double> x) { return fm_predict(*shared, x); }};
}

void save_model(const std::filesystem::path& dir, const FmModel& model,
                const TrainConfig& config) {
  std::filesystem::create_directories(dir);
  RowMatrix packed(model.input_dim() + 1, model.latent_dim() + 1);
  packed.setZero();
  packed(0, 0) = model.w0;
  packed.block(1, 0, model.input_dim(), 1) = model.w;
  packed.block(1, 1, model.input_dim(), model.latent_dim()) = model.v;
  write_matrix(dir / "fm_model.bin", packed);

  std::ofstream out(dir / "train_config.txt");
  if (!out) throw Error("cannot write " + (dir / "train_config.txt").string());
  out.precision(17);
  out << "latent_dim=" << config.latent_dim << "\n"
      << "epochs=" << config.epochs << "\n"
      << "learning_rate=" << config.learning_rate << "\n"
      << "lr_decay=" << config.lr_decay << "\n"
      << "init_scale=" << config.init_scale << "\n"
      << "l2_linear=" << config.l2_linear << "\n"
      << "l2_latent=" << config.l2_latent << "\n"
      << "shuffle=" << (config.shuffle ? 1 : 0) << "\n"
      << "scale_inputs=" << (config.scale_inputs ? 1 : 0) << "\n"
      << "seed=" << config.seed << "\n";
}

FmModel load_fm_model(const std::filesystem::path& dir, TrainConfig* config) {
  const RowMatrix packed = read_matrix(dir / "fm_model.bin");
  if (packed.rows() < 1 || packed.cols() < 1) {
    throw ParseError("fm_model.bin is empty");
  }
  FmModel m;
  m.w0 = packed(0, 0);
  m.w = packed.block(1, 0, packed.rows() - 1, 1);
  m.v = packed.block(1, 1, packed.rows() - 1, packed.cols() - 1);
  if (config) {
    const auto kv = read_manifest(dir / "train_config.txt");
    auto get = [&](const std::string& key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) throw ParseError("train_config.txt: missing " + key);
      return it->second;
    };
    config->latent_dim = std::stoll(get("latent_dim"));
    config->epochs = std::stoll(get("epochs"));
    config->learning_rate = std::stod(get("learning_rate"));
    config->lr_decay = std::stod(get("lr_decay"));
    config->init_scale = std::stod(get("init_scale"));
    config->l2_linear = std::stod(get("l2_linear"));
    config->l2_latent = std::stod(get("l2_latent"));
    config->shuffle = get("shuffle") == "1";
    config->scale_inputs = get("scale_inputs") == "1";
    config->seed = std::stoull(get("seed"));
  }
  return m;
}

namespace {

RidgeModel solve_ridge(Matrix gram, Vector xty, const Vector& mean_x,
                       double mean_y, Index n, double lambda) {
  // Center without materializing the centered design.
  const double nn = static_cast<double>(n);
  gram.noalias() -= nn * mean_x * mean_x.transpose();
  xty.noalias() -= nn * mean_y * mean_x;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge system is not positive definite");
  }
  RidgeModel model;
  model.beta = llt.solve(xty);
  model.intercept = mean_y - mean_x.dot(model.beta);
  model.lambda = lambda;
  if (!model.beta.allFinite() || !std::isfinite(model.intercept)) {
    throw NumericalError("ridge solution is not finite");
  }
  return model;
}

void check_ridge_inputs(Index rows, Index y_size, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("ridge lambda must be positive");
  if (rows < 1) throw InvalidArgument("ridge_train: empty design matrix");
  if (y_size != rows) throw InvalidArgument("ridge_train: y length differs");
}

}  // namespace

RidgeModel ridge_train(const RowMatrix& x, const Vector& y, double lambda) {
  check_ridge_inputs(x.rows(), y.size(), lambda);
  const Index d = x.cols();
  Matrix gram = Matrix::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const Vector mean_x = x.colwise().mean().transpose();
  return solve_ridge(std::move(gram), x.transpose() * y, mean_x, y.mean(),
                     x.rows(), lambda);
}

RidgeModel ridge_train(const SparseMatrix& x, const Vector& y, double lambda) {
  check_ridge_inputs(x.rows(), y.size(), lambda);
  const SparseMatrix xtx = x.transpose() * x;
  Vector mean_x = Vector::Zero(x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) mean_x[it.col()] += it.value();
  }
  mean_x /= static_cast<double>(x.rows());
  return solve_ridge(Matrix(xtx), x.transpose() * y, mean_x, y.mean(), x.rows(),
                     lambda);
}

double ridge_predict(const RidgeModel& model, std::span<const double> x) {
  if (static_cast<Index>(x.size()) != model.input_dim()) {
    throw InvalidArgument("ridge_predict: dimension mismatch");
  }
  const Eigen::Map<const Vector> v(x.data(), model.input_dim());
  return model.intercept + model.beta.dot(v);
}

Vector ridge_predict(const RidgeModel& model, const RowMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw InvalidArgument("ridge_predict: dimension mismatch");
  }
  return (x * model.beta).array() + model.intercept;
}

Vector ridge_predict(const RidgeModel& model, const SparseMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw InvalidArgument("ridge_predict: dimension mismatch");
  }
  return (x * model.beta).array() + model.intercept;
}

Predictor as_predictor(RidgeModel model) {
  auto shared = std::make_shared<const RidgeModel>(std::move(model));
  return {shared->input_dim(), [shared](std::span<const double> x) {
            return ridge_predict(*shared, x);
          }};
}

}  // namespace collabrec
