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

#include "collabrec/collaboration.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "collabrec/numerics.hpp"

namespace collabrec {
namespace {

// out = sum_j row[j] * m.row(j), j ascending, zero entries skipped.
void accumulate_dense(std::span<const double> row, const RowMatrix& m,
                      std::span<double> out) {
  Eigen::Map<Eigen::RowVectorXd> acc(out.data(), static_cast<Index>(out.size()));
  acc.setZero();
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) acc.noalias() += row[j] * m.row(static_cast<Index>(j));
  }
}

void accumulate_sparse(const SparseMatrix& rows, Index r, const RowMatrix& m,
                       std::span<double> out) {
  Eigen::Map<Eigen::RowVectorXd> acc(out.data(), static_cast<Index>(out.size()));
  acc.setZero();
  for (SparseMatrix::InnerIterator it(rows, r); it; ++it) {
    if (it.value() != 0.0) acc.noalias() += it.value() * m.row(it.col());
  }
}

std::span<double> row_span(RowMatrix& m, Index r) {
  return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

std::span<const double> row_span(const RowMatrix& m, Index r) {
  return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

void check_orthonormal_encoder(const RowMatrix& projection) {
  if (projection.cols() < 1 || projection.cols() >= projection.rows()) {
    throw InvalidArgument("encoder must reduce dimension: p~ = " +
                          std::to_string(projection.cols()) + ", p = " +
                          std::to_string(projection.rows()));
  }
  const Matrix gram = projection.transpose() * projection;
  const double err =
      (gram - Matrix::Identity(gram.rows(), gram.cols())).norm();
  if (!(err <= 1e-10)) {
    throw InvalidArgument("encoder projection is not column-orthonormal");
  }
}

}  // namespace

void validate(const PartyPayload& payload) {
  if (payload.x_tilde.cols() != payload.s_tilde.cols()) {
    throw InvalidArgument("payload: X~ and S~ have different widths");
  }
  if (payload.x_tilde.rows() != payload.y.size()) {
    throw InvalidArgument("payload: X~ rows and y length differ");
  }
  if (payload.s_tilde.rows() < 1 || payload.s_tilde.cols() < 1) {
    throw InvalidArgument("payload: empty anchor encoding");
  }
}

namespace party {

AnchorDataset AnchorDataset::generate(Index rows, Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw InvalidArgument("anchor dimensions must be positive");
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  RowMatrix values(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) values(i, j) = uniform(rng);
  }
  return AnchorDataset(std::move(values));
}

namespace {

template <typename Design>
Encoder fit_impl(const Design& design, Index p_tilde) {
  const Index p = design.cols();
  if (p_tilde < 1 || p_tilde > std::min(design.rows(), p) || p_tilde >= p) {
    throw InvalidArgument("encoder dimension " + std::to_string(p_tilde) +
                          " invalid for a " + std::to_string(design.rows()) +
                          " x " + std::to_string(p) + " design");
  }
  auto svd = truncated_svd(design, p_tilde);
  return Encoder::from_projection(RowMatrix(std::move(svd.v)));
}

}  // namespace

Encoder Encoder::fit(const SparseMatrix& design, Index p_tilde) {
  return fit_impl(design, p_tilde);
}

Encoder Encoder::fit(const Matrix& design, Index p_tilde) {
  return fit_impl(design, p_tilde);
}

Encoder Encoder::from_projection(RowMatrix projection) {
  check_orthonormal_encoder(projection);
  return Encoder(std::move(projection));
}

Encoder Encoder::leading(Index p_tilde) const {
  if (p_tilde < 1 || p_tilde > output_dim()) {
    throw InvalidArgument("leading: p~ out of range");
  }
  return Encoder(projection_.leftCols(p_tilde));
}

void Encoder::encode_row(std::span<const double> row,
                         std::span<double> out) const {
  if (static_cast<Index>(row.size()) != input_dim() ||
      static_cast<Index>(out.size()) != output_dim()) {
    throw InvalidArgument("encode: dimension mismatch");
  }
  accumulate_dense(row, projection_, out);
}

void Encoder::encode_row(const SparseMatrix& rows, Index r,
                         std::span<double> out) const {
  if (rows.cols() != input_dim() ||
      static_cast<Index>(out.size()) != output_dim()) {
    throw InvalidArgument("encode: dimension mismatch");
  }
  accumulate_sparse(rows, r, projection_, out);
}

IntermediateRepresentation Encoder::encode(const SparseMatrix& rows) const {
  if (rows.cols() != input_dim()) {
    throw InvalidArgument("encode: expected " + std::to_string(input_dim()) +
                          " columns, got " + std::to_string(rows.cols()));
  }
  RowMatrix out(rows.rows(), output_dim());
  for (Index r = 0; r < rows.rows(); ++r) {
    accumulate_sparse(rows, r, projection_, row_span(out, r));
  }
  return IntermediateRepresentation(std::move(out));
}

IntermediateRepresentation Encoder::encode(const RowMatrix& rows) const {
  if (rows.cols() != input_dim()) {
    throw InvalidArgument("encode: expected " + std::to_string(input_dim()) +
                          " columns, got " + std::to_string(rows.cols()));
  }
  RowMatrix out(rows.rows(), output_dim());
  for (Index r = 0; r < rows.rows(); ++r) {
    accumulate_dense(row_span(rows, r), projection_, row_span(out, r));
  }
  return IntermediateRepresentation(std::move(out));
}

IntermediateRepresentation Encoder::encode(const AnchorDataset& anchor) const {
  return encode(anchor.values());
}

PartyPayload make_payload(const Encoder& encoder, const FlattenedDataset& train,
                          const AnchorDataset& anchor) {
  if (anchor.cols() != encoder.input_dim()) {
    throw InvalidArgument("anchor width differs from the encoder input");
  }
  PartyPayload payload{encoder.encode(train.x), encoder.encode(anchor),
                       train.y};
  validate(payload);
  return payload;
}

}  // namespace party

namespace analyzer {

IntegrationMap::IntegrationMap(RowMatrix g) : g_(std::move(g)) {
  if (!g_.allFinite()) {
    throw NumericalError("integration map has non-finite entries");
  }
}

void IntegrationMap::apply_row(std::span<const double> row,
                               std::span<double> out) const {
  if (static_cast<Index>(row.size()) != input_dim() ||
      static_cast<Index>(out.size()) != output_dim()) {
    throw InvalidArgument("integration map: dimension mismatch");
  }
  accumulate_dense(row, g_, out);
}

RowMatrix IntegrationMap::apply(const IntermediateRepresentation& rows) const {
  if (rows.cols() != input_dim()) {
    throw InvalidArgument("integration map expects " +
                          std::to_string(input_dim()) + " columns, got " +
                          std::to_string(rows.cols()));
  }
  RowMatrix out(rows.rows(), output_dim());
  for (Index r = 0; r < rows.rows(); ++r) {
    accumulate_dense(row_span(rows.values(), r), g_, row_span(out, r));
  }
  return out;
}

Index max_collaboration_dim(std::span<const PartyPayload> payloads) {
  if (payloads.empty()) return 0;
  Index total = 0;
  for (const auto& p : payloads) total += p.s_tilde.cols();
  return std::min(payloads.front().s_tilde.rows(), total);
}

TargetMatrix compute_target(std::span<const PartyPayload> payloads,
                            Index p_hat) {
  if (payloads.empty()) throw InvalidArgument("no payloads");
  const Index r = payloads.front().s_tilde.rows();
  Index width = 0;
  for (const auto& p : payloads) {
    if (p.s_tilde.rows() != r) {
      throw InvalidArgument("anchor encodings disagree on the anchor size");
    }
    width += p.s_tilde.cols();
  }
  if (p_hat < 1 || p_hat > std::min(r, width)) {
    throw InvalidArgument("p^ = " + std::to_string(p_hat) +
                          " exceeds min(r, sum p~) = " +
                          std::to_string(std::min(r, width)));
  }
  Matrix stacked(r, width);
  Index offset = 0;
  for (const auto& p : payloads) {
    stacked.middleCols(offset, p.s_tilde.cols()) = p.s_tilde.values();
    offset += p.s_tilde.cols();
  }
  return TargetMatrix(std::move(truncated_svd(stacked, p_hat).u));
}

IntegrationMap fit_integration(const IntermediateRepresentation& anchor_encoding,
                               const TargetMatrix& target) {
  if (anchor_encoding.rows() != target.rows()) {
    throw InvalidArgument("anchor encoding and target differ in row count");
  }
  return IntegrationMap(
      RowMatrix(pseudoinverse_solve(Matrix(anchor_encoding.values()),
                                    target.values())));
}

CollaborationOutcome collaborate(std::span<const PartyPayload> payloads,
                                 Index p_hat) {
  for (const auto& p : payloads) validate(p);
  CollaborationOutcome out;
  out.target = compute_target(payloads, p_hat);

  Index n = 0;
  for (const auto& p : payloads) n += p.x_tilde.rows();
  out.data.x_hat.resize(n, p_hat);
  out.data.y.resize(n);

  Index offset = 0;
  for (const auto& p : payloads) {
    auto map = fit_integration(p.s_tilde, out.target);
    const Index rows = p.x_tilde.rows();
    for (Index r = 0; r < rows; ++r) {
      map.apply_row(row_span(p.x_tilde.values(), r),
                    row_span(out.data.x_hat, offset + r));
    }
    out.data.y.segment(offset, rows) = p.y;
    out.data.party_row_ranges.emplace_back(offset, offset + rows);
    out.maps.push_back(std::move(map));
    offset += rows;
  }
  return out;
}

}  // namespace analyzer

ComposedPredictor::ComposedPredictor(Predictor model,
                                     analyzer::IntegrationMap map,
                                     party::Encoder encoder)
    : model_(std::move(model)),
      map_(std::move(map)),
      encoder_(std::move(encoder)) {
  if (encoder_.output_dim() != map_.input_dim()) {
    throw InvalidArgument("compose: encoder emits " +
                          std::to_string(encoder_.output_dim()) +
                          " columns, integration map expects " +
                          std::to_string(map_.input_dim()));
  }
  if (map_.output_dim() != model_.input_dim) {
    throw InvalidArgument("compose: integration map emits " +
                          std::to_string(map_.output_dim()) +
                          " columns, model expects " +
                          std::to_string(model_.input_dim));
  }
}

double ComposedPredictor::operator()(std::span<const double> row) const {
  std::vector<double> encoded(encoder_.output_dim());
  std::vector<double> mapped(map_.output_dim());
  encoder_.encode_row(row, encoded);
  map_.apply_row(encoded, mapped);
  return model_.predict(mapped);
}

double ComposedPredictor::operator()(const SparseMatrix& rows, Index r) const {
  std::vector<double> encoded(encoder_.output_dim());
  std::vector<double> mapped(map_.output_dim());
  encoder_.encode_row(rows, r, encoded);
  map_.apply_row(encoded, mapped);
  return model_.predict(mapped);
}

Vector ComposedPredictor::predict(const SparseMatrix& rows) const {
  Vector out(rows.rows());
  std::vector<double> encoded(encoder_.output_dim());
  std::vector<double> mapped(map_.output_dim());
  for (Index r = 0; r < rows.rows(); ++r) {
    encoder_.encode_row(rows, r, encoded);
    map_.apply_row(encoded, mapped);
    out[r] = model_.predict(mapped);
  }
  return out;
}

ComposedPredictor compose_predictor(Predictor model,
                                    analyzer::IntegrationMap map,
                                    party::Encoder encoder) {
  return ComposedPredictor(std::move(model), std::move(map), std::move(encoder));
}

}  // namespace collabrec
