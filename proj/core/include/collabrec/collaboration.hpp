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

#ifndef COLLABREC_COLLABORATION_HPP_
#define COLLABREC_COLLABORATION_HPP_

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "collabrec/dataset.hpp"
#include "collabrec/seed.hpp"
#include "collabrec/types.hpp"

namespace collabrec {

// Rows that went through some party's private encoding. This is the only
// kind of feature matrix the analyzer accepts; construction is explicit so a
// raw design matrix never converts into one by accident.
class IntermediateRepresentation {
 public:
  IntermediateRepresentation() = default;
  explicit IntermediateRepresentation(RowMatrix values)
      : values_(std::move(values)) {}

  const RowMatrix& values() const { return values_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

 private:
  RowMatrix values_;
};

// Everything a party sends to the analyzer. Deliberately has no slot for the
// encoder, the anchor, or the raw design matrix.
struct PartyPayload {
  IntermediateRepresentation x_tilde;  // n(k) x p~(k)
  IntermediateRepresentation s_tilde;  // r x p~(k)
  Vector y;                            // n(k)
};

// Checks the payload's internal shape consistency.
void validate(const PartyPayload& payload);

namespace party {

// Shared synthetic instances, uniform on [0, 1). Kept by the parties; the
// analyzer API has no overload that takes one.
class AnchorDataset {
 public:
  static AnchorDataset generate(Index rows, Index cols, Rng& rng);

  const RowMatrix& values() const { return values_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

 private:
  explicit AnchorDataset(RowMatrix values) : values_(std::move(values)) {}
  RowMatrix values_;
};

// Linear encoding f(x) = x * P where P (p x p~) holds the leading right
// singular vectors of the party's training design matrix.
class Encoder {
 public:
  // 1 <= p_tilde <= min(rows, cols) and p_tilde < cols.
  static Encoder fit(const SparseMatrix& design, Index p_tilde);
  static Encoder fit(const Matrix& design, Index p_tilde);

  // Rebuilds an encoder from a stored projection; columns must be
  // orthonormal to 1e-10 and fewer than rows.
  static Encoder from_projection(RowMatrix projection);

  // The encoder made of the first p_tilde columns. Equivalent to refitting
  // with the smaller rank since the truncated SVD is nested.
  Encoder leading(Index p_tilde) const;

  Index input_dim() const { return projection_.rows(); }
  Index output_dim() const { return projection_.cols(); }
  const RowMatrix& projection() const { return projection_; }

  IntermediateRepresentation encode(const SparseMatrix& rows) const;
  IntermediateRepresentation encode(const RowMatrix& rows) const;
  IntermediateRepresentation encode(const AnchorDataset& anchor) const;

  // Single-row kernels shared by the batch paths, so a row encoded alone is
  // bit-identical to the same row encoded in a batch.
  void encode_row(std::span<const double> row, std::span<double> out) const;
  void encode_row(const SparseMatrix& rows, Index r, std::span<double> out) const;

 private:
  explicit Encoder(RowMatrix projection) : projection_(std::move(projection)) {}
  RowMatrix projection_;
};

// Phase 1 for one party: encode its training rows and the anchor.
PartyPayload make_payload(const Encoder& encoder, const FlattenedDataset& train,
                          const AnchorDataset& anchor);

}  // namespace party

namespace analyzer {

// Common coordinate frame: leading left singular vectors of the horizontally
// stacked anchor encodings.
class TargetMatrix {
 public:
  TargetMatrix() = default;
  explicit TargetMatrix(Matrix values) : values_(std::move(values)) {}
  const Matrix& values() const { return values_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

 private:
  Matrix values_;
};

// g(x~) = x~ * G with G of shape p~(k) x p^.
class IntegrationMap {
 public:
  IntegrationMap() = default;
  explicit IntegrationMap(RowMatrix g);

  const RowMatrix& matrix() const { return g_; }
  Index input_dim() const { return g_.rows(); }
  Index output_dim() const { return g_.cols(); }

  RowMatrix apply(const IntermediateRepresentation& rows) const;
  void apply_row(std::span<const double> row, std::span<double> out) const;

 private:
  RowMatrix g_;
};

struct CollabDataset {
  RowMatrix x_hat;  // n x p^
  Vector y;         // n
  std::vector<std::pair<Index, Index>> party_row_ranges;  // [start, end)
};

struct CollaborationOutcome {
  CollabDataset data;
  std::vector<IntegrationMap> maps;  // one per payload, payload order
  TargetMatrix target;
};

// Largest admissible p^: min(r, sum of p~(k)).
Index max_collaboration_dim(std::span<const PartyPayload> payloads);

// Reads only the anchor encodings of the payloads.
TargetMatrix compute_target(std::span<const PartyPayload> payloads, Index p_hat);

// G = pinv(S~) Z, the minimizer of ||Z - S~ G||_F.
IntegrationMap fit_integration(const IntermediateRepresentation& anchor_encoding,
                               const TargetMatrix& target);

// Phase 2: target, one map per party, collaboration representations stacked
// in payload order together with the responses.
CollaborationOutcome collaborate(std::span<const PartyPayload> payloads,
                                 Index p_hat);

}  // namespace analyzer

// A regression model over dense rows of a known width.
struct Predictor {
  Index input_dim = 0;
  std::function<double(std::span<const double>)> predict;
};

// h o g_k o f_k, evaluated on raw flattened rows of party k.
class ComposedPredictor {
 public:
  ComposedPredictor(Predictor model, analyzer::IntegrationMap map,
                    party::Encoder encoder);

  Index input_dim() const { return encoder_.input_dim(); }

  double operator()(std::span<const double> row) const;
  double operator()(const SparseMatrix& rows, Index r) const;
  Vector predict(const SparseMatrix& rows) const;

 private:
  Predictor model_;
  analyzer::IntegrationMap map_;
  party::Encoder encoder_;
};

ComposedPredictor compose_predictor(Predictor model, analyzer::IntegrationMap map,
                                    party::Encoder encoder);

}  // namespace collabrec

#endif  // COLLABREC_COLLABORATION_HPP_
