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

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <filesystem>
#include <fstream>
#include <random>
#include <type_traits>
#include <vector>

#include "collabrec/collaboration.hpp"
#include "collabrec/dataset.hpp"
#include "collabrec/learners.hpp"
#include "collabrec/matrix_io.hpp"
#include "collabrec/numerics.hpp"
#include "collabrec/seed.hpp"

namespace collabrec {
namespace {

namespace fs = std::filesystem;

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

RowMatrix orthonormal(Index rows, Index cols, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, seed));
  return RowMatrix(Matrix(qr.householderQ()).leftCols(cols));
}

// Low-rank ratings: user and item factors plus noise, on a 1..5 scale.
RatingMatrix synthetic_ratings(Index users, Index items, double density,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution keep(density);
  Matrix uf(users, 2), itf(items, 2);
  for (Index i = 0; i < users; ++i) uf.row(i) << g(rng), g(rng);
  for (Index i = 0; i < items; ++i) itf.row(i) << g(rng), g(rng);
  std::vector<Rating> e;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      if (!keep(rng)) continue;
      const double v = 3.0 + 0.8 * uf.row(u).dot(itf.row(i)) + 0.3 * g(rng);
      e.push_back({u, i, std::clamp(std::round(v), 1.0, 5.0)});
    }
  }
  std::vector<std::int64_t> uid(users), iid(items);
  for (Index u = 0; u < users; ++u) uid[u] = u;
  for (Index i = 0; i < items; ++i) iid[i] = i;
  return RatingMatrix(uid, iid, e, {1.0, 5.0});
}

struct Scenario {
  PartyAssignment assignment;
  std::vector<FlattenedDataset> train, test;
  std::vector<party::Encoder> encoders;
  std::vector<PartyPayload> payloads;
  party::AnchorDataset anchor;
};

Scenario build(Index parties, Index users_per_party, Index p_tilde, Index anchor_rows,
               std::uint64_t seed) {
  const auto ratings = synthetic_ratings(parties * users_per_party, 30, 0.4, seed);
  Rng split_rng = make_rng(seed, SeedStream::kSplit);
  const auto split = split_train_test(ratings, 0.2, split_rng);
  Rng part_rng = make_rng(seed, SeedStream::kPartition);
  auto assignment = partition_horizontal(split.train, parties, users_per_party, part_rng);
  Rng anchor_rng = make_rng(seed, SeedStream::kAnchor, static_cast<std::uint64_t>(parties));
  auto anchor = party::AnchorDataset::generate(
      anchor_rows, assignment.assigned_users() + ratings.num_items(), anchor_rng);
  Scenario s{assignment, {}, {}, {}, {}, anchor};
  for (Index k = 0; k < parties; ++k) {
    s.train.push_back(
        flatten(party_entries(split.train, assignment, k), assignment, ratings.num_items()));
    s.test.push_back(
        flatten(party_entries(split.test, assignment, k), assignment, ratings.num_items()));
    s.encoders.push_back(party::Encoder::fit(s.train.back().x, p_tilde));
    s.payloads.push_back(party::make_payload(s.encoders.back(), s.train.back(), anchor));
  }
  return s;
}

IntermediateRepresentation rep(const Matrix& m) { return IntermediateRepresentation(RowMatrix(m)); }

PartyPayload payload_from_anchor(const Matrix& s_tilde) {
  return PartyPayload{rep(Matrix::Zero(1, s_tilde.cols())), rep(s_tilde), Vector::Zero(1)};
}

TEST(Anchor, ShapeRangeAndMean) {
  Rng rng(0);
  const auto a = party::AnchorDataset::generate(1000, 2582, rng);
  EXPECT_EQ(a.rows(), 1000);
  EXPECT_EQ(a.cols(), 2582);
  EXPECT_GE(a.values().minCoeff(), 0.0);
  EXPECT_LT(a.values().maxCoeff(), 1.0);
  EXPECT_NEAR(a.values().mean(), 0.5, 0.001);
  Rng big_rng(0);
  EXPECT_NEAR(party::AnchorDataset::generate(1000, 1000, big_rng).values().mean(), 0.5, 0.001);
  Rng one(2);
  const auto b = party::AnchorDataset::generate(1, 1, one);
  EXPECT_GE(b.values()(0, 0), 0.0);
  EXPECT_LT(b.values()(0, 0), 1.0);
  Rng x(3), y(3);
  EXPECT_EQ(party::AnchorDataset::generate(5, 7, x).values(),
            party::AnchorDataset::generate(5, 7, y).values());
}

TEST(Encoder, IdentityDesign) {
  const auto enc = party::Encoder::fit(Matrix(Matrix::Identity(4, 4)), 2);
  EXPECT_EQ(enc.input_dim(), 4);
  EXPECT_EQ(enc.output_dim(), 2);
  const Matrix p = enc.projection();
  EXPECT_LT((p.transpose() * p - Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(Encoder, ZeroColumnsAndRankDeficiency) {
  // Rank 2 with two unrated item columns; p~ = 3 still yields 3 orthonormal columns.
  Matrix x = Matrix::Zero(3, 6);
  x(0, 0) = x(0, 3) = 1;
  x(1, 0) = x(1, 3) = 1;
  x(2, 1) = x(2, 2) = 1;
  const auto enc = party::Encoder::fit(x, 3);
  const Matrix p = enc.projection();
  EXPECT_LT((p.transpose() * p - Matrix::Identity(3, 3)).norm(), 1e-10);
  const Matrix rec = x * p * p.transpose();
  EXPECT_LT((rec - x).norm(), 1e-10);
  EXPECT_THROW(party::Encoder::fit(x, 4), InvalidArgument);
  EXPECT_THROW(party::Encoder::fit(x, 0), InvalidArgument);
  EXPECT_THROW(party::Encoder::fit(Matrix(Matrix::Identity(3, 3)), 3), InvalidArgument);
}

TEST(Encoder, EncodeShapesAndResidual) {
  auto s = build(2, 10, 8, 50, 3);
  const auto& enc = s.encoders[0];
  const auto x_tilde = enc.encode(s.train[0].x);
  EXPECT_EQ(x_tilde.rows(), s.train[0].rows());
  EXPECT_EQ(x_tilde.cols(), 8);
  const auto s_tilde = enc.encode(s.anchor);
  EXPECT_EQ(s_tilde.rows(), 50);
  EXPECT_EQ(s_tilde.cols(), 8);
  // Reconstruction error equals the discarded spectrum.
  const Matrix dense = Matrix(s.train[0].x);
  const auto svd = truncated_svd(dense, std::min(dense.rows(), dense.cols()));
  const Matrix rec = Matrix(x_tilde.values()) * Matrix(enc.projection()).transpose();
  const double discarded = svd.singular_values.tail(svd.singular_values.size() - 8).squaredNorm();
  EXPECT_NEAR((dense - rec).squaredNorm(), discarded, 1e-8);

  std::vector<double> out(8);
  const std::vector<double> one_row(dense.cols(), 0.0);
  enc.encode_row(one_row, out);
  for (double v : out) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(enc.encode_row(std::vector<double>(3), out), InvalidArgument);
}

TEST(Encoder, NonInvertibility) {
  auto s = build(1, 12, 6, 20, 4);
  const auto& enc = s.encoders[0];
  const Matrix p = enc.projection();
  const Index d = p.rows();
  Vector x = Matrix(s.train[0].x).row(0).transpose();
  Vector v = random_matrix(d, 1, 5).col(0);
  v -= p * (p.transpose() * v);  // into the null space of the encoder
  ASSERT_GT(v.norm(), 1e-3);
  const Vector x2 = x + v;
  std::vector<double> a(6), b(6);
  enc.encode_row(std::span<const double>(x.data(), d), a);
  enc.encode_row(std::span<const double>(x2.data(), d), b);
  EXPECT_GT((x - x2).norm(), 1e-3);
  for (Index f = 0; f < 6; ++f) EXPECT_NEAR(a[f], b[f], 1e-10);
}

TEST(Encoder, LeadingMatchesDirectFit) {
  auto s = build(1, 15, 10, 20, 6);
  const auto direct = party::Encoder::fit(s.train[0].x, 4);
  EXPECT_LT((Matrix(s.encoders[0].leading(4).projection()) - Matrix(direct.projection())).norm(),
            1e-8);
}

TEST(Target, SingleOrthonormalParty) {
  const Matrix s = Matrix(orthonormal(12, 4, 7)) * 3.0;
  const std::vector<PartyPayload> p = {payload_from_anchor(s)};
  const auto z = analyzer::compute_target(p, 4).values();
  EXPECT_LT((z.transpose() * z - Matrix::Identity(4, 4)).norm(), 1e-10);
  // Same column space: projecting s onto span(z) loses nothing.
  EXPECT_LT((s - z * (z.transpose() * s)).norm(), 1e-8);
  EXPECT_THROW(analyzer::compute_target(p, 5), InvalidArgument);
  EXPECT_THROW(analyzer::compute_target(std::vector<PartyPayload>{}, 1), InvalidArgument);
}

TEST(Integration, SelfAlignmentAndOrthogonalRotation) {
  const RowMatrix z = orthonormal(20, 5, 8);
  const analyzer::TargetMatrix target{Matrix(z)};
  const auto g = analyzer::fit_integration(IntermediateRepresentation(z), target);
  EXPECT_LT((Matrix(g.matrix()) - Matrix::Identity(5, 5)).norm(), 1e-8);

  const Matrix q = Matrix(orthonormal(5, 5, 9));
  const auto gq = analyzer::fit_integration(rep(Matrix(z) * q), target);
  EXPECT_LT((Matrix(gq.matrix()) - q.transpose()).norm(), 1e-8);
}

TEST(Integration, AnchorConsistencyAndOptimality) {
  auto s = build(4, 10, 12, 60, 10);
  const auto outcome = analyzer::collaborate(s.payloads, 24);
  const Matrix z = outcome.target.values();
  std::vector<Matrix> aligned;
  double worst = 0.0;
  for (std::size_t k = 0; k < s.payloads.size(); ++k) {
    aligned.push_back(Matrix(s.payloads[k].s_tilde.values()) * Matrix(outcome.maps[k].matrix()));
    worst = std::max(worst, (z - aligned.back()).norm());
  }
  for (std::size_t a = 0; a < aligned.size(); ++a)
    for (std::size_t b = 0; b < aligned.size(); ++b)
      EXPECT_LE((aligned[a] - aligned[b]).norm(), 2.0 * worst);

  for (std::size_t k = 0; k < s.payloads.size(); ++k) {
    const Matrix sk = s.payloads[k].s_tilde.values();
    const Matrix g = outcome.maps[k].matrix();
    const double base = (z - sk * g).norm();
    for (std::uint64_t t = 0; t < 25; ++t) {
      Matrix dg = random_matrix(g.rows(), g.cols(), 500 + 31 * k + t);
      dg *= 1e-3 / dg.norm();
      EXPECT_GE((z - sk * (g + dg)).norm(), base - 1e-12);
    }
  }
}

TEST(Collaborate, ShapesAndRowRanges) {
  auto s = build(3, 10, 8, 40, 11);
  const auto outcome = analyzer::collaborate(s.payloads, 16);
  Index n = 0;
  for (std::size_t k = 0; k < s.payloads.size(); ++k) {
    const auto [start, end] = outcome.data.party_row_ranges[k];
    EXPECT_EQ(start, n);
    EXPECT_EQ(end - start, s.payloads[k].x_tilde.rows());
    EXPECT_EQ(outcome.data.y.segment(start, end - start), s.payloads[k].y);
    EXPECT_EQ(outcome.maps[k].input_dim(), 8);
    EXPECT_EQ(outcome.maps[k].output_dim(), 16);
    n = end;
  }
  EXPECT_EQ(outcome.data.x_hat.rows(), n);
  EXPECT_EQ(outcome.data.x_hat.cols(), 16);
  EXPECT_EQ(analyzer::max_collaboration_dim(s.payloads), 24);
  EXPECT_THROW(analyzer::collaborate(s.payloads, 25), InvalidArgument);
}

TEST(Collaborate, SymmetricParties) {
  auto s = build(1, 12, 6, 30, 12);
  const std::vector<PartyPayload> twins = {s.payloads[0], s.payloads[0], s.payloads[0]};
  const auto outcome = analyzer::collaborate(twins, 6);
  const Matrix first = Matrix(twins[0].s_tilde.values()) * Matrix(outcome.maps[0].matrix());
  for (std::size_t k = 1; k < twins.size(); ++k) {
    EXPECT_LT((Matrix(outcome.maps[k].matrix()) - Matrix(outcome.maps[0].matrix())).norm(), 1e-8);
    EXPECT_LT((Matrix(twins[k].s_tilde.values()) * Matrix(outcome.maps[k].matrix()) - first).norm(),
              1e-8);
  }
}

TEST(Collaborate, Deterministic) {
  auto a = build(3, 8, 6, 30, 13), b = build(3, 8, 6, 30, 13);
  EXPECT_EQ(a.anchor.values(), b.anchor.values());
  const auto oa = analyzer::collaborate(a.payloads, 10), ob = analyzer::collaborate(b.payloads, 10);
  EXPECT_EQ(oa.target.values(), ob.target.values());
  EXPECT_EQ(oa.data.x_hat, ob.data.x_hat);
  for (std::size_t k = 0; k < oa.maps.size(); ++k)
    EXPECT_EQ(oa.maps[k].matrix(), ob.maps[k].matrix());
}

double pooled_rmse(const std::vector<Vector>& pred, const std::vector<FlattenedDataset>& test) {
  std::vector<double> p, y;
  for (std::size_t k = 0; k < test.size(); ++k) {
    p.insert(p.end(), pred[k].data(), pred[k].data() + pred[k].size());
    y.insert(y.end(), test[k].y.data(), test[k].y.data() + test[k].y.size());
  }
  return rmse(p, y);
}

TEST(ComposedPredictor, BitIdenticalOnTrainingRows) {
  auto s = build(3, 10, 8, 40, 14);
  const auto outcome = analyzer::collaborate(s.payloads, 12);
  TrainConfig cfg;
  cfg.latent_dim = 4;
  cfg.epochs = 3;
  const auto model = fm_train(outcome.data.x_hat, outcome.data.y, cfg);
  for (std::size_t k = 0; k < s.payloads.size(); ++k) {
    const auto h = compose_predictor(as_predictor(model), outcome.maps[k], s.encoders[k]);
    const auto [start, end] = outcome.data.party_row_ranges[k];
    for (Index i = 0; i < end - start; ++i) {
      const auto row = outcome.data.x_hat.row(start + i);
      const double direct = fm_predict(model, std::span<const double>(row.data(), row.size()));
      EXPECT_EQ(h(s.train[k].x, i), direct);
    }
    const std::vector<double> zero(s.encoders[k].input_dim(), 0.0);
    const std::vector<double> zero_hat(12, 0.0);
    EXPECT_EQ(h(zero), fm_predict(model, zero_hat));
  }
}

TEST(ComposedPredictor, TwoPathRmseAgree) {
  auto s = build(3, 10, 8, 40, 15);
  const auto outcome = analyzer::collaborate(s.payloads, 12);
  TrainConfig cfg;
  cfg.latent_dim = 4;
  cfg.epochs = 3;
  const auto model = fm_train(outcome.data.x_hat, outcome.data.y, cfg);
  std::vector<Vector> composed, analyzer_side;
  for (std::size_t k = 0; k < s.payloads.size(); ++k) {
    const auto h = compose_predictor(as_predictor(model), outcome.maps[k], s.encoders[k]);
    composed.push_back(h.predict(s.test[k].x));
    analyzer_side.push_back(fm_predict(model, outcome.maps[k].apply(s.encoders[k].encode(s.test[k].x))));
  }
  EXPECT_NEAR(pooled_rmse(composed, s.test), pooled_rmse(analyzer_side, s.test), 1e-10);
}

TEST(ComposedPredictor, DimensionMismatch) {
  auto s = build(1, 10, 6, 20, 16);
  const auto outcome = analyzer::collaborate(s.payloads, 6);
  RidgeModel wrong{0.0, Vector::Zero(5), 1.0};
  EXPECT_THROW(compose_predictor(as_predictor(wrong), outcome.maps[0], s.encoders[0]),
               InvalidArgument);
  const auto other = party::Encoder::fit(s.train[0].x, 5);
  RidgeModel right{0.0, Vector::Zero(6), 1.0};
  EXPECT_THROW(compose_predictor(as_predictor(right), outcome.maps[0], other), InvalidArgument);
}

TEST(SinglePartyPipeline, MatchesDirectTrainingOnIntermediate) {
  auto s = build(1, 60, 20, 200, 17);
  const auto outcome = analyzer::collaborate(s.payloads, 20);
  const auto& x_tilde = s.payloads[0].x_tilde;
  const auto test_tilde = s.encoders[0].encode(s.test[0].x);

  TrainConfig cfg;
  const auto collab_model = fm_train(outcome.data.x_hat, outcome.data.y, cfg);
  const auto h = compose_predictor(as_predictor(collab_model), outcome.maps[0], s.encoders[0]);
  const Vector via_collab = h.predict(s.test[0].x);
  const auto direct_model = fm_train(x_tilde.values(), s.payloads[0].y, cfg);
  const Vector direct = fm_predict(direct_model, test_tilde.values());
  const double a = rmse(via_collab, s.test[0].y), b = rmse(direct, s.test[0].y);
  EXPECT_NEAR(a, b, 0.01);

  const auto ridge_collab = ridge_train(outcome.data.x_hat, outcome.data.y, 1e-8);
  const auto ridge_direct = ridge_train(x_tilde.values(), s.payloads[0].y, 1e-8);
  const auto hr = compose_predictor(as_predictor(ridge_collab), outcome.maps[0], s.encoders[0]);
  EXPECT_NEAR(rmse(hr.predict(s.test[0].x), s.test[0].y),
              rmse(ridge_predict(ridge_direct, test_tilde.values()), s.test[0].y), 0.01);
}

TEST(PayloadIo, RoundTrip) {
  auto s = build(2, 8, 5, 15, 18);
  const fs::path dir = fs::temp_directory_path() / "collabrec_payload_io";
  fs::remove_all(dir);
  write_payload(dir, 1, s.payloads[1]);
  const auto stored = read_payload(dir);
  EXPECT_EQ(stored.party_id, 1);
  EXPECT_EQ(stored.payload.x_tilde.values(), s.payloads[1].x_tilde.values());
  EXPECT_EQ(stored.payload.s_tilde.values(), s.payloads[1].s_tilde.values());
  EXPECT_EQ(stored.payload.y, s.payloads[1].y);
  std::ifstream header(dir / "s_tilde.bin", std::ios::binary);
  std::uint64_t dims[2];
  header.read(reinterpret_cast<char*>(dims), sizeof dims);
  EXPECT_EQ(dims[0], 15u);
  EXPECT_EQ(dims[1], 5u);
  EXPECT_EQ(fs::file_size(dir / "s_tilde.bin"), 16u + 15u * 5u * 8u);
  fs::resize_file(dir / "x_tilde.bin", fs::file_size(dir / "x_tilde.bin") - 8);
  EXPECT_THROW(read_payload(dir), Error);
  fs::remove_all(dir);
}

// Analyzer entry points accept only payload-derived types.
template <typename Arg>
constexpr bool target_accepts = std::is_invocable_v<decltype(&analyzer::compute_target), Arg, Index>;
template <typename Arg>
constexpr bool collaborate_accepts =
    std::is_invocable_v<decltype(&analyzer::collaborate), Arg, Index>;
template <typename Arg>
constexpr bool integration_accepts =
    std::is_invocable_v<decltype(&analyzer::fit_integration), Arg, const analyzer::TargetMatrix&>;
template <typename Arg>
constexpr bool max_dim_accepts = std::is_invocable_v<decltype(&analyzer::max_collaboration_dim), Arg>;

template <typename Arg>
constexpr bool analyzer_rejects = !target_accepts<Arg> && !collaborate_accepts<Arg> &&
                                  !integration_accepts<Arg> && !max_dim_accepts<Arg>;

static_assert(collaborate_accepts<std::span<const PartyPayload>>);
static_assert(collaborate_accepts<std::vector<PartyPayload>&>);
static_assert(integration_accepts<const IntermediateRepresentation&>);
static_assert(analyzer_rejects<const party::Encoder&>);
static_assert(analyzer_rejects<const party::AnchorDataset&>);
static_assert(analyzer_rejects<const std::vector<party::Encoder>&>);
static_assert(analyzer_rejects<const std::vector<party::AnchorDataset>&>);
static_assert(analyzer_rejects<const SparseMatrix&>);
static_assert(analyzer_rejects<const Matrix&>);
static_assert(analyzer_rejects<const RowMatrix&>);
static_assert(analyzer_rejects<const FlattenedDataset&>);
static_assert(analyzer_rejects<const std::vector<FlattenedDataset>&>);
static_assert(analyzer_rejects<const RatingMatrix&>);
static_assert(!std::is_convertible_v<RowMatrix, IntermediateRepresentation>);
static_assert(!std::is_convertible_v<Matrix, analyzer::TargetMatrix>);
static_assert(!std::is_constructible_v<party::Encoder, PartyPayload>);
static_assert(!std::is_constructible_v<party::Encoder, IntermediateRepresentation>);
static_assert(!std::is_constructible_v<party::AnchorDataset, PartyPayload>);
static_assert(!std::is_constructible_v<party::AnchorDataset, IntermediateRepresentation>);
static_assert(!std::is_constructible_v<party::AnchorDataset, RowMatrix>);
static_assert(!std::is_constructible_v<party::Encoder, RowMatrix>);
static_assert(std::is_aggregate_v<PartyPayload>);

TEST(PrivacyBoundary, AnalyzerApiSurface) {
  EXPECT_TRUE(analyzer_rejects<const party::Encoder&>);
  EXPECT_TRUE(analyzer_rejects<const party::AnchorDataset&>);
  EXPECT_TRUE(analyzer_rejects<const SparseMatrix&>);
  EXPECT_TRUE(analyzer_rejects<const FlattenedDataset&>);
  EXPECT_TRUE(collaborate_accepts<std::span<const PartyPayload>>);
}

}  // namespace
}  // namespace collabrec
