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

#include <benchmark/benchmark.h>

#include <random>

#include "collabrec/collaboration.hpp"
#include "collabrec/dataset.hpp"
#include "collabrec/learners.hpp"
#include "collabrec/numerics.hpp"
#include "collabrec/seed.hpp"

namespace {

using namespace collabrec;

RatingMatrix synthetic(Index users, Index items, double density) {
  Rng rng(1);
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> score(1, 5);
  std::vector<Rating> e;
  for (Index u = 0; u < users; ++u)
    for (Index i = 0; i < items; ++i)
      if (keep(rng)) e.push_back({u, i, static_cast<double>(score(rng))});
  std::vector<std::int64_t> uid(users), iid(items);
  for (Index u = 0; u < users; ++u) uid[u] = u;
  for (Index i = 0; i < items; ++i) iid[i] = i;
  return RatingMatrix(uid, iid, e, {1.0, 5.0});
}

void BM_Flatten(benchmark::State& state) {
  const Index users = state.range(0);
  const auto r = synthetic(users, 1682, 0.06);
  std::vector<Index> all(users);
  for (Index u = 0; u < users; ++u) all[u] = u;
  const PartyAssignment a(users, {all});
  for (auto _ : state) benchmark::DoNotOptimize(flatten(r.entries(), a, r.num_items()));
  state.SetItemsProcessed(state.iterations() * r.size());
}
BENCHMARK(BM_Flatten)->Arg(100)->Arg(900)->Unit(benchmark::kMillisecond);

void BM_TruncatedSvdSparse(benchmark::State& state) {
  const auto r = synthetic(100, 1682, 0.06);
  std::vector<Index> all(100);
  for (Index u = 0; u < 100; ++u) all[u] = u;
  const auto f = flatten(r.entries(), PartyAssignment(100, {all}), r.num_items());
  for (auto _ : state) benchmark::DoNotOptimize(truncated_svd(f.x, state.range(0)));
}
BENCHMARK(BM_TruncatedSvdSparse)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_TruncatedSvdDense(benchmark::State& state) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(state.range(0), state.range(0) * 2);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(truncated_svd(a, a.rows() / 2));
}
BENCHMARK(BM_TruncatedSvdDense)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_FmEpochDense(benchmark::State& state) {
  const Index n = 2000, d = state.range(0);
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 0.05);
  RowMatrix x(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = g(rng);
    y[i] = 3.0;
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fm_train(x, y, cfg));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_FmEpochDense)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_FmEpochSparse(benchmark::State& state) {
  const auto r = synthetic(900, 1682, 0.06);
  std::vector<Index> all(900);
  for (Index u = 0; u < 900; ++u) all[u] = u;
  const auto f = flatten(r.entries(), PartyAssignment(900, {all}), r.num_items());
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fm_train(f.x, f.y, cfg));
  state.SetItemsProcessed(state.iterations() * f.rows());
}
BENCHMARK(BM_FmEpochSparse)->Unit(benchmark::kMillisecond);

void BM_Collaborate(benchmark::State& state) {
  const Index parties = state.range(0), p_tilde = 100, r = 1000;
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<PartyPayload> payloads;
  for (Index k = 0; k < parties; ++k) {
    RowMatrix xt(800, p_tilde), st(r, p_tilde);
    for (Index i = 0; i < xt.size(); ++i) xt.data()[i] = g(rng);
    for (Index i = 0; i < st.size(); ++i) st.data()[i] = g(rng);
    payloads.push_back({IntermediateRepresentation(xt), IntermediateRepresentation(st),
                        Vector::Constant(800, 3.0)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(analyzer::collaborate(payloads, 2 * p_tilde));
}
BENCHMARK(BM_Collaborate)->Arg(3)->Arg(9)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
