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

#ifndef COLLABREC_HARNESS_HPP_
#define COLLABREC_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabrec/dataset.hpp"
#include "collabrec/learners.hpp"

namespace collabrec {

enum class DatasetKind { kMovieLens, kSushi };
enum class Method { kIndividual, kCentralized, kCollaboration };
enum class Learner { kFm, kRidge };

std::string_view to_string(DatasetKind kind);
std::string_view to_string(Method method);
std::string_view to_string(Learner learner);
DatasetKind parse_dataset(std::string_view name);
Method parse_method(std::string_view name);
Learner parse_learner(std::string_view name);

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::kMovieLens;
  std::filesystem::path data_path;
  std::vector<Method> methods = {Method::kIndividual, Method::kCentralized,
                                 Method::kCollaboration};
  std::vector<Learner> learners = {Learner::kFm};
  Index parties = 9;
  Index users_per_party = 100;
  std::vector<Index> p_tilde = {100, 200, 400};
  // p^ settings per p~: ratios of p~ unless absolute values are given.
  std::vector<double> p_hat_ratio = {0.5, 1.0, 2.0};
  std::vector<Index> p_hat_absolute;
  Index anchor_size = 1000;
  double test_fraction = 0.2;
  Index repetitions = 10;
  std::uint64_t base_seed = 42;
  bool vertical = false;
  bool clip = false;
  std::optional<Index> reduce_dims;  // ridge on flattened data only
  std::vector<Index> party_sweep;    // empty: just `parties`
  TrainConfig fm;
  double ridge_lambda = 1.0;
  Index threads = 1;
  std::filesystem::path output_dir;

  void validate() const;
  std::vector<Index> party_counts() const;
  std::vector<Index> p_hats_for(Index p_tilde) const;
};

struct ResultRow {
  std::string dataset;
  Method method = Method::kIndividual;
  Learner learner = Learner::kFm;
  Index m = 0;
  Index p_tilde = 0;  // 0 for individual and centralized rows
  Index p_hat = 0;
  Index rep = 0;
  double rmse = 0.0;
};

struct AggregateRow {
  std::string dataset;
  Method method = Method::kIndividual;
  Learner learner = Learner::kFm;
  Index m = 0;
  Index p_tilde = 0;
  Index p_hat = 0;
  Index reps = 0;
  double mean_rmse = 0.0;
  double stderr_rmse = 0.0;  // sample std / sqrt(reps), 0 for one repetition
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> warnings;
};

// Raised when a repetition fails; the message names the stage.
class StageError : public Error {
 public:
  using Error::Error;
};

RatingMatrix load_dataset(const ExperimentConfig& config);

// One seeded repetition with seed base_seed + rep. Every method sees the
// same split and party assignment.
std::vector<ResultRow> run_repetition(const ExperimentConfig& config,
                                      const RatingMatrix& ratings, Index rep,
                                      std::vector<std::string>* warnings);

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const RatingMatrix& ratings);

// Groups rows by (dataset, method, learner, m, p~, p^) in first-seen order.
std::vector<AggregateRow> aggregate(std::span<const ResultRow> rows);

enum class ReportFormat { kCsv, kMarkdown };

// kCsv writes results.csv, aggregate.csv and party_sweep.csv; kMarkdown
// writes results.md. Creates `dir` if needed.
void emit_report(const ExperimentResult& result, ReportFormat format,
                 const std::filesystem::path& dir);

// Per-m aggregates, one row per (m, method, learner). Collaboration uses the
// first (p~, p^) setting that appears in the aggregates.
std::vector<AggregateRow> party_sweep_rows(std::span<const AggregateRow> aggregates);

void write_manifest(const ExperimentConfig& config,
                    const std::filesystem::path& dir);

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path);

}  // namespace collabrec

#endif  // COLLABREC_HARNESS_HPP_
