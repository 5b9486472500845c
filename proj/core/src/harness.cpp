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

#include "collabrec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "collabrec/collaboration.hpp"
#include "collabrec/numerics.hpp"
#include "collabrec/seed.hpp"

namespace collabrec {
namespace {

template <typename Fn>
auto in_stage(Index rep, const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("repetition " + std::to_string(rep) + ", " + stage + ": " +
                     e.what());
  }
}

// Pools predictions of several parties before scoring.
class PooledScore {
 public:
  explicit PooledScore(std::optional<RatingScale> clip) : clip_(clip) {}

  void add(const Vector& predicted, const Vector& actual) {
    for (Index i = 0; i < predicted.size(); ++i) {
      double p = predicted[i];
      if (clip_) p = std::clamp(p, clip_->min, clip_->max);
      predicted_.push_back(p);
      actual_.push_back(actual[i]);
    }
  }

  double rmse() const { return collabrec::rmse(predicted_, actual_); }

 private:
  std::optional<RatingScale> clip_;
  std::vector<double> predicted_;
  std::vector<double> actual_;
};

TrainConfig fm_config(const ExperimentConfig& config, std::uint64_t seed) {
  TrainConfig fm = config.fm;
  fm.seed = seed;
  return fm;
}

// Trains a learner on one-hot rows and predicts the test rows.
Vector fit_predict_flat(const ExperimentConfig& config, Learner learner,
                        const FlattenedDataset& train,
                        const FlattenedDataset& test, std::uint64_t seed) {
  switch (learner) {
    case Learner::kFm: {
      const auto model = fm_train(train.x, train.y, fm_config(config, seed));
      return fm_predict(model, test.x);
    }
    case Learner::kRidge: {
      if (config.reduce_dims) {
        const auto svd = truncated_svd(train.x, *config.reduce_dims);
        const RowMatrix reduced_train = train.x * svd.v;
        const RowMatrix reduced_test = test.x * svd.v;
        const auto model =
            ridge_train(reduced_train, train.y, config.ridge_lambda);
        return ridge_predict(model, reduced_test);
      }
      const auto model = ridge_train(train.x, train.y, config.ridge_lambda);
      return ridge_predict(model, test.x);
    }
  }
  throw InvalidArgument("unknown learner");
}

Predictor fit_dense(const ExperimentConfig& config, Learner learner,
                    const RowMatrix& x, const Vector& y, std::uint64_t seed) {
  switch (learner) {
    case Learner::kFm:
      return as_predictor(fm_train(x, y, fm_config(config, seed)));
    case Learner::kRidge:
      return as_predictor(ridge_train(x, y, config.ridge_lambda));
  }
  throw InvalidArgument("unknown learner");
}

struct PartyData {
  std::vector<FlattenedDataset> train;
  std::vector<FlattenedDataset> test;
};

}  // namespace

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::kMovieLens ? "movielens" : "sushi";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kIndividual: return "individual";
    case Method::kCentralized: return "centralized";
    case Method::kCollaboration: return "collaboration";
  }
  return "?";
}

std::string_view to_string(Learner learner) {
  return learner == Learner::kFm ? "fm" : "ridge";
}

DatasetKind parse_dataset(std::string_view name) {
  if (name == "movielens") return DatasetKind::kMovieLens;
  if (name == "sushi") return DatasetKind::kSushi;
  throw InvalidArgument("unknown dataset '" + std::string(name) + "'");
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::kIndividual, Method::kCentralized, Method::kCollaboration}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

Learner parse_learner(std::string_view name) {
  for (auto l : {Learner::kFm, Learner::kRidge}) {
    if (to_string(l) == name) return l;
  }
  throw InvalidArgument("unknown learner '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw InvalidArgument("no analysis methods selected");
  if (learners.empty()) throw InvalidArgument("no learners selected");
  if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
  if (parties < 1 || users_per_party < 1) {
    throw InvalidArgument("parties and users per party must be positive");
  }
  for (const auto m : party_sweep) {
    if (m < 1) throw InvalidArgument("party sweep values must be positive");
  }
  if (anchor_size < 1) throw InvalidArgument("anchor size must be positive");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must lie in [0, 1)");
  }
  const bool collab = std::find(methods.begin(), methods.end(),
                                Method::kCollaboration) != methods.end();
  if (collab) {
    if (p_tilde.empty()) throw InvalidArgument("no p~ values given");
    for (const auto pt : p_tilde) {
      if (pt < 1) throw InvalidArgument("p~ values must be positive");
      for (const auto ph : p_hats_for(pt)) {
        if (ph < 1) {
          throw InvalidArgument("p^ setting below 1 for p~ = " + std::to_string(pt));
        }
      }
    }
    if (p_hat_ratio.empty() && p_hat_absolute.empty()) {
      throw InvalidArgument("no p^ values given");
    }
  }
  if (reduce_dims && *reduce_dims < 1) {
    throw InvalidArgument("reduce-dims must be positive");
  }
  if (!(ridge_lambda > 0.0)) throw InvalidArgument("ridge lambda must be positive");
  if (threads < 1) throw InvalidArgument("threads must be positive");
  fm.validate();
}

std::vector<Index> ExperimentConfig::party_counts() const {
  return party_sweep.empty() ? std::vector<Index>{parties} : party_sweep;
}

std::vector<Index> ExperimentConfig::p_hats_for(Index pt) const {
  if (!p_hat_absolute.empty()) return p_hat_absolute;
  std::vector<Index> out;
  for (const auto ratio : p_hat_ratio) {
    out.push_back(static_cast<Index>(std::llround(ratio * static_cast<double>(pt))));
  }
  return out;
}

RatingMatrix load_dataset(const ExperimentConfig& config) {
  auto ratings = config.dataset == DatasetKind::kMovieLens
                     ? load_movielens(config.data_path)
                     : load_sushi(config.data_path);
  return config.vertical ? transpose(ratings) : ratings;
}

std::vector<ResultRow> run_repetition(const ExperimentConfig& config,
                                      const RatingMatrix& ratings, Index rep,
                                      std::vector<std::string>* warnings) {
  const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(rep);
  const std::string dataset(to_string(config.dataset));
  const std::optional<RatingScale> clip =
      config.clip ? std::optional<RatingScale>(ratings.scale()) : std::nullopt;
  auto warn = [&](std::string message) {
    if (warnings) warnings->push_back(std::move(message));
  };

  const auto split = in_stage(rep, "split", [&] {
    Rng rng = make_rng(seed, SeedStream::kSplit);
    return split_train_test(ratings, config.test_fraction, rng);
  });
  const auto counts = config.party_counts();
  const Index m_max = *std::max_element(counts.begin(), counts.end());
  const auto full_assignment = in_stage(rep, "partition", [&] {
    Rng rng = make_rng(seed, SeedStream::kPartition);
    return partition_horizontal(split.train, m_max, config.users_per_party, rng);
  });

  std::vector<ResultRow> rows;
  auto emit = [&](Method method, Learner learner, Index m, Index pt, Index ph,
                  double value) {
    rows.push_back({dataset, method, learner, m, pt, ph, rep, value});
  };

  for (const Index m : counts) {
    const auto assignment = full_assignment.prefix(m);
    const auto data = in_stage(rep, "flatten (m=" + std::to_string(m) + ")", [&] {
      PartyData d;
      for (Index k = 0; k < m; ++k) {
        d.train.push_back(flatten(party_entries(split.train, assignment, k),
                                  assignment, ratings.num_items()));
        d.test.push_back(flatten(party_entries(split.test, assignment, k),
                                 assignment, ratings.num_items()));
      }
      return d;
    });

    for (const Method method : config.methods) {
      const std::string tag = std::string(to_string(method)) + " (m=" +
                              std::to_string(m) + ")";
      switch (method) {
        case Method::kIndividual:
          for (const Learner learner : config.learners) {
            PooledScore score(clip);
            for (Index k = 0; k < m; ++k) {
              const auto predicted = in_stage(
                  rep, tag + ", party " + std::to_string(k) + ", train " +
                           std::string(to_string(learner)),
                  [&] {
                    return fit_predict_flat(
                        config, learner, data.train[k], data.test[k],
                        derive_seed(seed, SeedStream::kLearner, k));
                  });
              score.add(predicted, data.test[k].y);
            }
            emit(method, learner, m, 0, 0,
                 in_stage(rep, tag + ", score", [&] { return score.rmse(); }));
          }
          break;

        case Method::kCentralized: {
          const auto train = stack(data.train);
          const auto test = stack(data.test);
          for (const Learner learner : config.learners) {
            const auto predicted = in_stage(
                rep, tag + ", train " + std::string(to_string(learner)), [&] {
                  return fit_predict_flat(config, learner, train, test,
                                          derive_seed(seed, SeedStream::kLearner, 0));
                });
            PooledScore score(clip);
            score.add(predicted, test.y);
            emit(method, learner, m, 0, 0,
                 in_stage(rep, tag + ", score", [&] { return score.rmse(); }));
          }
          break;
        }

        case Method::kCollaboration: {
          const Index p = data.train.front().cols();
          const auto anchor = in_stage(rep, tag + ", anchor", [&] {
            Rng rng = make_rng(seed, SeedStream::kAnchor, static_cast<std::uint64_t>(m));
            return party::AnchorDataset::generate(config.anchor_size, p, rng);
          });
          const Index widest =
              *std::max_element(config.p_tilde.begin(), config.p_tilde.end());
          std::vector<party::Encoder> encoders;
          for (Index k = 0; k < m; ++k) {
            encoders.push_back(in_stage(
                rep, tag + ", party " + std::to_string(k) + ", encoder", [&] {
                  return party::Encoder::fit(data.train[k].x, widest);
                }));
          }

          for (const Index pt : config.p_tilde) {
            std::vector<party::Encoder> active;
            std::vector<PartyPayload> payloads;
            for (Index k = 0; k < m; ++k) {
              active.push_back(encoders[k].leading(pt));
              payloads.push_back(in_stage(
                  rep, tag + ", party " + std::to_string(k) + ", encode", [&] {
                    return party::make_payload(active.back(), data.train[k], anchor);
                  }));
            }
            const Index limit = analyzer::max_collaboration_dim(payloads);
            std::set<Index> done;
            for (const Index requested : config.p_hats_for(pt)) {
              const Index ph = std::min(requested, limit);
              if (ph < requested) {
                warn("m=" + std::to_string(m) + ", p~=" + std::to_string(pt) +
                     ": p^=" + std::to_string(requested) + " clamped to " +
                     std::to_string(ph) + " = min(r, sum p~)");
              }
              if (!done.insert(ph).second) continue;

              const auto outcome = in_stage(
                  rep, tag + ", p~=" + std::to_string(pt) + ", p^=" +
                           std::to_string(ph) + ", integrate",
                  [&] { return analyzer::collaborate(payloads, ph); });
              for (const Learner learner : config.learners) {
                const std::string where = tag + ", p~=" + std::to_string(pt) +
                                          ", p^=" + std::to_string(ph) + ", " +
                                          std::string(to_string(learner));
                const auto model = in_stage(rep, where + " train", [&] {
                  return fit_dense(config, learner, outcome.data.x_hat,
                                   outcome.data.y,
                                   derive_seed(seed, SeedStream::kLearner, 0));
                });
                PooledScore score(clip);
                for (Index k = 0; k < m; ++k) {
                  const auto predicted = in_stage(
                      rep, where + " predict, party " + std::to_string(k), [&] {
                        return compose_predictor(model, outcome.maps[k], active[k])
                            .predict(data.test[k].x);
                      });
                  score.add(predicted, data.test[k].y);
                }
                emit(method, learner, m, pt, ph,
                     in_stage(rep, where + " score", [&] { return score.rmse(); }));
              }
            }
          }
          break;
        }
      }
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto ratings = in_stage(0, "load dataset", [&] { return load_dataset(config); });
  return run_experiment(config, ratings);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const RatingMatrix& ratings) {
  config.validate();
  const Index reps = config.repetitions;
  std::vector<std::vector<ResultRow>> per_rep(reps);
  std::vector<std::vector<std::string>> per_rep_warnings(reps);
  std::vector<std::exception_ptr> errors(reps);

  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index rep; (rep = next.fetch_add(1)) < reps;) {
      try {
        per_rep[rep] = run_repetition(config, ratings, rep, &per_rep_warnings[rep]);
      } catch (...) {
        errors[rep] = std::current_exception();
      }
    }
  };
  const Index threads = std::min(config.threads, reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ExperimentResult result;
  std::set<std::string> seen;
  for (Index rep = 0; rep < reps; ++rep) {
    result.rows.insert(result.rows.end(), per_rep[rep].begin(), per_rep[rep].end());
    for (auto& w : per_rep_warnings[rep]) {
      if (seen.insert(w).second) result.warnings.push_back(std::move(w));
    }
  }
  result.aggregates = aggregate(result.rows);
  if (reps == 1) {
    result.warnings.push_back(
        "a single repetition was run; standard errors are reported as 0");
  }

  for (Index rep = 0; rep < reps; ++rep) {
    if (!errors[rep]) continue;
    if (!config.output_dir.empty() && !result.rows.empty()) {
      emit_report(result, ReportFormat::kCsv, config.output_dir);
    }
    std::rethrow_exception(errors[rep]);
  }
  return result;
}

std::vector<AggregateRow> aggregate(std::span<const ResultRow> rows) {
  using Key = std::tuple<std::string, Method, Learner, Index, Index, Index>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) {
    Key key{r.dataset, r.method, r.learner, r.m, r.p_tilde, r.p_hat};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.rmse);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& values = groups.at(key);
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= n;
    double stderr_rmse = 0.0;
    if (values.size() > 1) {
      double ss = 0.0;
      for (const double v : values) ss += (v - mean) * (v - mean);
      stderr_rmse = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    const auto& [dataset, method, learner, m, pt, ph] = key;
    out.push_back({dataset, method, learner, m, pt, ph,
                   static_cast<Index>(values.size()), mean, stderr_rmse});
  }
  return out;
}

}  // namespace collabrec
