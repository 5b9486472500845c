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

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "collabrec/harness.hpp"

namespace collabrec {
namespace {

constexpr const char* kResultsHeader = "dataset,method,learner,m,p_tilde,p_hat,rep,rmse";
constexpr const char* kAggregateHeader =
    "dataset,method,learner,m,p_tilde,p_hat,reps,mean_rmse,stderr";
constexpr const char* kSweepHeader = "dataset,method,learner,m,p_tilde,p_hat,reps,mean_rmse,stderr";

// Shortest representation that parses back to the same double.
std::string exact(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_aggregates(std::ostream& out, std::span<const AggregateRow> rows) {
  out << kAggregateHeader << "\n";
  for (const auto& a : rows) {
    out << a.dataset << ',' << to_string(a.method) << ',' << to_string(a.learner)
        << ',' << a.m << ',' << a.p_tilde << ',' << a.p_hat << ',' << a.reps
        << ',' << exact(a.mean_rmse) << ',' << exact(a.stderr_rmse) << "\n";
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string field; std::getline(ss, field, ',');) out.push_back(field);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::string_view header,
                                               std::size_t fields) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ParseError(path.string() + ": unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv(line);
    if (row.size() != fields) {
      throw ParseError(path.string() + ": expected " + std::to_string(fields) +
                       " fields");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_markdown(std::ostream& out, std::span<const AggregateRow> aggregates) {
  std::vector<std::tuple<std::string, Index>> tables;
  std::vector<Learner> learners;
  for (const auto& a : aggregates) {
    const std::tuple<std::string, Index> key{a.dataset, a.m};
    if (std::find(tables.begin(), tables.end(), key) == tables.end()) {
      tables.push_back(key);
    }
    if (std::find(learners.begin(), learners.end(), a.learner) == learners.end()) {
      learners.push_back(a.learner);
    }
  }

  for (const auto& [dataset, m] : tables) {
    out << "## " << dataset << " (m = " << m << ")\n\n";
    out << "| Analysis method | p~ | p^ |";
    for (const auto l : learners) out << ' ' << to_string(l) << " |";
    out << "\n|---|---:|---:|";
    for (std::size_t i = 0; i < learners.size(); ++i) out << "---:|";
    out << "\n";

    // One line per (method, p~, p^), learners as columns.
    std::vector<std::tuple<Method, Index, Index>> lines;
    std::map<std::tuple<Method, Index, Index, Learner>, const AggregateRow*> cells;
    for (const auto& a : aggregates) {
      if (a.dataset != dataset || a.m != m) continue;
      const std::tuple<Method, Index, Index> line{a.method, a.p_tilde, a.p_hat};
      if (std::find(lines.begin(), lines.end(), line) == lines.end()) {
        lines.push_back(line);
      }
      cells[{a.method, a.p_tilde, a.p_hat, a.learner}] = &a;
    }
    std::stable_sort(lines.begin(), lines.end(), [](const auto& x, const auto& y) {
      return std::get<0>(x) < std::get<0>(y);
    });
    for (const auto& [method, pt, ph] : lines) {
      const bool collab = method == Method::kCollaboration;
      out << "| " << to_string(method) << " | "
          << (collab ? std::to_string(pt) : "---") << " | "
          << (collab ? std::to_string(ph) : "---") << " |";
      for (const auto l : learners) {
        const auto it = cells.find({method, pt, ph, l});
        if (it == cells.end()) {
          out << "  |";
        } else {
          out << ' ' << fixed3(it->second->mean_rmse) << " (±"
              << fixed3(it->second->stderr_rmse) << ") |";
        }
      }
      out << "\n";
    }
    out << "\n";
  }
}

}  // namespace

std::vector<AggregateRow> party_sweep_rows(std::span<const AggregateRow> aggregates) {
  std::map<std::pair<std::string, Index>, std::pair<Index, Index>> setting;
  for (const auto& a : aggregates) {
    if (a.method == Method::kCollaboration) {
      setting.try_emplace({a.dataset, a.m}, a.p_tilde, a.p_hat);
    }
  }
  std::vector<AggregateRow> out;
  std::set<std::tuple<std::string, Index, Method, Learner>> seen;
  for (const auto& a : aggregates) {
    if (a.method == Method::kCollaboration &&
        std::pair{a.p_tilde, a.p_hat} != setting.at({a.dataset, a.m})) {
      continue;
    }
    if (seen.insert({a.dataset, a.m, a.method, a.learner}).second) out.push_back(a);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::tie(x.dataset, x.method, x.learner, x.m) <
           std::tie(y.dataset, y.method, y.learner, y.m);
  });
  return out;
}

void emit_report(const ExperimentResult& result, ReportFormat format,
                 const std::filesystem::path& dir) {
  if (result.rows.empty()) throw InvalidArgument("no results to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  if (format == ReportFormat::kMarkdown) {
    auto out = open_out(dir / "results.md");
    out << "# RMSE on held-out ratings\n\n"
        << "Mean over repetitions, standard error in parentheses.\n\n";
    write_markdown(out, result.aggregates);
    if (!result.warnings.empty()) {
      out << "## Warnings\n\n";
      for (const auto& w : result.warnings) out << "- " << w << "\n";
    }
    return;
  }

  {
    auto out = open_out(dir / "results.csv");
    out << kResultsHeader << "\n";
    for (const auto& r : result.rows) {
      out << r.dataset << ',' << to_string(r.method) << ',' << to_string(r.learner)
          << ',' << r.m << ',' << r.p_tilde << ',' << r.p_hat << ',' << r.rep
          << ',' << exact(r.rmse) << "\n";
    }
  }
  {
    auto out = open_out(dir / "aggregate.csv");
    write_aggregates(out, result.aggregates);
  }
  {
    auto out = open_out(dir / "party_sweep.csv");
    write_aggregates(out, party_sweep_rows(result.aggregates));
  }
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::vector<ResultRow> out;
  for (const auto& f : read_csv(path, kResultsHeader, 8)) {
    out.push_back({f[0], parse_method(f[1]), parse_learner(f[2]), std::stoll(f[3]),
                   std::stoll(f[4]), std::stoll(f[5]), std::stoll(f[6]),
                   std::stod(f[7])});
  }
  return out;
}

std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path) {
  std::vector<AggregateRow> out;
  for (const auto& f : read_csv(path, kAggregateHeader, 9)) {
    out.push_back({f[0], parse_method(f[1]), parse_learner(f[2]), std::stoll(f[3]),
                   std::stoll(f[4]), std::stoll(f[5]), std::stoll(f[6]),
                   std::stod(f[7]), std::stod(f[8])});
  }
  return out;
}

void write_manifest(const ExperimentConfig& config,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto out = open_out(dir / "manifest.txt");
  auto join = [](const auto& values) {
    std::ostringstream s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s << ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(values[i])>, Method> ||
                    std::is_same_v<std::decay_t<decltype(values[i])>, Learner>) {
        s << to_string(values[i]);
      } else {
        s << values[i];
      }
    }
    return s.str();
  };
  out << "# collabrec run manifest\n"
      << "dataset=" << to_string(config.dataset) << "\n"
      << "data_path=" << config.data_path.string() << "\n"
      << "methods=" << join(config.methods) << "\n"
      << "learners=" << join(config.learners) << "\n"
      << "parties=" << config.parties << "\n"
      << "party_sweep=" << join(config.party_sweep) << "\n"
      << "users_per_party=" << config.users_per_party << "\n"
      << "p_tilde=" << join(config.p_tilde) << "\n"
      << "p_hat_ratio=" << join(config.p_hat_ratio) << "\n"
      << "p_hat=" << join(config.p_hat_absolute) << "\n"
      << "anchor_size=" << config.anchor_size << "\n"
      << "test_fraction=" << config.test_fraction << "\n"
      << "repetitions=" << config.repetitions << "\n"
      << "base_seed=" << config.base_seed << "\n"
      << "vertical=" << config.vertical << "\n"
      << "clip=" << config.clip << "\n"
      << "reduce_dims=" << (config.reduce_dims ? std::to_string(*config.reduce_dims) : "")
      << "\n"
      << "ridge_lambda=" << config.ridge_lambda << "\n"
      << "fm.latent_dim=" << config.fm.latent_dim << "\n"
      << "fm.epochs=" << config.fm.epochs << "\n"
      << "fm.learning_rate=" << config.fm.learning_rate << "\n"
      << "fm.lr_decay=" << config.fm.lr_decay << "\n"
      << "fm.init_scale=" << config.fm.init_scale << "\n"
      << "fm.l2_linear=" << config.fm.l2_linear << "\n"
      << "fm.l2_latent=" << config.fm.l2_latent << "\n"
      << "fm.shuffle=" << config.fm.shuffle << "\n"
      << "threads=" << config.threads << "\n"
      << "\n# fixed procedure\n"
      << "split=per user, round(test_fraction * count) held out (ties up), "
         "users with one rating train only\n"
      << "unassigned_users=dropped from train and test\n"
      << "user_column_order=party block order\n"
      << "flattened_row_order=(user, item)\n"
      << "encoder=top-p~ right singular vectors of the party training design, "
         "no centering\n"
      << "anchor=uniform [0,1), one per repetition and party count, shared by "
         "all settings\n"
      << "target=top-p^ left singular vectors of [S~(1) ... S~(m)]\n"
      << "integration=pinv(S~(k)) Z, cutoff max(r, p~) * sigma_max * 1e-12\n"
      << "p_hat_clamp=min(r, sum p~) with a warning\n"
      << "individual_rmse=pooled over all parties' test ratings\n"
      << "party_sweep=nested prefixes of one assignment per repetition\n"
      << "seeds=repetition i uses base_seed + i; sub-seeds by splitmix64 "
         "(split, partition, anchor per m, learner per party)\n"
      << "svd_sign=largest-magnitude entry of each right singular vector "
         "positive\n";
}

}  // namespace collabrec
