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

// collabrec: privacy-preserving collaborative rating prediction experiments.
//
//   collabrec run      -- individual / centralized / collaboration comparison
//   collabrec encode   -- party side: write one payload directory per party
//   collabrec analyze  -- analyzer side: integrate payloads, train, save

#ifdef COLLABREC_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "collabrec/collaboration.hpp"
#include "collabrec/harness.hpp"
#include "collabrec/matrix_io.hpp"

namespace {

using namespace collabrec;

template <typename T>
std::vector<T> parse_list(const std::string& text, T (*parse)(std::string_view)) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

void add_fm_options(CLI::App* cmd, TrainConfig& fm) {
  cmd->add_option("--fm-latent", fm.latent_dim, "FM latent dimension")
      ->capture_default_str();
  cmd->add_option("--fm-epochs", fm.epochs, "FM SGD epochs")->capture_default_str();
  cmd->add_option("--fm-lr", fm.learning_rate, "FM initial learning rate")
      ->capture_default_str();
  cmd->add_option("--fm-lr-decay", fm.lr_decay,
                  "learning rate at epoch t is lr / (1 + decay * (t - 1))")
      ->capture_default_str();
  cmd->add_option("--fm-init", fm.init_scale, "std of the latent initialization")
      ->capture_default_str();
  cmd->add_option("--fm-l2-linear", fm.l2_linear)->capture_default_str();
  cmd->add_option("--fm-l2-latent", fm.l2_latent)->capture_default_str();
  cmd->add_option("--fm-scale-inputs", fm.scale_inputs,
                  "rescale inputs to the flattened-row norm while training (true|false)")
      ->capture_default_str();
}

// Shared by `run` and `encode`.
struct DataOptions {
  std::string dataset = "movielens";
  std::string path;
  bool vertical = false;
};

void add_data_options(CLI::App* cmd, DataOptions& data) {
  cmd->add_option("--dataset", data.dataset, "movielens or sushi")
      ->check(CLI::IsMember({"movielens", "sushi"}))
      ->capture_default_str();
  cmd->add_option("--data", data.path, "rating file (u.data or sushi3b score file)")
      ->required();
  cmd->add_flag("--vertical", data.vertical,
                "transpose ratings first (parties hold items)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative rating prediction over distributed rating data"};
  app.require_subcommand(1);

  // run -----------------------------------------------------------------
  ExperimentConfig config;
  DataOptions run_data;
  std::string methods = "individual,centralized,collaboration";
  std::string learners = "fm";
  std::string p_tilde = "100,200,400";
  std::string p_hat_ratio = "0.5,1,2";
  std::string p_hat;
  std::string party_sweep;
  Index reduce_dims = 0;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "run the three analysis methods");
  add_data_options(run, run_data);
  run->add_option("--methods", methods)->capture_default_str();
  run->add_option("--learners", learners, "fm,ridge")->capture_default_str();
  run->add_option("--parties", config.parties)->capture_default_str();
  run->add_option("--users-per-party", config.users_per_party)->capture_default_str();
  run->add_option("--p-tilde", p_tilde, "intermediate dimensions")->capture_default_str();
  run->add_option("--p-hat-ratio", p_hat_ratio, "collaboration dimensions as ratios of p~")
      ->capture_default_str();
  run->add_option("--p-hat", p_hat, "absolute collaboration dimensions (overrides ratios)");
  run->add_option("--anchor", config.anchor_size, "anchor rows r")->capture_default_str();
  run->add_option("--test-fraction", config.test_fraction)->capture_default_str();
  run->add_option("--reps", config.repetitions)->capture_default_str();
  run->add_option("--seed", config.base_seed)->capture_default_str();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--clip", config.clip, "clip predictions to the rating scale");
  run->add_option("--reduce-dims", reduce_dims,
                  "SVD-reduce flattened data to N dims before ridge");
  run->add_option("--party-sweep", party_sweep, "party counts, e.g. 1,3,5,7,9");
  run->add_option("--ridge-lambda", config.ridge_lambda)->capture_default_str();
  run->add_option("--threads", config.threads, "repetitions run concurrently")
      ->capture_default_str();
  add_fm_options(run, config.fm);

  // encode --------------------------------------------------------------
  DataOptions enc_data;
  Index enc_parties = 9, enc_upp = 100, enc_p_tilde = 200, enc_anchor = 1000;
  double enc_test_fraction = 0.2;
  std::uint64_t enc_seed = 42;
  std::string enc_out;
  auto* encode = app.add_subcommand(
      "encode", "party side: split, partition, encode; one payload directory per party");
  add_data_options(encode, enc_data);
  encode->add_option("--parties", enc_parties)->capture_default_str();
  encode->add_option("--users-per-party", enc_upp)->capture_default_str();
  encode->add_option("--p-tilde", enc_p_tilde)->capture_default_str();
  encode->add_option("--anchor", enc_anchor)->capture_default_str();
  encode->add_option("--test-fraction", enc_test_fraction)->capture_default_str();
  encode->add_option("--seed", enc_seed, "repetition seed")->capture_default_str();
  encode->add_option("--out", enc_out)->required();

  // analyze -------------------------------------------------------------
  std::vector<std::string> payload_dirs;
  Index an_p_hat = 400;
  TrainConfig an_fm;
  std::string an_out;
  auto* analyze = app.add_subcommand(
      "analyze", "analyzer side: integrate payloads, train the FM, save model and maps");
  analyze->add_option("--payload", payload_dirs, "payload directories, party order")
      ->required();
  analyze->add_option("--p-hat", an_p_hat)->capture_default_str();
  analyze->add_option("--out", an_out)->required();
  add_fm_options(analyze, an_fm);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      config.dataset = parse_dataset(run_data.dataset);
      config.data_path = run_data.path;
      config.vertical = run_data.vertical;
      config.methods = parse_list<Method>(methods, parse_method);
      config.learners = parse_list<Learner>(learners, parse_learner);
      config.p_tilde = parse_list<Index>(p_tilde, [](std::string_view s) {
        return static_cast<Index>(std::stoll(std::string(s)));
      });
      config.p_hat_ratio = parse_list<double>(
          p_hat_ratio, [](std::string_view s) { return std::stod(std::string(s)); });
      config.p_hat_absolute = parse_list<Index>(p_hat, [](std::string_view s) {
        return static_cast<Index>(std::stoll(std::string(s)));
      });
      config.party_sweep = parse_list<Index>(party_sweep, [](std::string_view s) {
        return static_cast<Index>(std::stoll(std::string(s)));
      });
      if (reduce_dims > 0) config.reduce_dims = reduce_dims;
      config.output_dir = out_dir;

      write_manifest(config, config.output_dir);
      const auto result = run_experiment(config);
      emit_report(result, ReportFormat::kCsv, config.output_dir);
      emit_report(result, ReportFormat::kMarkdown, config.output_dir);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& a : result.aggregates) {
        std::cout << to_string(a.method) << " " << to_string(a.learner) << " m=" << a.m;
        if (a.method == Method::kCollaboration) {
          std::cout << " p~=" << a.p_tilde << " p^=" << a.p_hat;
        }
        std::cout << " rmse=" << a.mean_rmse << " (+/- " << a.stderr_rmse << ")\n";
      }
    } else if (*encode) {
      ExperimentConfig c;
      c.dataset = parse_dataset(enc_data.dataset);
      c.data_path = enc_data.path;
      c.vertical = enc_data.vertical;
      const auto ratings = load_dataset(c);
      Rng split_rng = make_rng(enc_seed, SeedStream::kSplit);
      const auto split = split_train_test(ratings, enc_test_fraction, split_rng);
      Rng part_rng = make_rng(enc_seed, SeedStream::kPartition);
      const auto assignment =
          partition_horizontal(split.train, enc_parties, enc_upp, part_rng);
      Rng anchor_rng = make_rng(enc_seed, SeedStream::kAnchor,
                                static_cast<std::uint64_t>(enc_parties));
      const auto anchor = party::AnchorDataset::generate(
          enc_anchor, assignment.assigned_users() + ratings.num_items(), anchor_rng);
      for (Index k = 0; k < enc_parties; ++k) {
        const auto train = flatten(party_entries(split.train, assignment, k),
                                   assignment, ratings.num_items());
        const auto encoder = party::Encoder::fit(train.x, enc_p_tilde);
        const auto dir = std::filesystem::path(enc_out) / ("party_" + std::to_string(k));
        write_payload(dir, k, party::make_payload(encoder, train, anchor));
        std::cout << "wrote " << dir.string() << "\n";
      }
    } else if (*analyze) {
      std::vector<PartyPayload> payloads;
      for (const auto& dir : payload_dirs) payloads.push_back(read_payload(dir).payload);
      const auto outcome = analyzer::collaborate(payloads, an_p_hat);
      TrainReport report;
      const auto model = fm_train(outcome.data.x_hat, outcome.data.y, an_fm, &report);
      save_model(an_out, model, an_fm);
      for (std::size_t k = 0; k < outcome.maps.size(); ++k) {
        write_matrix(std::filesystem::path(an_out) /
                         ("integration_" + std::to_string(k) + ".bin"),
                     outcome.maps[k].matrix());
      }
      std::cout << "trained on " << outcome.data.x_hat.rows() << " x "
                << outcome.data.x_hat.cols() << ", final epoch mse "
                << report.epoch_mse.back() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "collabrec: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "collabrec: unexpected failure: " << e.what() << "\n";
    return 2;
  }
  return EXIT_SUCCESS;
}
