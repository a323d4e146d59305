// Copyright 2026 The APRLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aprlab/dataset.hpp"
#include "aprlab/metrics.hpp"
#include "aprlab/model.hpp"
#include "aprlab/trainer.hpp"

namespace aprlab {

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  std::string format = "tsv";
  int factors = 64;
  double init_std = 0.01;
  std::vector<int> k_list = {50};
  std::vector<double> eta_grid = {0.005, 0.01, 0.05};
  std::vector<double> eps_grid = {0.001, 0.01, 0.1, 1.0};
  std::vector<double> alpha_grid = {0.001, 0.01, 0.1, 1.0, 10.0};
  int t_bpr = 100;
  int t_apr = 200;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path out_dir = "runs";
  double l2 = 0.0;
  bool validate = false;  // select hyperparameters on a second-latest holdout
  std::string fgsm_norm = "joint";
  int jobs = 1;
  bool write_trace = false;
};

/// Flat `key = value` file; lists comma-separated; `#` starts a comment.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value);
std::string canonical_config_string(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);
FgsmNorm parse_fgsm_norm(const std::string& name);

struct RunRecord {
  std::string kind;  // "bpr" or "apr"
  double eta = 0.0;
  double eps = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricReport report;  // at k_list.front()
  std::filesystem::path dir;
  double wall_seconds = 0.0;
};

/// load -> split -> init -> train -> recommend -> evaluate -> persist.
/// kind "bpr" trains t_bpr epochs only; "apr" runs the full two-phase
/// schedule. Partial outputs are removed on failure.
RunRecord run_single(const ExperimentConfig& cfg, const std::string& kind, double eta,
                     double eps, double alpha, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunRecord best_bpr;
  RunRecord best_apr;
};

struct GridOutcome {
  std::vector<SeedOutcome> per_seed;
  std::vector<RunRecord> runs;  // every cell, including failed ones
};

/// Per seed: the eta grid selects the best plain run by Rec@k, then the
/// eps x alpha grid continues from that model and selects the best
/// adversarial run by Rec@k. Ties prefer smaller eta, then eps, then alpha.
GridOutcome grid_search(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string metric;
  std::optional<double> base;
  std::optional<double> cand;
  std::optional<double> rv_pct;
  bool starred = false;  // paired t-test p <= 0.05 on accuracy metrics
};
using ComparisonTable = std::vector<ComparisonRow>;

ComparisonTable compare(const RunRecord& base, const RunRecord& cand);
std::string format_comparison(const ComparisonTable& table);
void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path);

/// Full-model perturbation: accumulates the loss gradient over one pass of
/// sampled triplets, scales it to budget eps with one joint norm over all
/// parameters, and evaluates metrics at the shifted parameters. The stored
/// model is not mutated.
MetricReport attack_eval(const FactorModel& model, const TrainTestSplit& split,
                         const PopularityPartition& part, double eps, int k,
                         std::uint64_t seed);

/// Writes per-seed and seed-mean comparison CSVs plus manifest.json into dir.
void export_reports(const ExperimentConfig& cfg, const GridOutcome& outcome,
                    const std::filesystem::path& dir);

RunRecord load_run_record(const std::filesystem::path& dir);

}  // namespace aprlab
