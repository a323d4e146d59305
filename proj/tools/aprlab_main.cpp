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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "aprlab/dataset.hpp"
#include "aprlab/errors.hpp"
#include "aprlab/experiment.hpp"
#include "aprlab/instrumentation.hpp"
#include "aprlab/metrics.hpp"
#include "aprlab/model.hpp"
#include "aprlab/trainer.hpp"

namespace {

using aprlab::ExperimentConfig;

struct CommonOverrides {
  std::optional<std::string> out_dir;
  std::optional<int> t_bpr, t_apr, factors, jobs;
  std::optional<double> l2;
  std::optional<bool> validate, write_trace;
  std::optional<std::string> fgsm_norm;
};

void add_override_flags(CLI::App* cmd, CommonOverrides& o) {
  cmd->add_option("--out", o.out_dir, "Output directory (overrides config out_dir)");
  cmd->add_option("--t-bpr", o.t_bpr, "Plain-phase epochs");
  cmd->add_option("--t-apr", o.t_apr, "Total epochs including the adversarial phase");
  cmd->add_option("--factors", o.factors, "Latent dimension");
  cmd->add_option("--jobs", o.jobs, "Parallel grid cells");
  cmd->add_option("--l2", o.l2, "Weight decay coefficient");
  cmd->add_flag("--validate,!--no-validate", o.validate,
                "Select hyperparameters on a second-latest holdout");
  cmd->add_flag("--trace,!--no-trace", o.write_trace, "Write the raw per-triplet trace");
  cmd->add_option("--fgsm-norm", o.fgsm_norm, "joint or per_row");
}

void apply_overrides(ExperimentConfig& cfg, const CommonOverrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.t_bpr) cfg.t_bpr = *o.t_bpr;
  if (o.t_apr) cfg.t_apr = *o.t_apr;
  if (o.factors) cfg.factors = *o.factors;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.l2) cfg.l2 = *o.l2;
  if (o.validate) cfg.validate = *o.validate;
  if (o.write_trace) cfg.write_trace = *o.write_trace;
  if (o.fgsm_norm) {
    aprlab::parse_fgsm_norm(*o.fgsm_norm);
    cfg.fgsm_norm = *o.fgsm_norm;
  }
}

nlohmann::json dataset_stats(const aprlab::Dataset& ds) {
  nlohmann::json j;
  j["num_users"] = ds.num_users();
  j["num_items"] = ds.num_items();
  j["num_interactions"] = ds.interactions().size();
  j["density"] = aprlab::density(ds);
  if (ds.num_items() >= 5) {
    const auto part = aprlab::partition_items(ds);
    j["short_head_size"] = part.short_head.size();
    j["head_probability"] = aprlab::head_probability(ds, part);
  }
  return j;
}

int cmd_prepare(const std::string& input, const std::string& format, const std::string& out) {
  if (format != "tsv") throw aprlab::DataError("unsupported format: " + format);
  const aprlab::Dataset ds = aprlab::load_interactions(input);
  const aprlab::TrainTestSplit split = aprlab::temporal_leave_one_out(ds);
  aprlab::save_split(split, out);

  nlohmann::json j = dataset_stats(ds);
  j["num_test_users"] = split.test.size();
  j["train_interactions"] = split.train.interactions().size();
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_synth(int users, int items, int interactions, double head_share, std::uint64_t seed,
              const std::string& out) {
  const aprlab::Dataset ds =
      aprlab::generate_synthetic(users, items, interactions, head_share, seed);
  std::filesystem::create_directories(out);
  const auto path = std::filesystem::path(out) / "ratings.tsv";
  aprlab::save_dataset_tsv(ds, path);

  nlohmann::json j = dataset_stats(ds);
  j["path"] = path.string();
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_train(ExperimentConfig cfg, const std::string& kind, std::optional<double> eta,
              std::optional<double> eps, std::optional<double> alpha,
              std::optional<std::uint64_t> seed) {
  const double run_eta = eta.value_or(cfg.eta_grid.front());
  const double run_eps = eps.value_or(kind == "apr" ? cfg.eps_grid.front() : 0.0);
  const double run_alpha = alpha.value_or(kind == "apr" ? cfg.alpha_grid.front() : 0.0);
  const std::uint64_t run_seed = seed.value_or(cfg.seeds.front());

  const aprlab::RunRecord rec =
      aprlab::run_single(cfg, kind, run_eta, run_eps, run_alpha, run_seed);
  std::cout << "run " << rec.dir.string() << " finished in " << rec.wall_seconds << " s\n";
  std::cout << "Rec@" << rec.report.k << " = " << rec.report.values.at("Rec") << '\n';
  return 0;
}

int cmd_grid(ExperimentConfig cfg) {
  const aprlab::GridOutcome outcome = aprlab::grid_search(cfg);
  aprlab::export_reports(cfg, outcome, cfg.out_dir);
  for (const aprlab::SeedOutcome& s : outcome.per_seed) {
    std::cout << "seed " << s.seed << ": best bpr " << s.best_bpr.dir.filename().string()
              << " (Rec=" << s.best_bpr.report.values.at("Rec") << "), best apr "
              << s.best_apr.dir.filename().string()
              << " (Rec=" << s.best_apr.report.values.at("Rec") << ")\n";
    std::cout << aprlab::format_comparison(aprlab::compare(s.best_bpr, s.best_apr)) << '\n';
  }
  std::cout << "reports written to " << cfg.out_dir.string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& split_dir, int k) {
  const aprlab::FactorModel model = aprlab::FactorModel::load(model_path);
  const aprlab::TrainTestSplit split = aprlab::load_split(split_dir);
  const aprlab::PopularityPartition part = aprlab::partition_items(split.train);
  const aprlab::MetricReport report = aprlab::evaluate(model, split, part, k);

  nlohmann::json j;
  j["k"] = report.k;
  j["n_users"] = report.n_users;
  j["undefined_metrics"] = report.undefined_metrics;
  for (const auto& [name, value] : report.values) j[name] = value;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_attack(const std::string& model_path, const std::string& split_dir, double eps, int k,
               std::uint64_t seed) {
  const aprlab::FactorModel model = aprlab::FactorModel::load(model_path);
  const aprlab::TrainTestSplit split = aprlab::load_split(split_dir);
  const aprlab::PopularityPartition part = aprlab::partition_items(split.train);

  const aprlab::MetricReport clean = aprlab::evaluate(model, split, part, k);
  const aprlab::MetricReport attacked = aprlab::attack_eval(model, split, part, eps, k, seed);

  nlohmann::json j;
  j["eps"] = eps;
  j["k"] = k;
  for (const auto& [name, value] : clean.values) j["clean"][name] = value;
  for (const auto& [name, value] : attacked.values) j["attacked"][name] = value;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::string& base_dir, const std::string& cand_dir,
                const std::string& out_csv) {
  const aprlab::RunRecord base = aprlab::load_run_record(base_dir);
  const aprlab::RunRecord cand = aprlab::load_run_record(cand_dir);
  const aprlab::ComparisonTable table = aprlab::compare(base, cand);
  std::cout << aprlab::format_comparison(table);
  if (!out_csv.empty()) {
    aprlab::write_comparison_csv(table, out_csv);
    std::cout << "csv written to " << out_csv << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise-ranking lab: plain and adversarially regularized matrix factorization "
               "with gradient-magnitude instrumentation and popularity-bias evaluation"};
  app.require_subcommand(1);

  // prepare
  std::string in_path, format = "tsv", out_dir_arg;
  auto* prepare = app.add_subcommand("prepare", "Split a rating log into train/test");
  prepare->add_option("--input", in_path, "Rating log (TSV)")->required();
  prepare->add_option("--format", format, "Input format (tsv)");
  prepare->add_option("--out", out_dir_arg, "Split output directory")->required();

  // synth
  int s_users = 500, s_items = 800, s_interactions = 20000;
  double s_head_share = 0.65;
  std::uint64_t s_seed = 1;
  std::string s_out;
  auto* synth = app.add_subcommand("synth", "Generate two-tier tailed feedback");
  synth->add_option("--users", s_users, "Number of users")->required();
  synth->add_option("--items", s_items, "Number of items")->required();
  synth->add_option("--interactions", s_interactions, "Number of interactions")->required();
  synth->add_option("--head-share", s_head_share, "Probability of drawing from the head block")
      ->required();
  synth->add_option("--seed", s_seed, "Generator seed");
  synth->add_option("--out", s_out, "Output directory")->required();

  // train
  std::string config_path, kind = "bpr";
  std::optional<double> eta, eps, alpha;
  std::optional<std::uint64_t> seed;
  CommonOverrides train_overrides;
  auto* train = app.add_subcommand("train", "Run one training configuration");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--kind", kind, "bpr or apr")->check(CLI::IsMember({"bpr", "apr"}));
  train->add_option("--eta", eta, "Learning rate");
  train->add_option("--eps", eps, "Perturbation budget");
  train->add_option("--alpha", alpha, "Adversarial regularization coefficient");
  train->add_option("--seed", seed, "Run seed");
  add_override_flags(train, train_overrides);

  // grid
  std::string grid_config;
  CommonOverrides grid_overrides;
  auto* grid = app.add_subcommand("grid", "Full hyperparameter grid search");
  grid->add_option("--config", grid_config, "Config file")->required();
  add_override_flags(grid, grid_overrides);

  // evaluate
  std::string eval_model, eval_split;
  int eval_k = 50;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model on a split");
  evaluate->add_option("--model", eval_model, "Model file")->required();
  evaluate->add_option("--split", eval_split, "Split directory")->required();
  evaluate->add_option("--k", eval_k, "Cutoff");

  // attack
  std::string atk_model, atk_split;
  double atk_eps = 1.0;
  int atk_k = 50;
  std::uint64_t atk_seed = 0;
  auto* attack = app.add_subcommand("attack", "Evaluate a model under a full-parameter perturbation");
  attack->add_option("--model", atk_model, "Model file")->required();
  attack->add_option("--split", atk_split, "Split directory")->required();
  attack->add_option("--eps", atk_eps, "Perturbation budget")->required();
  attack->add_option("--k", atk_k, "Cutoff");
  attack->add_option("--seed", atk_seed, "Triplet-sampling seed for the gradient pass");

  // compare
  std::string cmp_base, cmp_cand, cmp_out = "comparison.csv";
  auto* comparecmd = app.add_subcommand("compare", "Compare two persisted runs");
  comparecmd->add_option("--base", cmp_base, "Baseline run directory")->required();
  comparecmd->add_option("--cand", cmp_cand, "Candidate run directory")->required();
  comparecmd->add_option("--csv", cmp_out, "Comparison CSV path (empty to skip)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(in_path, format, out_dir_arg);
    if (synth->parsed()) return cmd_synth(s_users, s_items, s_interactions, s_head_share, s_seed, s_out);
    if (train->parsed()) {
      ExperimentConfig cfg = aprlab::load_config(config_path);
      apply_overrides(cfg, train_overrides);
      return cmd_train(cfg, kind, eta, eps, alpha, seed);
    }
    if (grid->parsed()) {
      ExperimentConfig cfg = aprlab::load_config(grid_config);
      apply_overrides(cfg, grid_overrides);
      return cmd_grid(cfg);
    }
    if (evaluate->parsed()) return cmd_evaluate(eval_model, eval_split, eval_k);
    if (attack->parsed()) return cmd_attack(atk_model, atk_split, atk_eps, atk_k, atk_seed);
    if (comparecmd->parsed()) return cmd_compare(cmp_base, cmp_cand, cmp_out);
  } catch (const aprlab::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const aprlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
