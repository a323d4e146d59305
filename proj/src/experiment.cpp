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

#include "aprlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aprlab/errors.hpp"
#include "aprlab/instrumentation.hpp"
#include "aprlab/numeric.hpp"

namespace aprlab {

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto begin = part.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = part.find_last_not_of(" \t");
    parts.push_back(part.substr(begin, end - begin + 1));
  }
  return parts;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const std::string& part : split_list(value)) out.push_back(parse(part));
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DataError("expected boolean, got '" + value + "'");
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real_exact(v[i]);
  }
  return out;
}

std::string run_dir_name(const std::string& kind, double eta, double eps, double alpha,
                         std::uint64_t seed, bool validation) {
  char buf[160];
  if (kind == "bpr") {
    std::snprintf(buf, sizeof(buf), "%s%s_eta%g_seed%llu", validation ? "val_" : "", kind.c_str(),
                  eta, static_cast<unsigned long long>(seed));
  } else {
    std::snprintf(buf, sizeof(buf), "%s%s_eta%g_eps%g_alpha%g_seed%llu", validation ? "val_" : "",
                  kind.c_str(), eta, eps, alpha, static_cast<unsigned long long>(seed));
  }
  return buf;
}

struct ExperimentContext {
  TrainTestSplit split;
  PopularityPartition part;
};

ExperimentContext make_context(const ExperimentConfig& cfg) {
  if (cfg.format != "tsv") throw DataError("unsupported dataset format: " + cfg.format);
  Dataset ds = load_interactions(cfg.dataset_path);
  TrainTestSplit split = temporal_leave_one_out(ds);
  if (split.test.empty()) throw DataError("no user has two interactions; empty test set");
  PopularityPartition part = partition_items(split.train);
  return ExperimentContext{std::move(split), std::move(part)};
}

void write_run_json(const RunRecord& rec, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["kind"] = rec.kind;
  j["eta"] = rec.eta;
  j["eps"] = rec.eps;
  j["alpha"] = rec.alpha;
  j["seed"] = rec.seed;
  j["ok"] = rec.ok;
  j["error"] = rec.error;
  j["wall_seconds"] = rec.wall_seconds;
  j["t_bpr"] = cfg.t_bpr;
  j["t_apr"] = cfg.t_apr;
  j["factors"] = cfg.factors;
  j["init_std"] = cfg.init_std;
  j["l2"] = cfg.l2;
  j["fgsm_norm"] = cfg.fgsm_norm;
  j["k"] = cfg.k_list.front();
  j["config_hash"] = config_hash(cfg);
  std::ofstream out(rec.dir / "run.json");
  if (!out) throw DataError("cannot write " + (rec.dir / "run.json").string());
  out << j.dump(2) << '\n';
}

// One grid cell. `warm_start` carries a model file to continue from; in that
// case only the adversarial-phase epochs run.
RunRecord run_cell(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                   const std::string& kind, double eta, double eps, double alpha,
                   std::uint64_t seed, const std::optional<std::filesystem::path>& warm_start,
                   bool validation_cell) {
  RunRecord rec;
  rec.kind = kind;
  rec.eta = eta;
  rec.eps = kind == "bpr" ? 0.0 : eps;
  rec.alpha = kind == "bpr" ? 0.0 : alpha;
  rec.seed = seed;
  rec.dir = cfg.out_dir / run_dir_name(kind, eta, rec.eps, rec.alpha, seed, validation_cell);

  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(rec.dir);
  try {
    TrainSchedule sched;
    sched.eta = eta;
    sched.t_bpr = cfg.t_bpr;
    sched.t_apr = kind == "bpr" ? cfg.t_bpr : cfg.t_apr;
    sched.eps = rec.eps;
    sched.alpha = rec.alpha;
    sched.l2 = cfg.l2;
    sched.seed = seed;
    sched.fgsm_norm = parse_fgsm_norm(cfg.fgsm_norm);

    const Dataset& train_ds = ctx.split.train;
    FactorModel model =
        warm_start ? FactorModel::load(*warm_start)
                   : FactorModel::init(train_ds.num_users(), train_ds.num_items(),
                                       ModelConfig{cfg.factors, cfg.init_std, seed});
    const int first_epoch = warm_start ? cfg.t_bpr + 1 : 1;

    StreamingAggregator agg(ctx.part);
    std::optional<TraceWriter> trace;
    std::vector<TrainingSink*> sinks = {&agg};
    if (cfg.write_trace) {
      trace.emplace(ctx.part, rec.dir / "trace.csv");
      sinks.push_back(&*trace);
    }
    SinkTee tee(sinks);
    train_epochs(model, train_ds, sched, first_epoch, sched.t_apr, tee);

    rec.report = evaluate(model, ctx.split, ctx.part, cfg.k_list.front());
    for (std::size_t ki = 1; ki < cfg.k_list.size(); ++ki) {
      MetricReport extra = evaluate(model, ctx.split, ctx.part, cfg.k_list[ki]);
      write_metrics_json(extra, rec.dir / ("metrics_k" + std::to_string(cfg.k_list[ki]) + ".json"));
    }

    model.save(rec.dir / "model.txt");
    write_metrics_json(rec.report, rec.dir / "metrics.json");
    write_peruser_csv(rec.report, rec.dir / "peruser.csv");
    write_magnitudes_csv(rec.dir / "magnitudes.csv", agg.cdf());
    write_wineglass_csv(rec.dir / "wineglass.csv", agg.wine_glass_series());
    rec.ok = true;
  } catch (const NumericalError& e) {
    std::filesystem::remove_all(rec.dir);
    rec.ok = false;
    rec.error = e.what();
  } catch (...) {
    std::filesystem::remove_all(rec.dir);
    throw;
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (rec.ok) write_run_json(rec, cfg);
  return rec;
}

void persist_split(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  save_split(ctx.split, cfg.out_dir / "split");
}

void run_parallel(int jobs, std::vector<std::function<void()>>& tasks) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto worker = [&] {
    std::size_t i;
    while ((i = next.fetch_add(1)) < tasks.size()) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

// Best successful run by Rec@k; ties prefer the earlier grid position.
const RunRecord* pick_best(const std::vector<RunRecord>& runs) {
  const RunRecord* best = nullptr;
  for (const RunRecord& r : runs) {
    if (!r.ok) continue;
    if (!best || r.report.values.at("Rec") > best->report.values.at("Rec")) best = &r;
  }
  return best;
}

}  // namespace

FgsmNorm parse_fgsm_norm(const std::string& name) {
  if (name == "joint") return FgsmNorm::kJoint;
  if (name == "per_row") return FgsmNorm::kPerRow;
  throw DataError("fgsm_norm must be 'joint' or 'per_row', got '" + name + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(line_no) + ": empty key");
    }
    apply_config_override(cfg, key, value);
  }
  return cfg;
}

void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
  auto to_int = [](const std::string& s) { return std::stoi(s); };
  auto to_double = [](const std::string& s) { return std::stod(s); };
  auto to_u64 = [](const std::string& s) { return static_cast<std::uint64_t>(std::stoull(s)); };

  if (key == "dataset") {
    cfg.dataset_path = value;
  } else if (key == "format") {
    cfg.format = value;
  } else if (key == "factors" || key == "f") {
    cfg.factors = to_int(value);
  } else if (key == "init_std") {
    cfg.init_std = to_double(value);
  } else if (key == "k") {
    cfg.k_list = parse_list<int>(value, to_int);
  } else if (key == "eta_grid") {
    cfg.eta_grid = parse_list<double>(value, to_double);
  } else if (key == "eps_grid") {
    cfg.eps_grid = parse_list<double>(value, to_double);
  } else if (key == "alpha_grid") {
    cfg.alpha_grid = parse_list<double>(value, to_double);
  } else if (key == "t_bpr") {
    cfg.t_bpr = to_int(value);
  } else if (key == "t_apr") {
    cfg.t_apr = to_int(value);
  } else if (key == "seeds") {
    cfg.seeds = parse_list<std::uint64_t>(value, to_u64);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "l2") {
    cfg.l2 = to_double(value);
  } else if (key == "validate") {
    cfg.validate = parse_bool(value);
  } else if (key == "fgsm_norm") {
    parse_fgsm_norm(value);  // reject unknown names early
    cfg.fgsm_norm = value;
  } else if (key == "jobs") {
    cfg.jobs = to_int(value);
  } else if (key == "write_trace") {
    cfg.write_trace = parse_bool(value);
  } else {
    throw DataError("unknown config key '" + key + "'");
  }
}

std::string canonical_config_string(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "alpha_grid=" << join_reals(cfg.alpha_grid) << '\n';
  out << "dataset=" << cfg.dataset_path.string() << '\n';
  out << "eps_grid=" << join_reals(cfg.eps_grid) << '\n';
  out << "eta_grid=" << join_reals(cfg.eta_grid) << '\n';
  out << "factors=" << cfg.factors << '\n';
  out << "fgsm_norm=" << cfg.fgsm_norm << '\n';
  out << "format=" << cfg.format << '\n';
  out << "init_std=" << format_real_exact(cfg.init_std) << '\n';
  out << "jobs=" << cfg.jobs << '\n';
  out << "k=";
  for (std::size_t i = 0; i < cfg.k_list.size(); ++i) out << (i ? "," : "") << cfg.k_list[i];
  out << '\n';
  out << "l2=" << format_real_exact(cfg.l2) << '\n';
  out << "out_dir=" << cfg.out_dir.string() << '\n';
  out << "seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << '\n';
  out << "t_apr=" << cfg.t_apr << '\n';
  out << "t_bpr=" << cfg.t_bpr << '\n';
  out << "validate=" << (cfg.validate ? "true" : "false") << '\n';
  out << "write_trace=" << (cfg.write_trace ? "true" : "false") << '\n';
  return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config_string(cfg))));
  return buf;
}

RunRecord run_single(const ExperimentConfig& cfg, const std::string& kind, double eta,
                     double eps, double alpha, std::uint64_t seed) {
  if (kind != "bpr" && kind != "apr") throw DataError("kind must be 'bpr' or 'apr'");
  if (cfg.k_list.empty() || cfg.eta_grid.empty() || cfg.eps_grid.empty() ||
      cfg.alpha_grid.empty()) {
    throw DataError("config grids and k list must be non-empty");
  }
  ExperimentContext ctx = make_context(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  persist_split(cfg, ctx);
  RunRecord rec = run_cell(cfg, ctx, kind, eta, eps, alpha, seed, std::nullopt, false);
  if (!rec.ok) throw NumericalError(rec.error);
  return rec;
}

GridOutcome grid_search(const ExperimentConfig& cfg) {
  if (cfg.k_list.empty() || cfg.eta_grid.empty() || cfg.eps_grid.empty() ||
      cfg.alpha_grid.empty() || cfg.seeds.empty()) {
    throw DataError("config grids, k list, and seeds must be non-empty");
  }
  ExperimentContext ctx = make_context(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  persist_split(cfg, ctx);

  // Selection context: with validation enabled, hyperparameters are picked on
  // a second-latest holdout carved out of the train set.
  std::optional<ExperimentContext> val_ctx;
  if (cfg.validate) {
    TrainTestSplit vs = temporal_leave_one_out(ctx.split.train);
    if (vs.test.empty()) throw DataError("validation holdout is empty");
    PopularityPartition vp = partition_items(vs.train);
    val_ctx = ExperimentContext{std::move(vs), std::move(vp)};
  }
  const ExperimentContext& sel_ctx = cfg.validate ? *val_ctx : ctx;

  GridOutcome outcome;
  for (std::uint64_t seed : cfg.seeds) {
    // eta grid, plain runs
    std::vector<RunRecord> bpr_runs(cfg.eta_grid.size());
    {
      std::vector<std::function<void()>> tasks;
      for (std::size_t ei = 0; ei < cfg.eta_grid.size(); ++ei) {
        tasks.push_back([&, ei] {
          bpr_runs[ei] = run_cell(cfg, sel_ctx, "bpr", cfg.eta_grid[ei], 0.0, 0.0, seed,
                                  std::nullopt, cfg.validate);
        });
      }
      run_parallel(cfg.jobs, tasks);
    }
    const RunRecord* best_bpr_sel = pick_best(bpr_runs);
    if (!best_bpr_sel) {
      throw NumericalError("every eta-grid run diverged for seed " + std::to_string(seed));
    }
    const double best_eta = best_bpr_sel->eta;

    RunRecord best_bpr;
    if (cfg.validate) {
      // retrain the selected eta on the full train set
      best_bpr = run_cell(cfg, ctx, "bpr", best_eta, 0.0, 0.0, seed, std::nullopt, false);
      if (!best_bpr.ok) throw NumericalError(best_bpr.error);
    } else {
      best_bpr = *best_bpr_sel;
    }

    // eps x alpha grid, continued from the selected plain model
    std::vector<RunRecord> apr_runs(cfg.eps_grid.size() * cfg.alpha_grid.size());
    {
      const std::filesystem::path warm = best_bpr_sel->dir / "model.txt";
      std::vector<std::function<void()>> tasks;
      for (std::size_t xi = 0; xi < cfg.eps_grid.size(); ++xi) {
        for (std::size_t ai = 0; ai < cfg.alpha_grid.size(); ++ai) {
          const std::size_t slot = xi * cfg.alpha_grid.size() + ai;
          tasks.push_back([&, xi, ai, slot] {
            apr_runs[slot] = run_cell(cfg, sel_ctx, "apr", best_eta, cfg.eps_grid[xi],
                                      cfg.alpha_grid[ai], seed, warm, cfg.validate);
          });
        }
      }
      run_parallel(cfg.jobs, tasks);
    }
    const RunRecord* best_apr_sel = pick_best(apr_runs);
    if (!best_apr_sel) {
      throw NumericalError("every eps x alpha run diverged for seed " + std::to_string(seed));
    }

    RunRecord best_apr;
    if (cfg.validate) {
      best_apr = run_cell(cfg, ctx, "apr", best_eta, best_apr_sel->eps, best_apr_sel->alpha,
                          seed, best_bpr.dir / "model.txt", false);
      if (!best_apr.ok) throw NumericalError(best_apr.error);
    } else {
      best_apr = *best_apr_sel;
    }

    for (auto& r : bpr_runs) outcome.runs.push_back(std::move(r));
    for (auto& r : apr_runs) outcome.runs.push_back(std::move(r));
    outcome.per_seed.push_back(SeedOutcome{seed, std::move(best_bpr), std::move(best_apr)});
  }
  return outcome;
}

ComparisonTable compare(const RunRecord& base, const RunRecord& cand) {
  if (base.report.k != cand.report.k) throw DataError("compare needs the same cutoff k");
  if (base.report.users != cand.report.users) {
    throw DataError("compare needs runs evaluated on the same test users");
  }

  const TTest rec_test = paired_t_test(cand.report.per_user_recall, base.report.per_user_recall);
  const TTest ndcg_test = paired_t_test(cand.report.per_user_ndcg, base.report.per_user_ndcg);

  ComparisonTable table;
  for (const std::string& name : kMetricOrder) {
    ComparisonRow row;
    row.metric = name;
    auto b = base.report.values.find(name);
    auto c = cand.report.values.find(name);
    if (b != base.report.values.end()) row.base = b->second;
    if (c != cand.report.values.end()) row.cand = c->second;
    if (row.base && row.cand) row.rv_pct = relative_variation(*row.base, *row.cand);
    if (name == "Rec" || name == "Prec") {
      row.starred = rec_test.p <= 0.05;
    } else if (name == "nDCG") {
      row.starred = ndcg_test.p <= 0.05;
    }
    table.push_back(row);
  }
  return table;
}

std::string format_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %14s %14s %10s\n", "metric", "base", "cand", "R.V.%");
  out << line;
  for (const ComparisonRow& row : table) {
    std::string base = row.base ? format_real(*row.base) : "undef";
    std::string cand = row.cand ? format_real(*row.cand) : "undef";
    if (row.starred && row.cand) cand += '*';
    std::string rv = "-";
    if (row.rv_pct) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%+.2f%%", *row.rv_pct);
      rv = buf;
    }
    std::snprintf(line, sizeof(line), "%-10s %14s %14s %10s\n", row.metric.c_str(), base.c_str(),
                  cand.c_str(), rv.c_str());
    out << line;
  }
  return out.str();
}

void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "metric,base,cand,rv_pct,significant\n";
  for (const ComparisonRow& row : table) {
    out << row.metric << ',';
    if (row.base) out << format_real_exact(*row.base);
    out << ',';
    if (row.cand) out << format_real_exact(*row.cand);
    out << ',';
    if (row.rv_pct) out << format_real_exact(*row.rv_pct);
    out << ',';
    if (row.metric == "Rec" || row.metric == "Prec" || row.metric == "nDCG") {
      out << (row.starred ? 1 : 0);
    }
    out << '\n';
  }
}

MetricReport attack_eval(const FactorModel& model, const TrainTestSplit& split,
                         const PopularityPartition& part, double eps, int k,
                         std::uint64_t seed) {
  if (eps < 0.0) throw DataError("eps must be >= 0");
  const int f = model.factors();
  const Dataset& train = split.train;
  if (model.num_users() != train.num_users() || model.num_items() != train.num_items()) {
    throw DataError("model dimensions do not match split");
  }

  // epoch 0 is reserved for the attack pass; training epochs start at 1
  std::vector<Triplet> triplets = sample_epoch(train, seed, 0);
  std::vector<double> grad_p(static_cast<std::size_t>(model.num_users()) * f, 0.0);
  std::vector<double> grad_q(static_cast<std::size_t>(model.num_items()) * f, 0.0);
  for (const Triplet& t : triplets) {
    auto pu = model.user_row(t.user);
    auto qi = model.item_row(t.pos);
    auto qj = model.item_row(t.neg);
    double s = 0.0;
    for (int l = 0; l < f; ++l) s += pu[l] * (qi[l] - qj[l]);
    const double omega = logistic(-s);
    double* gp = grad_p.data() + static_cast<std::size_t>(t.user) * f;
    double* gi = grad_q.data() + static_cast<std::size_t>(t.pos) * f;
    double* gj = grad_q.data() + static_cast<std::size_t>(t.neg) * f;
    for (int l = 0; l < f; ++l) {
      gp[l] -= omega * (qi[l] - qj[l]);
      gi[l] -= omega * pu[l];
      gj[l] += omega * pu[l];
    }
  }

  const double norm = std::sqrt(squared_norm(grad_p) + squared_norm(grad_q));
  FactorModel attacked = model;
  if (eps == 0.0 || norm == 0.0) {
    if (eps > 0.0) {
      std::fprintf(stderr, "warning: zero loss gradient, evaluating unperturbed model\n");
    }
  } else {
    const double scale = eps / norm;
    for (int u = 0; u < model.num_users(); ++u) {
      auto row = attacked.user_row(u);
      const double* g = grad_p.data() + static_cast<std::size_t>(u) * f;
      for (int l = 0; l < f; ++l) row[l] += scale * g[l];
    }
    for (int i = 0; i < model.num_items(); ++i) {
      auto row = attacked.item_row(i);
      const double* g = grad_q.data() + static_cast<std::size_t>(i) * f;
      for (int l = 0; l < f; ++l) row[l] += scale * g[l];
    }
  }
  return evaluate(attacked, split, part, k);
}

namespace {

nlohmann::json run_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["eta"] = r.eta;
  j["eps"] = r.eps;
  j["alpha"] = r.alpha;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  j["error"] = r.error;
  j["dir"] = r.dir.filename().string();
  j["wall_seconds"] = r.wall_seconds;
  if (r.ok) j["Rec"] = r.report.values.at("Rec");
  return j;
}

}  // namespace

void export_reports(const ExperimentConfig& cfg, const GridOutcome& outcome,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["config_hash"] = config_hash(cfg);
  manifest["config"] = canonical_config_string(cfg);
  manifest["seeds"] = cfg.seeds;
  manifest["runs"] = nlohmann::json::array();
  for (const RunRecord& r : outcome.runs) manifest["runs"].push_back(run_to_json(r));

  manifest["per_seed"] = nlohmann::json::array();
  for (const SeedOutcome& s : outcome.per_seed) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["best_bpr"] = run_to_json(s.best_bpr);
    j["best_apr"] = run_to_json(s.best_apr);
    manifest["per_seed"].push_back(j);

    const ComparisonTable table = compare(s.best_bpr, s.best_apr);
    write_comparison_csv(table, dir / ("comparison_seed" + std::to_string(s.seed) + ".csv"));
  }

  // seed-mean table: metric means of the selected runs, no significance
  if (!outcome.per_seed.empty()) {
    ComparisonTable mean_table;
    for (const std::string& name : kMetricOrder) {
      ComparisonRow row;
      row.metric = name;
      double base_sum = 0.0, cand_sum = 0.0;
      int base_n = 0, cand_n = 0;
      for (const SeedOutcome& s : outcome.per_seed) {
        auto b = s.best_bpr.report.values.find(name);
        auto c = s.best_apr.report.values.find(name);
        if (b != s.best_bpr.report.values.end()) {
          base_sum += b->second;
          ++base_n;
        }
        if (c != s.best_apr.report.values.end()) {
          cand_sum += c->second;
          ++cand_n;
        }
      }
      if (base_n == static_cast<int>(outcome.per_seed.size())) row.base = base_sum / base_n;
      if (cand_n == static_cast<int>(outcome.per_seed.size())) row.cand = cand_sum / cand_n;
      if (row.base && row.cand) row.rv_pct = relative_variation(*row.base, *row.cand);
      mean_table.push_back(row);
    }
    write_comparison_csv(mean_table, dir / "comparison_mean.csv");
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

RunRecord load_run_record(const std::filesystem::path& dir) {
  std::ifstream in(dir / "run.json");
  if (!in) throw DataError("cannot open " + (dir / "run.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad run.json in " + dir.string() + ": " + e.what());
  }

  RunRecord rec;
  rec.kind = j.at("kind").get<std::string>();
  rec.eta = j.at("eta").get<double>();
  rec.eps = j.at("eps").get<double>();
  rec.alpha = j.at("alpha").get<double>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.ok = j.at("ok").get<bool>();
  rec.error = j.at("error").get<std::string>();
  rec.wall_seconds = j.at("wall_seconds").get<double>();
  rec.dir = dir;
  rec.report = read_metrics_json(dir / "metrics.json");
  read_peruser_csv(dir / "peruser.csv", rec.report);
  return rec;
}

}  // namespace aprlab
