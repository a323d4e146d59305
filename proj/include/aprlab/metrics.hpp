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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aprlab/dataset.hpp"
#include "aprlab/model.hpp"

namespace aprlab {

/// Per test user, an ordered list of at most k items with that user's train
/// positives excluded.
struct RecommendationSet {
  int k = 0;
  std::vector<int> users;                // ascending
  std::vector<std::vector<int>> lists;   // parallel to users
};

RecommendationSet recommend_all(const FactorModel& model, const TrainTestSplit& split, int k);

struct AccuracyMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
  std::vector<double> per_user_recall;
  std::vector<double> per_user_ndcg;
};

/// Single-item test protocol: rec_u is the hit indicator, prec_u = rec_u / k,
/// ndcg_u = 1/log2(1+rank) on a hit. Means over test users.
AccuracyMetrics accuracy_metrics(const RecommendationSet& rec, const std::map<int, int>& test);

/// 100 * |union of recommended items| / num_items.
double coverage_pct(const RecommendationSet& rec, int num_items);

/// Mean self-information of recommended slots: log2(num_users / max(pop, 1)).
double novelty(const RecommendationSet& rec, const std::vector<int>& popularity, int num_users);

struct LongTailMetrics {
  double arp = 0.0;   // mean over users of mean popularity in their list
  double aplt = 0.0;  // mean fraction of the list in the long tail
  double aclt = 0.0;  // mean count of list items in the long tail
};

LongTailMetrics long_tail_metrics(const RecommendationSet& rec, const PopularityPartition& part,
                                  const std::vector<int>& popularity);

/// Two-group (short-head/long-tail) ranking-based statistical parity and
/// equal opportunity. With two groups the relative dispersion reduces to
/// |a-b|/(a+b). A group with no test items leaves REO undefined.
struct UnderRecommendation {
  std::optional<double> rsp;
  std::optional<double> reo;
  double p_sh = 0.0;  // per-group recommendation rates behind RSP
  double p_lt = 0.0;
  std::optional<double> q_sh;  // per-group hit rates behind REO
  std::optional<double> q_lt;
};

UnderRecommendation under_recommendation_metrics(const RecommendationSet& rec,
                                                 const TrainTestSplit& split,
                                                 const PopularityPartition& part);

/// Data-side vs recommendation-side group shares: P_g is the share of train
/// feedback on group g, P-hat_g the share of recommended slots in g.
struct ExposureProbs {
  double p_sh = 0.0;
  double p_hat_sh = 0.0;
  double p_lt = 0.0;
  double p_hat_lt = 0.0;
};

ExposureProbs exposure_probs(const RecommendationSet& rec, const Dataset& train,
                             const PopularityPartition& part);

/// 100 * (cand - base) / base; nullopt when base == 0.
std::optional<double> relative_variation(double base, double cand);

struct TTest {
  double t = 0.0;
  double p = 1.0;
};

/// Two-sided paired t-test on equal-length vectors (n >= 2), sample sd with
/// n-1. Degenerate zero-variance cases: p = 1 when the means agree, else 0.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct MetricReport {
  int k = 0;
  int n_users = 0;
  std::map<std::string, double> values;
  std::vector<std::string> undefined_metrics;
  std::vector<int> users;
  std::vector<double> per_user_recall;
  std::vector<double> per_user_ndcg;
};

/// Full report at cutoff k: recommend, then every metric over the lists.
MetricReport evaluate(const FactorModel& model, const TrainTestSplit& split,
                      const PopularityPartition& part, int k);

/// Reporting order used by comparison tables.
extern const std::vector<std::string> kMetricOrder;

void write_metrics_json(const MetricReport& report, const std::filesystem::path& path);
MetricReport read_metrics_json(const std::filesystem::path& path);
void write_peruser_csv(const MetricReport& report, const std::filesystem::path& path);
void read_peruser_csv(const std::filesystem::path& path, MetricReport& report);

namespace detail {
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, int dof);
}  // namespace detail

}  // namespace aprlab
