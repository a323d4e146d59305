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

#include "aprlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aprlab/errors.hpp"
#include "aprlab/numeric.hpp"

namespace aprlab {

const std::vector<std::string> kMetricOrder = {
    "Rec", "Prec", "nDCG", "Nov", "Cov%", "ARP", "APLT", "ACLT",
    "RSP", "REO", "P_SH", "P_hat_SH", "P_LT", "P_hat_LT"};

RecommendationSet recommend_all(const FactorModel& model, const TrainTestSplit& split, int k) {
  if (model.num_users() != split.train.num_users() ||
      model.num_items() != split.train.num_items()) {
    throw DataError("model dimensions do not match split");
  }
  if (k < 1) throw DataError("k must be >= 1");

  RecommendationSet rec;
  rec.k = k;
  rec.users.reserve(split.test.size());
  rec.lists.reserve(split.test.size());
  for (const auto& [user, item] : split.test) {
    (void)item;
    rec.users.push_back(user);
    rec.lists.push_back(model.top_k(user, k, split.train.positives(user)));
  }
  return rec;
}

AccuracyMetrics accuracy_metrics(const RecommendationSet& rec, const std::map<int, int>& test) {
  if (test.empty()) throw DataError("empty test set");
  AccuracyMetrics out;
  out.per_user_recall.reserve(rec.users.size());
  out.per_user_ndcg.reserve(rec.users.size());

  for (std::size_t ui = 0; ui < rec.users.size(); ++ui) {
    auto it = test.find(rec.users[ui]);
    if (it == test.end()) {
      throw DataError("recommendation user " + std::to_string(rec.users[ui]) + " has no test item");
    }
    const int target = it->second;
    const auto& list = rec.lists[ui];
    double r = 0.0, n = 0.0;
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
      if (list[pos] == target) {
        r = 1.0;
        n = 1.0 / std::log2(2.0 + static_cast<double>(pos));  // 1-based rank = pos+1
        break;
      }
    }
    out.per_user_recall.push_back(r);
    out.per_user_ndcg.push_back(n);
  }

  const double m = static_cast<double>(rec.users.size());
  for (double r : out.per_user_recall) out.recall += r;
  for (double n : out.per_user_ndcg) out.ndcg += n;
  out.recall /= m;
  out.ndcg /= m;
  out.precision = out.recall / static_cast<double>(rec.k);
  return out;
}

double coverage_pct(const RecommendationSet& rec, int num_items) {
  if (num_items < 1) throw DataError("num_items must be positive");
  std::set<int> seen;
  for (const auto& list : rec.lists) seen.insert(list.begin(), list.end());
  return 100.0 * static_cast<double>(seen.size()) / static_cast<double>(num_items);
}

double novelty(const RecommendationSet& rec, const std::vector<int>& popularity, int num_users) {
  double sum = 0.0;
  std::int64_t slots = 0;
  for (const auto& list : rec.lists) {
    for (int i : list) {
      sum += std::log2(static_cast<double>(num_users) /
                       static_cast<double>(std::max(popularity[i], 1)));
      ++slots;
    }
  }
  if (slots == 0) throw DataError("novelty needs non-empty lists");
  return sum / static_cast<double>(slots);
}

LongTailMetrics long_tail_metrics(const RecommendationSet& rec, const PopularityPartition& part,
                                  const std::vector<int>& popularity) {
  LongTailMetrics out;
  if (rec.lists.empty()) throw DataError("long_tail_metrics needs at least one list");
  for (const auto& list : rec.lists) {
    if (list.empty()) throw DataError("long_tail_metrics found an empty list");
    double pop_sum = 0.0;
    int tail = 0;
    for (int i : list) {
      pop_sum += static_cast<double>(popularity[i]);
      if (!part.head(i)) ++tail;
    }
    out.arp += pop_sum / static_cast<double>(list.size());
    out.aplt += static_cast<double>(tail) / static_cast<double>(list.size());
    out.aclt += static_cast<double>(tail);
  }
  const double m = static_cast<double>(rec.lists.size());
  out.arp /= m;
  out.aplt /= m;
  out.aclt /= m;
  return out;
}

UnderRecommendation under_recommendation_metrics(const RecommendationSet& rec,
                                                 const TrainTestSplit& split,
                                                 const PopularityPartition& part) {
  if (part.short_head.empty() || part.long_tail.empty()) {
    throw DataError("both partition groups must be non-empty");
  }
  UnderRecommendation out;

  // RSP: recommended share of each group's still-recommendable items.
  std::int64_t rec_sh = 0, rec_lt = 0, elig_sh = 0, elig_lt = 0;
  for (std::size_t ui = 0; ui < rec.users.size(); ++ui) {
    const int user = rec.users[ui];
    for (int i : rec.lists[ui]) {
      if (part.head(i)) ++rec_sh; else ++rec_lt;
    }
    auto positives = split.train.positives(user);
    std::int64_t pos_sh = 0;
    for (int i : positives) {
      if (part.head(i)) ++pos_sh;
    }
    elig_sh += static_cast<std::int64_t>(part.short_head.size()) - pos_sh;
    elig_lt += static_cast<std::int64_t>(part.long_tail.size()) -
               (static_cast<std::int64_t>(positives.size()) - pos_sh);
  }
  if (elig_sh > 0 && elig_lt > 0) {
    out.p_sh = static_cast<double>(rec_sh) / static_cast<double>(elig_sh);
    out.p_lt = static_cast<double>(rec_lt) / static_cast<double>(elig_lt);
    if (out.p_sh + out.p_lt > 0.0) {
      out.rsp = std::abs(out.p_sh - out.p_lt) / (out.p_sh + out.p_lt);
    }
  }

  // REO: per-group hit rate over test items.
  std::int64_t hit_sh = 0, hit_lt = 0, test_sh = 0, test_lt = 0;
  for (std::size_t ui = 0; ui < rec.users.size(); ++ui) {
    auto it = split.test.find(rec.users[ui]);
    if (it == split.test.end()) continue;
    const int target = it->second;
    const bool head = part.head(target);
    (head ? test_sh : test_lt) += 1;
    const auto& list = rec.lists[ui];
    if (std::find(list.begin(), list.end(), target) != list.end()) {
      (head ? hit_sh : hit_lt) += 1;
    }
  }
  if (test_sh > 0 && test_lt > 0) {
    out.q_sh = static_cast<double>(hit_sh) / static_cast<double>(test_sh);
    out.q_lt = static_cast<double>(hit_lt) / static_cast<double>(test_lt);
    if (*out.q_sh + *out.q_lt > 0.0) {
      out.reo = std::abs(*out.q_sh - *out.q_lt) / (*out.q_sh + *out.q_lt);
    }
  }
  return out;
}

ExposureProbs exposure_probs(const RecommendationSet& rec, const Dataset& train,
                             const PopularityPartition& part) {
  ExposureProbs out;
  out.p_sh = head_probability(train, part);
  out.p_lt = 1.0 - out.p_sh;

  std::int64_t slots = 0, head_slots = 0;
  for (const auto& list : rec.lists) {
    for (int i : list) {
      ++slots;
      if (part.head(i)) ++head_slots;
    }
  }
  if (slots == 0) throw DataError("exposure_probs needs non-empty recommendations");
  out.p_hat_sh = static_cast<double>(head_slots) / static_cast<double>(slots);
  out.p_hat_lt = 1.0 - out.p_hat_sh;
  return out;
}

std::optional<double> relative_variation(double base, double cand) {
  if (base == 0.0) return std::nullopt;
  return 100.0 * (cand - base) / base;
}

namespace detail {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3.0e-16;
  constexpr double kTiny = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw DataError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int dof) {
  if (dof < 1) throw DataError("t distribution needs dof >= 1");
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(dof);
  const double x = nu / (nu + t * t);
  return regularized_incomplete_beta(nu / 2.0, 0.5, x);
}

}  // namespace detail

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired_t_test length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw DataError("paired_t_test needs n >= 2");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTest out;
  if (sd == 0.0) {
    if (mean == 0.0) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
    }
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  out.p = detail::student_t_two_sided_p(out.t, static_cast<int>(n) - 1);
  return out;
}

MetricReport evaluate(const FactorModel& model, const TrainTestSplit& split,
                      const PopularityPartition& part, int k) {
  RecommendationSet rec = recommend_all(model, split, k);

  MetricReport report;
  report.k = k;
  report.n_users = static_cast<int>(rec.users.size());
  report.users = rec.users;

  AccuracyMetrics acc = accuracy_metrics(rec, split.test);
  report.per_user_recall = std::move(acc.per_user_recall);
  report.per_user_ndcg = std::move(acc.per_user_ndcg);
  report.values["Rec"] = acc.recall;
  report.values["Prec"] = acc.precision;
  report.values["nDCG"] = acc.ndcg;
  report.values["Cov%"] = coverage_pct(rec, split.train.num_items());
  report.values["Nov"] = novelty(rec, split.train.popularity(), split.train.num_users());

  LongTailMetrics lt = long_tail_metrics(rec, part, split.train.popularity());
  report.values["ARP"] = lt.arp;
  report.values["APLT"] = lt.aplt;
  report.values["ACLT"] = lt.aclt;

  UnderRecommendation ur = under_recommendation_metrics(rec, split, part);
  if (ur.rsp) {
    report.values["RSP"] = *ur.rsp;
  } else {
    report.undefined_metrics.push_back("RSP");
  }
  if (ur.reo) {
    report.values["REO"] = *ur.reo;
  } else {
    report.undefined_metrics.push_back("REO");
  }

  ExposureProbs ex = exposure_probs(rec, split.train, part);
  report.values["P_SH"] = ex.p_sh;
  report.values["P_hat_SH"] = ex.p_hat_sh;
  report.values["P_LT"] = ex.p_lt;
  report.values["P_hat_LT"] = ex.p_hat_lt;
  return report;
}

void write_metrics_json(const MetricReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["k"] = report.k;
  j["n_users"] = report.n_users;
  j["undefined_metrics"] = report.undefined_metrics;
  for (const auto& [name, value] : report.values) j[name] = value;

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

MetricReport read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad metrics json " + path.string() + ": " + e.what());
  }
  MetricReport report;
  report.k = j.at("k").get<int>();
  report.n_users = j.at("n_users").get<int>();
  report.undefined_metrics = j.at("undefined_metrics").get<std::vector<std::string>>();
  for (const auto& [key, value] : j.items()) {
    if (key == "k" || key == "n_users" || key == "undefined_metrics") continue;
    report.values[key] = value.get<double>();
  }
  return report;
}

void write_peruser_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "user,rec,ndcg\n";
  for (std::size_t i = 0; i < report.users.size(); ++i) {
    out << report.users[i] << ',' << format_real_exact(report.per_user_recall[i]) << ','
        << format_real_exact(report.per_user_ndcg[i]) << '\n';
  }
}

void read_peruser_csv(const std::filesystem::path& path, MetricReport& report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  report.users.clear();
  report.per_user_recall.clear();
  report.per_user_ndcg.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string user, rec, ndcg;
    if (!std::getline(ss, user, ',') || !std::getline(ss, rec, ',') || !std::getline(ss, ndcg)) {
      throw DataError("bad peruser.csv row: " + line);
    }
    report.users.push_back(std::stoi(user));
    report.per_user_recall.push_back(std::stod(rec));
    report.per_user_ndcg.push_back(std::stod(ndcg));
  }
}

}  // namespace aprlab
