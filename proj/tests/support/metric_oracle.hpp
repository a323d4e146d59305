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

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aprlab/dataset.hpp"
#include "aprlab/metrics.hpp"

// Exhaustive brute-force metric oracle over small instances, written with
// naive set arithmetic and kept independent of the library implementations.
namespace oracle {

struct Instance {
  aprlab::TrainTestSplit split;
  aprlab::PopularityPartition part;
  aprlab::RecommendationSet rec;
};

inline Instance random_instance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> pick_m(2, 6), pick_n(5, 15), pick_k(1, 5);
  const int m = pick_m(gen), n = pick_n(gen), k = pick_k(gen);

  std::vector<aprlab::Interaction> interactions;
  std::int64_t ts = 0;
  for (int u = 0; u < m; ++u) {
    // user 0 always contributes a test item; others may stay train-only
    std::uniform_int_distribution<int> pick_count(u == 0 ? 2 : 1, std::min(n - 1, 6));
    const int count = pick_count(gen);
    std::vector<int> items(n);
    for (int i = 0; i < n; ++i) items[i] = i;
    std::shuffle(items.begin(), items.end(), gen);
    for (int c = 0; c < count; ++c) interactions.push_back({u, items[c], 1.0, ts++});
  }

  std::vector<std::string> uids(m), iids(n);
  for (int u = 0; u < m; ++u) uids[u] = std::to_string(u);
  for (int i = 0; i < n; ++i) iids[i] = std::to_string(i);
  aprlab::Dataset ds(m, n, std::move(interactions), std::move(uids), std::move(iids));

  Instance inst{aprlab::temporal_leave_one_out(ds), {}, {}};
  inst.part = aprlab::partition_items(inst.split.train);

  inst.rec.k = k;
  for (const auto& [user, item] : inst.split.test) {
    (void)item;
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
      if (!inst.split.train.is_positive(user, i)) candidates.push_back(i);
    }
    std::shuffle(candidates.begin(), candidates.end(), gen);
    const int len = std::min<int>(k, static_cast<int>(candidates.size()));
    inst.rec.users.push_back(user);
    inst.rec.lists.emplace_back(candidates.begin(), candidates.begin() + len);
  }
  return inst;
}

inline std::map<int, int> popularity_by_counting(const aprlab::Dataset& train) {
  std::map<int, int> pop;
  for (const aprlab::Interaction& x : train.interactions()) pop[x.item] += 1;
  return pop;
}

inline std::set<int> head_set(const aprlab::PopularityPartition& part) {
  return {part.short_head.begin(), part.short_head.end()};
}

inline double recall(const Instance& inst) {
  double hits = 0;
  for (std::size_t ui = 0; ui < inst.rec.users.size(); ++ui) {
    const int target = inst.split.test.at(inst.rec.users[ui]);
    const auto& list = inst.rec.lists[ui];
    if (std::count(list.begin(), list.end(), target) > 0) hits += 1;
  }
  return hits / static_cast<double>(inst.rec.users.size());
}

inline double precision(const Instance& inst) { return recall(inst) / inst.rec.k; }

inline double ndcg(const Instance& inst) {
  double total = 0;
  for (std::size_t ui = 0; ui < inst.rec.users.size(); ++ui) {
    const int target = inst.split.test.at(inst.rec.users[ui]);
    const auto& list = inst.rec.lists[ui];
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
      if (list[pos] == target) {
        total += 1.0 / (std::log(1.0 + (pos + 1.0)) / std::log(2.0));
        break;
      }
    }
  }
  return total / static_cast<double>(inst.rec.users.size());
}

inline double coverage_pct(const Instance& inst) {
  std::set<int> covered;
  for (const auto& list : inst.rec.lists) covered.insert(list.begin(), list.end());
  return 100.0 * covered.size() / static_cast<double>(inst.split.train.num_items());
}

inline double novelty(const Instance& inst) {
  auto pop = popularity_by_counting(inst.split.train);
  const double m = inst.split.train.num_users();
  double total = 0;
  int slots = 0;
  for (const auto& list : inst.rec.lists) {
    for (int i : list) {
      const int phi = pop.count(i) ? pop.at(i) : 0;
      total += std::log(m / std::max(phi, 1)) / std::log(2.0);
      slots += 1;
    }
  }
  return total / slots;
}

inline double arp(const Instance& inst) {
  auto pop = popularity_by_counting(inst.split.train);
  double total = 0;
  for (const auto& list : inst.rec.lists) {
    double user_sum = 0;
    for (int i : list) user_sum += pop.count(i) ? pop.at(i) : 0;
    total += user_sum / list.size();
  }
  return total / static_cast<double>(inst.rec.lists.size());
}

inline double aplt(const Instance& inst) {
  auto sh = head_set(inst.part);
  double total = 0;
  for (const auto& list : inst.rec.lists) {
    double tail = 0;
    for (int i : list) {
      if (!sh.count(i)) tail += 1;
    }
    total += tail / list.size();
  }
  return total / static_cast<double>(inst.rec.lists.size());
}

inline double aclt(const Instance& inst) {
  auto sh = head_set(inst.part);
  double total = 0;
  for (const auto& list : inst.rec.lists) {
    for (int i : list) {
      if (!sh.count(i)) total += 1;
    }
  }
  return total / static_cast<double>(inst.rec.lists.size());
}

inline std::optional<double> rsp(const Instance& inst) {
  auto sh = head_set(inst.part);
  double rec_sh = 0, rec_lt = 0, elig_sh = 0, elig_lt = 0;
  for (std::size_t ui = 0; ui < inst.rec.users.size(); ++ui) {
    const int user = inst.rec.users[ui];
    for (int i : inst.rec.lists[ui]) {
      if (sh.count(i)) rec_sh += 1; else rec_lt += 1;
    }
    for (int i = 0; i < inst.split.train.num_items(); ++i) {
      if (inst.split.train.is_positive(user, i)) continue;
      if (sh.count(i)) elig_sh += 1; else elig_lt += 1;
    }
  }
  if (elig_sh == 0 || elig_lt == 0) return std::nullopt;
  const double p_sh = rec_sh / elig_sh, p_lt = rec_lt / elig_lt;
  if (p_sh + p_lt == 0) return std::nullopt;
  return std::abs(p_sh - p_lt) / (p_sh + p_lt);
}

inline std::optional<double> reo(const Instance& inst) {
  auto sh = head_set(inst.part);
  double hit_sh = 0, hit_lt = 0, test_sh = 0, test_lt = 0;
  for (std::size_t ui = 0; ui < inst.rec.users.size(); ++ui) {
    const int target = inst.split.test.at(inst.rec.users[ui]);
    const auto& list = inst.rec.lists[ui];
    const bool hit = std::count(list.begin(), list.end(), target) > 0;
    if (sh.count(target)) {
      test_sh += 1;
      if (hit) hit_sh += 1;
    } else {
      test_lt += 1;
      if (hit) hit_lt += 1;
    }
  }
  if (test_sh == 0 || test_lt == 0) return std::nullopt;
  const double q_sh = hit_sh / test_sh, q_lt = hit_lt / test_lt;
  if (q_sh + q_lt == 0) return std::nullopt;
  return std::abs(q_sh - q_lt) / (q_sh + q_lt);
}

struct Exposure {
  double p_sh, p_hat_sh, p_lt, p_hat_lt;
};

inline Exposure exposure(const Instance& inst) {
  auto sh = head_set(inst.part);
  double head_feedback = 0;
  for (const aprlab::Interaction& x : inst.split.train.interactions()) {
    if (sh.count(x.item)) head_feedback += 1;
  }
  const double p_sh = head_feedback / inst.split.train.interactions().size();
  double slots = 0, head_slots = 0;
  for (const auto& list : inst.rec.lists) {
    for (int i : list) {
      slots += 1;
      if (sh.count(i)) head_slots += 1;
    }
  }
  return Exposure{p_sh, head_slots / slots, 1.0 - p_sh, 1.0 - head_slots / slots};
}

}  // namespace oracle
