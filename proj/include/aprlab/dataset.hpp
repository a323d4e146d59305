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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace aprlab {

struct Interaction {
  int user = 0;
  int item = 0;
  double rating = 0.0;  // carried through round trips, unused by training
  std::int64_t timestamp = 0;
};

/// Immutable implicit-feedback dataset. Users and items are contiguous
/// 0-based indices; external ids are kept in side tables. Popularity of an
/// item is the number of distinct users with feedback on it (equal to its
/// interaction count, since duplicate pairs are collapsed on load).
class Dataset {
 public:
  Dataset(int num_users, int num_items, std::vector<Interaction> interactions,
          std::vector<std::string> user_ids, std::vector<std::string> item_ids);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }

  /// Sorted item indices this user interacted with (I+_u).
  std::span<const int> positives(int user) const;
  bool is_positive(int user, int item) const;

  int popularity(int item) const { return popularity_[item]; }
  const std::vector<int>& popularity() const { return popularity_; }

  const std::string& user_id(int index) const { return user_ids_[index]; }
  const std::string& item_id(int index) const { return item_ids_[index]; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  std::optional<int> user_index(const std::string& id) const;
  std::optional<int> item_index(const std::string& id) const;

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  std::vector<Interaction> interactions_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, int> user_index_;
  std::unordered_map<std::string, int> item_index_;
  std::vector<int> popularity_;
  std::vector<int> positives_flat_;     // concatenated sorted positives
  std::vector<int> positives_offsets_;  // size num_users + 1
};

struct TrainTestSplit {
  Dataset train;
  std::map<int, int> test;                     // user -> single held-out item
  std::map<int, std::int64_t> test_timestamp;  // user -> its timestamp
  std::map<int, double> test_rating;           // carried for persistence
};

/// Top 20% of items by train popularity vs the remaining 80%.
struct PopularityPartition {
  std::vector<int> short_head;  // ascending item index
  std::vector<int> long_tail;   // ascending item index
  std::vector<char> in_head;    // size num_items membership mask
  int cutoff_size = 0;

  bool head(int item) const { return in_head[item] != 0; }
};

/// Reads `user<TAB>item<TAB>rating<TAB>timestamp` lines; `#` lines ignored.
/// Indices are assigned in first-seen order; duplicate (user,item) pairs are
/// collapsed keeping the latest timestamp.
Dataset load_interactions(const std::filesystem::path& path);

/// Per user, the max-timestamp interaction (ties: larger item index) is held
/// out as the single test item. Users with one interaction stay train-only.
/// Train popularity is rebuilt from the remaining interactions.
TrainTestSplit temporal_leave_one_out(const Dataset& ds);

/// Items sorted by (popularity desc, index asc); the first floor(0.2 N) form
/// the short head. Requires num_items >= 5 so the cutoff is nonzero.
PopularityPartition partition_items(const Dataset& train);

/// Share of feedback falling on short-head items.
double head_probability(const Dataset& ds, const PopularityPartition& part);

/// |interactions| / (num_users * num_items).
double density(const Dataset& ds);

/// Two-tier sampler: with probability head_share the item is drawn uniformly
/// from the designated top-20% block, otherwise uniformly from the rest.
/// Users are uniform, duplicates are resampled, timestamps strictly increase
/// per user. Deterministic given seed. Requires num_users <= n_interactions
/// <= num_users * num_items.
Dataset generate_synthetic(int num_users, int num_items, int n_interactions,
                           double head_share, std::uint64_t seed);

void save_dataset_tsv(const Dataset& ds, const std::filesystem::path& path);

/// Persists train.tsv / test.tsv plus users.tsv / items.tsv index tables so
/// a reload reproduces the exact index space the split was built with.
void save_split(const TrainTestSplit& split, const std::filesystem::path& dir);
TrainTestSplit load_split(const std::filesystem::path& dir);

}  // namespace aprlab
