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

#include "aprlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <unordered_set>

#include "aprlab/errors.hpp"
#include "aprlab/numeric.hpp"

namespace aprlab {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::int64_t parse_int64(std::string_view s, const char* what, std::size_t line_no) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric " + what +
                    " field '" + std::string(s) + "'");
  }
  return value;
}

double parse_double(std::string_view s, const char* what, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric " + what +
                    " field '" + std::string(s) + "'");
  }
  return value;
}

int intern(const std::string& id, std::unordered_map<std::string, int>& index,
           std::vector<std::string>& ids) {
  auto it = index.find(id);
  if (it != index.end()) return it->second;
  int idx = static_cast<int>(ids.size());
  index.emplace(id, idx);
  ids.push_back(id);
  return idx;
}

}  // namespace

Dataset::Dataset(int num_users, int num_items, std::vector<Interaction> interactions,
                 std::vector<std::string> user_ids, std::vector<std::string> item_ids)
    : num_users_(num_users),
      num_items_(num_items),
      interactions_(std::move(interactions)),
      user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)) {
  if (num_users_ < 0 || num_items_ < 0) throw DataError("negative dimension");
  if (static_cast<int>(user_ids_.size()) != num_users_ ||
      static_cast<int>(item_ids_.size()) != num_items_) {
    throw DataError("id table size does not match declared dimensions");
  }
  for (int u = 0; u < num_users_; ++u) user_index_.emplace(user_ids_[u], u);
  for (int i = 0; i < num_items_; ++i) item_index_.emplace(item_ids_[i], i);

  popularity_.assign(num_items_, 0);
  std::vector<int> user_counts(num_users_, 0);
  for (const Interaction& x : interactions_) {
    if (x.user < 0 || x.user >= num_users_ || x.item < 0 || x.item >= num_items_) {
      throw DataError("interaction index out of range");
    }
    if (x.timestamp < 0) throw DataError("negative timestamp");
    ++popularity_[x.item];
    ++user_counts[x.user];
  }
  for (int u = 0; u < num_users_; ++u) {
    if (user_counts[u] == 0) {
      throw DataError("user " + std::to_string(u) + " has no interactions");
    }
  }

  positives_offsets_.assign(num_users_ + 1, 0);
  for (int u = 0; u < num_users_; ++u) {
    positives_offsets_[u + 1] = positives_offsets_[u] + user_counts[u];
  }
  positives_flat_.resize(interactions_.size());
  std::vector<int> cursor(positives_offsets_.begin(), positives_offsets_.end() - 1);
  for (const Interaction& x : interactions_) {
    positives_flat_[cursor[x.user]++] = x.item;
  }
  for (int u = 0; u < num_users_; ++u) {
    auto begin = positives_flat_.begin() + positives_offsets_[u];
    auto end = positives_flat_.begin() + positives_offsets_[u + 1];
    std::sort(begin, end);
    if (std::adjacent_find(begin, end) != end) {
      throw DataError("duplicate (user,item) pair for user " + std::to_string(u));
    }
  }
}

std::span<const int> Dataset::positives(int user) const {
  return {positives_flat_.data() + positives_offsets_[user],
          positives_flat_.data() + positives_offsets_[user + 1]};
}

bool Dataset::is_positive(int user, int item) const {
  auto pos = positives(user);
  return std::binary_search(pos.begin(), pos.end(), item);
}

std::optional<int> Dataset::user_index(const std::string& id) const {
  auto it = user_index_.find(id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Dataset::item_index(const std::string& id) const {
  auto it = item_index_.find(id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

Dataset load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<std::string> user_ids, item_ids;
  std::unordered_map<std::string, int> user_index, item_index;
  std::vector<Interaction> interactions;
  // (user,item) -> position in `interactions`, for latest-timestamp dedup
  std::unordered_map<std::int64_t, std::size_t> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw DataError("line " + std::to_string(line_no) + ": expected 4 TAB-separated fields, got " +
                      std::to_string(fields.size()));
    }
    Interaction x;
    x.rating = parse_double(fields[2], "rating", line_no);
    x.timestamp = parse_int64(fields[3], "timestamp", line_no);
    if (x.timestamp < 0) {
      throw DataError("line " + std::to_string(line_no) + ": negative timestamp");
    }
    x.user = intern(std::string(fields[0]), user_index, user_ids);
    x.item = intern(std::string(fields[1]), item_index, item_ids);

    std::int64_t key = static_cast<std::int64_t>(x.user) * (1ll << 31) + x.item;
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, interactions.size());
      interactions.push_back(x);
    } else if (x.timestamp >= interactions[it->second].timestamp) {
      interactions[it->second] = x;
    }
  }
  if (interactions.empty()) throw DataError("no interactions in " + path.string());

  const int m = static_cast<int>(user_ids.size());
  const int n = static_cast<int>(item_ids.size());
  return Dataset(m, n, std::move(interactions), std::move(user_ids), std::move(item_ids));
}

TrainTestSplit temporal_leave_one_out(const Dataset& ds) {
  const int m = ds.num_users();
  std::vector<int> count(m, 0);
  std::vector<std::size_t> latest(m, 0);
  const auto& all = ds.interactions();
  for (std::size_t idx = 0; idx < all.size(); ++idx) {
    const Interaction& x = all[idx];
    if (count[x.user] == 0) {
      latest[x.user] = idx;
    } else {
      const Interaction& cur = all[latest[x.user]];
      if (x.timestamp > cur.timestamp ||
          (x.timestamp == cur.timestamp && x.item > cur.item)) {
        latest[x.user] = idx;
      }
    }
    ++count[x.user];
  }

  std::vector<char> held(all.size(), 0);
  std::map<int, int> test;
  std::map<int, std::int64_t> test_ts;
  std::map<int, double> test_rating;
  for (int u = 0; u < m; ++u) {
    if (count[u] < 2) continue;  // single-interaction users stay train-only
    const Interaction& x = all[latest[u]];
    held[latest[u]] = 1;
    test[u] = x.item;
    test_ts[u] = x.timestamp;
    test_rating[u] = x.rating;
  }

  std::vector<Interaction> train_interactions;
  train_interactions.reserve(all.size() - test.size());
  for (std::size_t idx = 0; idx < all.size(); ++idx) {
    if (!held[idx]) train_interactions.push_back(all[idx]);
  }

  Dataset train(ds.num_users(), ds.num_items(), std::move(train_interactions),
                ds.user_ids(), ds.item_ids());
  return TrainTestSplit{std::move(train), std::move(test), std::move(test_ts),
                        std::move(test_rating)};
}

PopularityPartition partition_items(const Dataset& train) {
  const int n = train.num_items();
  if (n < 5) throw DataError("need at least 5 items to partition (cutoff would be 0)");
  const int cutoff = n / 5;  // floor(0.2 N)

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (train.popularity(a) != train.popularity(b)) {
      return train.popularity(a) > train.popularity(b);
    }
    return a < b;
  });

  PopularityPartition part;
  part.cutoff_size = cutoff;
  part.in_head.assign(n, 0);
  part.short_head.assign(order.begin(), order.begin() + cutoff);
  part.long_tail.assign(order.begin() + cutoff, order.end());
  std::sort(part.short_head.begin(), part.short_head.end());
  std::sort(part.long_tail.begin(), part.long_tail.end());
  for (int i : part.short_head) part.in_head[i] = 1;
  return part;
}

double head_probability(const Dataset& ds, const PopularityPartition& part) {
  if (ds.interactions().empty()) throw DataError("empty dataset");
  if (static_cast<int>(part.in_head.size()) != ds.num_items()) {
    throw DataError("partition does not match dataset");
  }
  std::int64_t head = 0;
  for (int i : part.short_head) head += ds.popularity(i);
  return static_cast<double>(head) / static_cast<double>(ds.interactions().size());
}

double density(const Dataset& ds) {
  if (ds.num_users() == 0 || ds.num_items() == 0) throw DataError("empty dimensions");
  return static_cast<double>(ds.interactions().size()) /
         (static_cast<double>(ds.num_users()) * static_cast<double>(ds.num_items()));
}

Dataset generate_synthetic(int num_users, int num_items, int n_interactions,
                           double head_share, std::uint64_t seed) {
  if (num_users < 1 || num_items < 5) throw DataError("need >= 1 user and >= 5 items");
  if (!(head_share > 0.0 && head_share < 1.0)) throw DataError("head_share must be in (0,1)");
  const std::int64_t capacity =
      static_cast<std::int64_t>(num_users) * static_cast<std::int64_t>(num_items);
  if (n_interactions > capacity) throw DataError("infeasible n_interactions: exceeds M*N");
  if (n_interactions < num_users) {
    throw DataError("infeasible n_interactions: fewer than num_users, some user would be empty");
  }

  const int head_size = num_items / 5;  // designated top-20% block: items [0, head_size)
  const std::int64_t head_capacity = static_cast<std::int64_t>(num_users) * head_size;
  const std::int64_t tail_capacity = capacity - head_capacity;

  std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     0x5e7au};
  std::mt19937_64 gen(sseq);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick_user(0, num_users - 1);
  std::uniform_int_distribution<int> pick_head(0, head_size - 1);
  std::uniform_int_distribution<int> pick_tail(head_size, num_items - 1);

  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<std::size_t>(n_interactions) * 2);
  std::vector<Interaction> interactions;
  interactions.reserve(n_interactions);
  std::int64_t head_filled = 0, tail_filled = 0;

  for (int t = 0; t < n_interactions; ++t) {
    while (true) {
      // first M draws give each user one interaction so none ends up empty
      const int u = t < num_users ? t : pick_user(gen);
      bool head = coin(gen) < head_share;
      if (head && head_filled == head_capacity) head = false;
      if (!head && tail_filled == tail_capacity) head = true;
      const int i = head ? pick_head(gen) : pick_tail(gen);
      const std::int64_t key = static_cast<std::int64_t>(u) * num_items + i;
      if (!seen.insert(key).second) continue;  // duplicate pair: resample
      (head ? head_filled : tail_filled) += 1;
      interactions.push_back(Interaction{u, i, 1.0, t});
      break;
    }
  }

  std::vector<std::string> user_ids(num_users), item_ids(num_items);
  for (int u = 0; u < num_users; ++u) user_ids[u] = std::to_string(u);
  for (int i = 0; i < num_items; ++i) item_ids[i] = std::to_string(i);
  return Dataset(num_users, num_items, std::move(interactions), std::move(user_ids),
                 std::move(item_ids));
}

namespace {

void write_interaction_line(std::ofstream& out, const Dataset& ds, const Interaction& x) {
  out << ds.user_id(x.user) << '\t' << ds.item_id(x.item) << '\t'
      << format_real_exact(x.rating) << '\t' << x.timestamp << '\n';
}

}  // namespace

void save_dataset_tsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Interaction& x : ds.interactions()) write_interaction_line(out, ds, x);
}

void save_split(const TrainTestSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset_tsv(split.train, dir / "train.tsv");

  std::ofstream test_out(dir / "test.tsv");
  if (!test_out) throw DataError("cannot write " + (dir / "test.tsv").string());
  for (const auto& [user, item] : split.test) {
    test_out << split.train.user_id(user) << '\t' << split.train.item_id(item) << '\t'
             << format_real_exact(split.test_rating.at(user)) << '\t'
             << split.test_timestamp.at(user) << '\n';
  }

  std::ofstream users_out(dir / "users.tsv");
  for (int u = 0; u < split.train.num_users(); ++u) {
    users_out << u << '\t' << split.train.user_id(u) << '\n';
  }
  std::ofstream items_out(dir / "items.tsv");
  for (int i = 0; i < split.train.num_items(); ++i) {
    items_out << i << '\t' << split.train.item_id(i) << '\n';
  }
}

namespace {

std::vector<std::string> load_id_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected 2 fields");
    }
    const std::int64_t idx = parse_int64(fields[0], "index", line_no);
    if (idx != static_cast<std::int64_t>(ids.size())) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": indices not contiguous");
    }
    ids.emplace_back(fields[1]);
  }
  return ids;
}

struct RawRow {
  std::string user, item;
  double rating;
  std::int64_t timestamp;
};

std::vector<RawRow> load_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected 4 TAB-separated fields");
    }
    rows.push_back(RawRow{std::string(fields[0]), std::string(fields[1]),
                          parse_double(fields[2], "rating", line_no),
                          parse_int64(fields[3], "timestamp", line_no)});
  }
  return rows;
}

}  // namespace

TrainTestSplit load_split(const std::filesystem::path& dir) {
  std::vector<std::string> user_ids, item_ids;
  std::unordered_map<std::string, int> user_index, item_index;

  auto rows = load_rows(dir / "train.tsv");
  auto test_rows = load_rows(dir / "test.tsv");

  if (std::filesystem::exists(dir / "users.tsv") && std::filesystem::exists(dir / "items.tsv")) {
    user_ids = load_id_table(dir / "users.tsv");
    item_ids = load_id_table(dir / "items.tsv");
    for (std::size_t u = 0; u < user_ids.size(); ++u) user_index.emplace(user_ids[u], u);
    for (std::size_t i = 0; i < item_ids.size(); ++i) item_index.emplace(item_ids[i], i);
    for (const RawRow& r : rows) {
      if (!user_index.count(r.user)) throw DataError("train.tsv user not in users.tsv: " + r.user);
      if (!item_index.count(r.item)) throw DataError("train.tsv item not in items.tsv: " + r.item);
    }
  } else {
    // degraded mode: derive the index space first-seen from train then test
    for (const RawRow& r : rows) {
      intern(r.user, user_index, user_ids);
      intern(r.item, item_index, item_ids);
    }
    for (const RawRow& r : test_rows) {
      if (!user_index.count(r.user)) throw DataError("test user absent from train: " + r.user);
      intern(r.item, item_index, item_ids);
    }
  }

  std::vector<Interaction> interactions;
  interactions.reserve(rows.size());
  for (const RawRow& r : rows) {
    interactions.push_back(
        Interaction{user_index.at(r.user), item_index.at(r.item), r.rating, r.timestamp});
  }
  const int m = static_cast<int>(user_ids.size());
  const int n = static_cast<int>(item_ids.size());
  Dataset train(m, n, std::move(interactions), std::move(user_ids), std::move(item_ids));

  std::map<int, int> test;
  std::map<int, std::int64_t> test_ts;
  std::map<int, double> test_rating;
  for (const RawRow& r : test_rows) {
    auto u = train.user_index(r.user);
    auto i = train.item_index(r.item);
    if (!u) throw DataError("test user absent from train: " + r.user);
    if (!i) throw DataError("test item unknown: " + r.item);
    if (test.count(*u)) throw DataError("duplicate test entry for user " + r.user);
    if (train.is_positive(*u, *i)) {
      throw DataError("test item is a train positive for user " + r.user);
    }
    test[*u] = *i;
    test_ts[*u] = r.timestamp;
    test_rating[*u] = r.rating;
  }
  return TrainTestSplit{std::move(train), std::move(test), std::move(test_ts),
                        std::move(test_rating)};
}

}  // namespace aprlab
