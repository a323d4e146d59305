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

#include "aprlab/model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "aprlab/errors.hpp"
#include "aprlab/numeric.hpp"

namespace aprlab {

namespace {
constexpr const char* kMagic = "APRLAB-MODEL";
constexpr int kVersion = 1;
}  // namespace

FactorModel::FactorModel(int num_users, int num_items, int factors)
    : num_users_(num_users),
      num_items_(num_items),
      factors_(factors),
      user_factors_(static_cast<std::size_t>(num_users) * factors, 0.0),
      item_factors_(static_cast<std::size_t>(num_items) * factors, 0.0) {
  if (num_users < 1 || num_items < 1 || factors < 1) {
    throw DataError("model dimensions must be positive");
  }
}

FactorModel FactorModel::init(int num_users, int num_items, const ModelConfig& cfg) {
  if (cfg.init_std <= 0.0) throw DataError("init_std must be positive");
  FactorModel m(num_users, num_items, cfg.factors);
  std::seed_seq sseq{static_cast<std::uint32_t>(cfg.seed),
                     static_cast<std::uint32_t>(cfg.seed >> 32), 0x1f2du};
  std::mt19937_64 gen(sseq);
  std::normal_distribution<double> gauss(0.0, cfg.init_std);
  for (double& v : m.user_factors_) v = gauss(gen);
  for (double& v : m.item_factors_) v = gauss(gen);
  return m;
}

std::span<double> FactorModel::user_row(int u) {
  return {user_factors_.data() + static_cast<std::size_t>(u) * factors_,
          static_cast<std::size_t>(factors_)};
}

std::span<const double> FactorModel::user_row(int u) const {
  return {user_factors_.data() + static_cast<std::size_t>(u) * factors_,
          static_cast<std::size_t>(factors_)};
}

std::span<double> FactorModel::item_row(int i) {
  return {item_factors_.data() + static_cast<std::size_t>(i) * factors_,
          static_cast<std::size_t>(factors_)};
}

std::span<const double> FactorModel::item_row(int i) const {
  return {item_factors_.data() + static_cast<std::size_t>(i) * factors_,
          static_cast<std::size_t>(factors_)};
}

double FactorModel::score(int u, int i) const {
  if (u < 0 || u >= num_users_ || i < 0 || i >= num_items_) {
    throw DataError("score index out of range");
  }
  return dot(user_row(u), item_row(i));
}

double FactorModel::score_diff(int u, int i, int j) const {
  return score(u, i) - score(u, j);
}

std::vector<int> FactorModel::top_k(int u, int k, std::span<const int> excluded) const {
  if (u < 0 || u >= num_users_) throw DataError("top_k user out of range");
  if (k < 1) throw DataError("top_k needs k >= 1");

  const auto pu = user_row(u);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(num_items_ - excluded.size());
  for (int i = 0; i < num_items_; ++i) {
    if (std::binary_search(excluded.begin(), excluded.end(), i)) continue;
    scored.emplace_back(dot(pu, item_row(i)), i);
  }
  const std::size_t take = std::min<std::size_t>(k, scored.size());
  auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);

  std::vector<int> result(take);
  for (std::size_t r = 0; r < take; ++r) result[r] = scored[r].second;
  return result;
}

void FactorModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << num_users_ << ' ' << num_items_ << ' ' << factors_ << '\n';
  auto write_matrix = [&](const std::vector<double>& data, int rows) {
    for (int r = 0; r < rows; ++r) {
      for (int l = 0; l < factors_; ++l) {
        if (l) out << ' ';
        out << format_real_exact(data[static_cast<std::size_t>(r) * factors_ + l]);
      }
      out << '\n';
    }
  };
  write_matrix(user_factors_, num_users_);
  write_matrix(item_factors_, num_items_);
  if (!out) throw DataError("write failed for " + path.string());
}

FactorModel FactorModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty model file " + path.string());
  {
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    if (!(header >> magic >> version) || magic != kMagic) {
      throw DataError("unrecognized model header in " + path.string());
    }
    if (version != kVersion) {
      throw DataError("unsupported model version " + std::to_string(version));
    }
  }
  int m = 0, n = 0, f = 0;
  if (!std::getline(in, line)) throw DataError("truncated model file");
  {
    std::istringstream dims(line);
    if (!(dims >> m >> n >> f) || m < 1 || n < 1 || f < 1) {
      throw DataError("bad model dimensions line");
    }
  }

  FactorModel model(m, n, f);
  auto read_matrix = [&](std::vector<double>& data, int rows, const char* which) {
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) {
        throw DataError(std::string("truncated model file in ") + which + " rows");
      }
      const char* ptr = line.data();
      const char* end = line.data() + line.size();
      for (int l = 0; l < f; ++l) {
        while (ptr != end && *ptr == ' ') ++ptr;
        double value = 0.0;
        auto [next, ec] = std::from_chars(ptr, end, value);
        if (ec != std::errc{}) {
          throw DataError(std::string("dimension mismatch or corrupt row in ") + which +
                          " (row " + std::to_string(r) + ")");
        }
        data[static_cast<std::size_t>(r) * f + l] = value;
        ptr = next;
      }
      while (ptr != end && *ptr == ' ') ++ptr;
      if (ptr != end) {
        throw DataError(std::string("dimension mismatch: extra columns in ") + which +
                        " (row " + std::to_string(r) + ")");
      }
    }
  };
  read_matrix(model.user_factors_, m, "user");
  read_matrix(model.item_factors_, n, "item");
  return model;
}

}  // namespace aprlab
