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
#include <span>
#include <vector>

namespace aprlab {

struct ModelConfig {
  int factors = 64;
  double init_std = 0.01;
  std::uint64_t seed = 0;
};

/// Matrix factorization parameters: user rows P (M x f) and item rows
/// Q (N x f). The score of (u,i) is the inner product of P_u and Q_i.
class FactorModel {
 public:
  FactorModel(int num_users, int num_items, int factors);  // zero-filled

  /// Entries i.i.d. Gaussian(0, init_std^2) from the seeded generator.
  static FactorModel init(int num_users, int num_items, const ModelConfig& cfg);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  int factors() const { return factors_; }

  std::span<double> user_row(int u);
  std::span<const double> user_row(int u) const;
  std::span<double> item_row(int i);
  std::span<const double> item_row(int i) const;

  double score(int u, int i) const;
  double score_diff(int u, int i, int j) const;  // score(u,i) - score(u,j)

  /// Top-scoring items for u not in `excluded` (a sorted index list), score
  /// descending with ties broken by ascending item index. Returns
  /// min(k, available) items.
  std::vector<int> top_k(int u, int k, std::span<const int> excluded) const;

  void save(const std::filesystem::path& path) const;
  static FactorModel load(const std::filesystem::path& path);

  bool operator==(const FactorModel&) const = default;

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  int factors_ = 0;
  std::vector<double> user_factors_;  // row-major M x f
  std::vector<double> item_factors_;  // row-major N x f
};

}  // namespace aprlab
