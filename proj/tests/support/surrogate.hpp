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

#include "aprlab/dataset.hpp"

namespace testutil {

/// Stand-in for the ML100K rating log, used by the acceptance suite when the
/// official file is not on disk. Same shape (943 users, 1682 items, 100000
/// interactions) and the same measured two-tier feedback skew; items are
/// drawn from a fixed two-tier marginal with head mass `head_share`, and the
/// user for each draw is matched by a softmax over planted low-rank
/// user-item affinities so that pairwise training has real structure to
/// recover. Deterministic given the seed.
aprlab::Dataset make_ml100k_surrogate(std::uint64_t seed);

struct SurrogateParams {
  int num_users = 943;
  int num_items = 1682;
  int n_interactions = 100000;
  double head_share = 0.6452;
  int latent_dim = 8;
  double affinity_scale = 2.0;  // softmax temperature on the planted affinities
};

aprlab::Dataset make_surrogate(const SurrogateParams& params, std::uint64_t seed);

}  // namespace testutil
