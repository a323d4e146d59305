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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "aprlab/errors.hpp"
#include "aprlab/model.hpp"
#include "support/test_util.hpp"

using aprlab::DataError;
using aprlab::FactorModel;
using aprlab::ModelConfig;
using testutil::TempDir;
using testutil::write_file;

TEST_SUITE_BEGIN("model");

TEST_CASE("init: same seed gives bitwise-identical matrices") {
  auto a = FactorModel::init(5, 7, ModelConfig{8, 0.01, 123});
  auto b = FactorModel::init(5, 7, ModelConfig{8, 0.01, 123});
  CHECK(a == b);
  auto c = FactorModel::init(5, 7, ModelConfig{8, 0.01, 124});
  CHECK_FALSE(a == c);
}

TEST_CASE("init: sample mean of entries stays near zero") {
  const int m = 200, f = 64;  // m*f >= 1e4
  auto model = FactorModel::init(m, 3, ModelConfig{f, 0.01, 5});
  double mean = 0.0;
  for (int u = 0; u < m; ++u) {
    for (double v : model.user_row(u)) mean += v;
  }
  mean /= static_cast<double>(m) * f;
  CHECK(mean > -0.005);
  CHECK(mean < 0.005);
}

TEST_CASE("init: 1x1 shape") {
  auto model = FactorModel::init(1, 1, ModelConfig{1, 0.01, 0});
  CHECK(model.user_row(0).size() == 1);
  CHECK(model.item_row(0).size() == 1);
}

TEST_CASE("score: closed-form cases") {
  FactorModel zeros(2, 2, 3);
  CHECK(zeros.score(0, 0) == 0.0);

  FactorModel m(1, 1, 2);
  m.user_row(0)[0] = 1.0;
  m.user_row(0)[1] = 2.0;
  m.item_row(0)[0] = 3.0;
  m.item_row(0)[1] = -1.0;
  CHECK(m.score(0, 0) == 1.0);

  FactorModel n(1, 1, 2);
  n.user_row(0)[0] = 0.3;
  n.user_row(0)[1] = -0.7;
  n.item_row(0)[0] = 0.3;
  n.item_row(0)[1] = -0.7;
  CHECK(n.score(0, 0) == doctest::Approx(0.09 + 0.49));
  CHECK(n.score(0, 0) >= 0.0);

  CHECK_THROWS_AS(m.score(1, 0), DataError);
  CHECK_THROWS_AS(m.score(0, 5), DataError);
}

TEST_CASE("score_diff: antisymmetry and bilinearity") {
  auto model = FactorModel::init(4, 6, ModelConfig{5, 0.5, 9});
  CHECK(model.score_diff(1, 2, 2) == 0.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      CHECK(model.score_diff(2, i, j) == doctest::Approx(-model.score_diff(2, j, i)).epsilon(1e-12));
    }
  }
  // equals dot(P_u, Q_i - Q_j)
  const int f = model.factors();
  double manual = 0.0;
  for (int l = 0; l < f; ++l) {
    manual += model.user_row(3)[l] * (model.item_row(1)[l] - model.item_row(4)[l]);
  }
  CHECK(model.score_diff(3, 1, 4) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("score is bilinear in the user row") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  auto model = FactorModel::init(3, 5, ModelConfig{4, 0.5, 21});
  for (int rep = 0; rep < 20; ++rep) {
    const double c = scale(gen);
    const int u = rep % 3, i = rep % 5;
    auto scaled = model;
    for (double& v : scaled.user_row(u)) v *= c;
    CHECK(scaled.score(u, i) ==
          doctest::Approx(c * model.score(u, i)).epsilon(1e-12));
  }
}

TEST_CASE("top_k: ordering, exclusions, ties") {
  FactorModel m(1, 3, 1);
  m.user_row(0)[0] = 1.0;
  m.item_row(0)[0] = 0.5;
  m.item_row(1)[0] = 0.9;
  m.item_row(2)[0] = 0.1;
  CHECK(m.top_k(0, 2, {}) == std::vector<int>{1, 0});

  const std::vector<int> excluded = {0, 1};
  CHECK(m.top_k(0, 5, excluded) == std::vector<int>{2});

  FactorModel tie(1, 4, 1);
  tie.user_row(0)[0] = 1.0;
  for (int i = 0; i < 4; ++i) tie.item_row(i)[0] = 2.0;
  CHECK(tie.top_k(0, 3, {}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("top_k with k = N is a permutation of all items") {
  auto model = FactorModel::init(2, 9, ModelConfig{3, 0.5, 4});
  auto all = model.top_k(1, 9, {});
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 9; ++i) CHECK(all[i] == i);
}

TEST_CASE("top_k unchanged by a constant score shift via a bias feature") {
  const int n = 8, f = 3;
  auto base = FactorModel::init(1, n, ModelConfig{f, 0.5, 33});
  FactorModel shifted(1, n, f + 1);
  const double c = 5.0;
  for (int l = 0; l < f; ++l) shifted.user_row(0)[l] = base.user_row(0)[l];
  shifted.user_row(0)[f] = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < f; ++l) shifted.item_row(i)[l] = base.item_row(i)[l];
    shifted.item_row(i)[f] = c;  // every score gains exactly c
  }
  CHECK(base.top_k(0, n, {}) == shifted.top_k(0, n, {}));
}

TEST_CASE("save/load round trip preserves every score") {
  auto model = FactorModel::init(3, 4, ModelConfig{6, 0.01, 77});
  TempDir tmp("model");
  model.save(tmp.file("m.txt"));
  auto loaded = FactorModel::load(tmp.file("m.txt"));
  CHECK(loaded == model);
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 4; ++i) CHECK(loaded.score(u, i) == model.score(u, i));
  }
}

TEST_CASE("load: header and dimension errors") {
  TempDir tmp("modelerr");
  write_file(tmp.file("badmagic.txt"), "SOMETHING 1\n1 1 1\n0\n0\n");
  CHECK_THROWS_WITH_AS(FactorModel::load(tmp.file("badmagic.txt")),
                       doctest::Contains("header"), DataError);

  write_file(tmp.file("badversion.txt"), "APRLAB-MODEL 2\n1 1 1\n0\n0\n");
  CHECK_THROWS_WITH_AS(FactorModel::load(tmp.file("badversion.txt")),
                       doctest::Contains("version"), DataError);

  // header says f=3, body rows carry 2 columns
  write_file(tmp.file("badcols.txt"), "APRLAB-MODEL 1\n1 1 3\n0.5 0.25\n1 2 3\n");
  CHECK_THROWS_WITH_AS(FactorModel::load(tmp.file("badcols.txt")),
                       doctest::Contains("dimension mismatch"), DataError);

  write_file(tmp.file("extracols.txt"), "APRLAB-MODEL 1\n1 1 2\n0.5 0.25 0.125\n1 2\n");
  CHECK_THROWS_AS(FactorModel::load(tmp.file("extracols.txt")), DataError);

  write_file(tmp.file("truncated.txt"), "APRLAB-MODEL 1\n2 2 2\n0.5 0.25\n");
  CHECK_THROWS_AS(FactorModel::load(tmp.file("truncated.txt")), DataError);
}

TEST_SUITE_END();
