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

#include <cmath>
#include <random>

#include "aprlab/errors.hpp"
#include "aprlab/instrumentation.hpp"
#include "support/test_util.hpp"

using aprlab::GlobalUpdates;
using aprlab::MagnitudeRecord;
using testutil::TempDir;

TEST_SUITE_BEGIN("instrumentation");

TEST_CASE("magnitudes: logistic anchors") {
  CHECK(aprlab::bayesian_magnitude(0.0) == 0.5);
  CHECK(aprlab::bayesian_magnitude(30.0) < 1e-9);
  CHECK(aprlab::bayesian_magnitude(1.0) == doctest::Approx(0.268941).epsilon(1e-5));
  CHECK(aprlab::adversarial_magnitude(-30.0) > 1.0 - 1e-9);
  CHECK(aprlab::adversarial_magnitude(0.5) == aprlab::bayesian_magnitude(0.5));
}

TEST_CASE("magnitude_cdf: counting anchors") {
  std::vector<MagnitudeRecord> records;
  for (double w : {0.3, 0.3, 0.3}) records.push_back({1, w, std::nullopt, false, false});
  auto cdf = aprlab::magnitude_cdf(records);
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0].tau == 0.01);
  CHECK(cdf[0].p_omega == 0.0);
  CHECK(cdf[1].p_omega == 0.0);
  CHECK(cdf[2].p_omega == 1.0);
  CHECK_FALSE(cdf[0].p_omega_adv.has_value());

  records.clear();
  for (double w : {0.005, 0.05, 0.4, 0.9}) records.push_back({2, w, std::nullopt, false, false});
  cdf = aprlab::magnitude_cdf(records);
  CHECK(cdf[0].p_omega == 0.25);
  CHECK(cdf[1].p_omega == 0.5);
  CHECK(cdf[2].p_omega == 0.75);
}

TEST_CASE("magnitude_cdf: monotone in tau and bounded, adversarial series separate") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<MagnitudeRecord> records;
  for (int epoch = 1; epoch <= 4; ++epoch) {
    for (int r = 0; r < 200; ++r) {
      MagnitudeRecord rec{epoch, unif(gen), std::nullopt, false, false};
      if (epoch > 2) rec.omega_adv = unif(gen);
      records.push_back(rec);
    }
  }
  auto cdf = aprlab::magnitude_cdf(records);
  REQUIRE(cdf.size() == 12);
  for (std::size_t row = 0; row < cdf.size(); row += 3) {
    CHECK(cdf[row].p_omega <= cdf[row + 1].p_omega);
    CHECK(cdf[row + 1].p_omega <= cdf[row + 2].p_omega);
    CHECK(cdf[row].p_omega >= 0.0);
    CHECK(cdf[row + 2].p_omega <= 1.0);
    const bool adv_phase = cdf[row].epoch > 2;
    CHECK(cdf[row].p_omega_adv.has_value() == adv_phase);
    if (adv_phase) {
      CHECK(*cdf[row].p_omega_adv <= *cdf[row + 1].p_omega_adv);
      CHECK(*cdf[row + 1].p_omega_adv <= *cdf[row + 2].p_omega_adv);
    }
  }
}

TEST_CASE("global_updates: anchors") {
  CHECK(aprlab::global_updates({}).pos_sh == 0.0);

  // one record: i in SH, j in LT, omega 0.5, adversarial term absent
  std::vector<MagnitudeRecord> one = {{1, 0.5, std::nullopt, true, false}};
  auto g = aprlab::global_updates(one);
  CHECK(g.pos_sh == 0.5);
  CHECK(g.neg_lt == -0.5);
  CHECK(g.pos_lt == 0.0);
  CHECK(g.neg_sh == 0.0);
}

TEST_CASE("global_updates: brute-force oracle on random records") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<MagnitudeRecord> records;
  for (int r = 0; r < 50; ++r) {
    MagnitudeRecord rec{3, unif(gen), std::nullopt, unif(gen) < 0.4, unif(gen) < 0.4};
    if (unif(gen) < 0.5) rec.omega_adv = unif(gen);
    records.push_back(rec);
  }
  auto g = aprlab::global_updates(records);

  double pos_sh = 0, neg_sh = 0, pos_lt = 0, neg_lt = 0;
  for (const auto& r : records) {
    const double w = r.omega + (r.omega_adv ? *r.omega_adv : 0.0);
    if (r.pos_in_head) pos_sh += w; else pos_lt += w;
    if (r.neg_in_head) neg_sh -= w; else neg_lt -= w;
  }
  CHECK(g.pos_sh == doctest::Approx(pos_sh).epsilon(1e-12));
  CHECK(g.neg_sh == doctest::Approx(neg_sh).epsilon(1e-12));
  CHECK(g.pos_lt == doctest::Approx(pos_lt).epsilon(1e-12));
  CHECK(g.neg_lt == doctest::Approx(neg_lt).epsilon(1e-12));

  // sign structure and exhaustiveness
  CHECK(g.pos_sh >= 0.0);
  CHECK(g.pos_lt >= 0.0);
  CHECK(g.neg_sh <= 0.0);
  CHECK(g.neg_lt <= 0.0);
  CHECK(g.pos_sh + g.pos_lt == doctest::Approx(-(g.neg_sh + g.neg_lt)).epsilon(1e-9));
}

TEST_CASE("wine_glass: averaging anchors") {
  std::vector<std::pair<int, GlobalUpdates>> per_epoch = {
      {1, GlobalUpdates{0.5, 0.0, 0.0, -0.5}}};
  auto series = aprlab::wine_glass(per_epoch, 2, 8);
  REQUIRE(series.size() == 1);
  CHECK(series[0].avg_sh == 0.25);
  CHECK(series[0].avg_lt == -0.0625);

  CHECK_THROWS_AS(aprlab::wine_glass(per_epoch, 0, 8), aprlab::DataError);
}

TEST_CASE("wine_glass: symmetric feedback hovers near zero") {
  // positives and negatives uniform over all items: expected avg ~ 0
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> item(0, 9);
  const int head_size = 2, tail_size = 8, n_records = 20000;
  std::vector<MagnitudeRecord> records;
  for (int r = 0; r < n_records; ++r) {
    records.push_back({1, 0.5, std::nullopt, item(gen) < head_size, item(gen) < head_size});
  }
  auto g = aprlab::global_updates(records);
  std::vector<std::pair<int, GlobalUpdates>> per_epoch = {{1, g}};
  auto series = aprlab::wine_glass(per_epoch, head_size, tail_size);
  // per-record contribution is +-0.5/|group|; a 3-sigma band around zero
  const double sigma_sh = 0.5 / head_size * std::sqrt(2.0 * n_records * 0.2 * 0.8);
  CHECK(std::abs(series[0].avg_sh) <= 3.0 * sigma_sh);
}

TEST_CASE("streaming aggregator matches batch computation") {
  aprlab::PopularityPartition part;
  part.short_head = {0, 1};
  part.long_tail = {2, 3, 4, 5, 6, 7, 8, 9};
  part.in_head.assign(10, 0);
  part.in_head[0] = part.in_head[1] = 1;
  part.cutoff_size = 2;

  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> item(0, 9);

  aprlab::StreamingAggregator agg(part);
  std::vector<MagnitudeRecord> all;
  for (int epoch = 1; epoch <= 3; ++epoch) {
    for (int r = 0; r < 500; ++r) {
      const int pos = item(gen), neg = item(gen);
      const double w = unif(gen);
      std::optional<double> wadv;
      if (epoch > 1) wadv = unif(gen);
      agg.on_triplet(epoch, w, wadv, pos, neg);
      all.push_back({epoch, w, wadv, part.head(pos), part.head(neg)});
    }
    agg.on_epoch_end(epoch);
  }

  auto batch_cdf = aprlab::magnitude_cdf(all);
  REQUIRE(agg.cdf().size() == batch_cdf.size());
  for (std::size_t row = 0; row < batch_cdf.size(); ++row) {
    CHECK(agg.cdf()[row].epoch == batch_cdf[row].epoch);
    CHECK(agg.cdf()[row].p_omega == doctest::Approx(batch_cdf[row].p_omega).epsilon(1e-12));
    CHECK(agg.cdf()[row].p_omega_adv.has_value() == batch_cdf[row].p_omega_adv.has_value());
  }

  for (int epoch = 1; epoch <= 3; ++epoch) {
    std::vector<MagnitudeRecord> epoch_records;
    for (const auto& r : all) {
      if (r.epoch == epoch) epoch_records.push_back(r);
    }
    auto g = aprlab::global_updates(epoch_records);
    const auto& row = agg.wine_glass_series()[epoch - 1];
    CHECK(row.raw.pos_sh == doctest::Approx(g.pos_sh).epsilon(1e-12));
    CHECK(row.raw.neg_lt == doctest::Approx(g.neg_lt).epsilon(1e-12));
    CHECK(row.avg_sh == doctest::Approx((g.pos_sh + g.neg_sh) / 2.0).epsilon(1e-12));
    CHECK(row.avg_lt == doctest::Approx((g.pos_lt + g.neg_lt) / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("csv round trips") {
  TempDir tmp("inst");
  aprlab::MagnitudeCdf cdf = {{1, 0.01, 0.125, std::nullopt}, {1, 0.1, 0.25, std::nullopt},
                              {1, 0.5, 1.0, std::nullopt},    {2, 0.01, 0.0, 0.5},
                              {2, 0.1, 0.5, 0.75},            {2, 0.5, 1.0, 1.0}};
  aprlab::write_magnitudes_csv(tmp.file("m.csv"), cdf);
  auto loaded = aprlab::read_magnitudes_csv(tmp.file("m.csv"));
  REQUIRE(loaded.size() == cdf.size());
  for (std::size_t row = 0; row < cdf.size(); ++row) {
    CHECK(loaded[row].epoch == cdf[row].epoch);
    CHECK(loaded[row].tau == doctest::Approx(cdf[row].tau));
    CHECK(loaded[row].p_omega == doctest::Approx(cdf[row].p_omega));
    CHECK(loaded[row].p_omega_adv.has_value() == cdf[row].p_omega_adv.has_value());
  }

  aprlab::WineGlassSeries series = {{1, 0.25, -0.0625, GlobalUpdates{0.5, 0.0, 0.0, -0.5}},
                                    {2, -0.125, 0.5, GlobalUpdates{1.0, -1.25, 4.5, -0.5}}};
  aprlab::write_wineglass_csv(tmp.file("w.csv"), series);
  auto wg = aprlab::read_wineglass_csv(tmp.file("w.csv"));
  REQUIRE(wg.size() == 2);
  CHECK(wg[0].avg_sh == doctest::Approx(0.25));
  CHECK(wg[1].raw.neg_sh == doctest::Approx(-1.25));
}

TEST_CASE("trace writer emits the documented line format") {
  TempDir tmp("trace");
  aprlab::PopularityPartition part;
  part.short_head = {0};
  part.long_tail = {1, 2, 3, 4};
  part.in_head = {1, 0, 0, 0, 0};
  part.cutoff_size = 1;
  {
    aprlab::TraceWriter writer(part, tmp.file("trace.csv"));
    writer.on_triplet(1, 0.5, std::nullopt, 0, 3);
    writer.on_triplet(101, 0.25, 0.75, 2, 0);
  }
  const std::string content = testutil::read_file(tmp.file("trace.csv"));
  CHECK(content == "1,0.5,-,pos_head:1,neg_head:0\n101,0.25,0.75,pos_head:0,neg_head:1\n");
}

TEST_SUITE_END();
