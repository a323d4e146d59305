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

#include <array>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "aprlab/dataset.hpp"
#include "aprlab/numeric.hpp"
#include "aprlab/trainer.hpp"

namespace aprlab {

/// omega := 1 - sigma(s_uij), the scalar scaling every pairwise update.
/// Evaluated as sigma(-s_uij) to keep precision when s_uij is large.
inline double bayesian_magnitude(double score_diff) { return logistic(-score_diff); }

/// Same quantity at the perturbed parameters.
inline double adversarial_magnitude(double perturbed_score_diff) {
  return logistic(-perturbed_score_diff);
}

struct MagnitudeRecord {
  int epoch = 0;
  double omega = 0.0;
  std::optional<double> omega_adv;  // absent during the plain pairwise phase
  bool pos_in_head = false;         // positive item in the short head
  bool neg_in_head = false;         // negative item in the short head
};

inline constexpr std::array<double, 3> kCdfThresholds = {0.01, 0.1, 0.5};

/// Fraction of an epoch's records with value <= tau, per series.
struct MagnitudeCdfRow {
  int epoch = 0;
  double tau = 0.0;
  double p_omega = 0.0;
  std::optional<double> p_omega_adv;
};
using MagnitudeCdf = std::vector<MagnitudeCdfRow>;

/// Per-epoch sums of (omega + omega_adv) grouped by where the positive
/// (Omega+) or negative (Omega-) item falls; Omega- carries a minus sign.
/// An absent omega_adv contributes zero.
struct GlobalUpdates {
  double pos_sh = 0.0;
  double neg_sh = 0.0;  // <= 0
  double pos_lt = 0.0;
  double neg_lt = 0.0;  // <= 0
};

struct WineGlassRow {
  int epoch = 0;
  double avg_sh = 0.0;  // (Omega+(SH) + Omega-(SH)) / |I_SH|
  double avg_lt = 0.0;
  GlobalUpdates raw;
};
using WineGlassSeries = std::vector<WineGlassRow>;

MagnitudeCdf magnitude_cdf(std::span<const MagnitudeRecord> records,
                           std::span<const double> thresholds = kCdfThresholds);

/// All records must belong to one epoch; the head flags carry the partition.
GlobalUpdates global_updates(std::span<const MagnitudeRecord> epoch_records);

WineGlassSeries wine_glass(std::span<const std::pair<int, GlobalUpdates>> per_epoch,
                           int short_head_size, int long_tail_size);

/// Buffers every record in memory. Intended for tests and small runs.
class RecordingSink final : public TrainingSink {
 public:
  explicit RecordingSink(const PopularityPartition& part) : part_(&part) {}

  void on_triplet(int epoch, double omega, std::optional<double> omega_adv, int pos_item,
                  int neg_item) override {
    records_.push_back(MagnitudeRecord{epoch, omega, omega_adv, part_->head(pos_item),
                                       part_->head(neg_item)});
  }

  const std::vector<MagnitudeRecord>& records() const { return records_; }

 private:
  const PopularityPartition* part_;
  std::vector<MagnitudeRecord> records_;
};

/// Streams per-epoch aggregates (CDF counts, global-update sums, mean omega)
/// in O(1) memory per epoch, so full-length runs never hold the trace.
class StreamingAggregator final : public TrainingSink {
 public:
  explicit StreamingAggregator(const PopularityPartition& part);

  void on_triplet(int epoch, double omega, std::optional<double> omega_adv, int pos_item,
                  int neg_item) override;
  void on_epoch_end(int epoch) override;

  const MagnitudeCdf& cdf() const { return cdf_; }
  const WineGlassSeries& wine_glass_series() const { return series_; }
  const std::vector<std::pair<int, double>>& mean_omega_per_epoch() const { return means_; }

 private:
  const PopularityPartition* part_;
  int short_head_size_ = 0;
  int long_tail_size_ = 0;

  int current_epoch_ = -1;
  std::int64_t n_ = 0, n_adv_ = 0;
  std::array<std::int64_t, 3> below_ = {};
  std::array<std::int64_t, 3> below_adv_ = {};
  double omega_sum_ = 0.0;
  GlobalUpdates updates_;

  MagnitudeCdf cdf_;
  WineGlassSeries series_;
  std::vector<std::pair<int, double>> means_;
};

/// Appends raw trace lines: `t,omega,omega_adv|-,pos_head:0/1,neg_head:0/1`.
class TraceWriter final : public TrainingSink {
 public:
  TraceWriter(const PopularityPartition& part, const std::filesystem::path& path);
  ~TraceWriter() override;
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void on_triplet(int epoch, double omega, std::optional<double> omega_adv, int pos_item,
                  int neg_item) override;

 private:
  const PopularityPartition* part_;
  std::FILE* out_ = nullptr;
};

/// Forwards every event to each child.
class SinkTee final : public TrainingSink {
 public:
  explicit SinkTee(std::vector<TrainingSink*> sinks) : sinks_(std::move(sinks)) {}

  void on_triplet(int epoch, double omega, std::optional<double> omega_adv, int pos_item,
                  int neg_item) override {
    for (TrainingSink* s : sinks_) s->on_triplet(epoch, omega, omega_adv, pos_item, neg_item);
  }
  void on_epoch_end(int epoch) override {
    for (TrainingSink* s : sinks_) s->on_epoch_end(epoch);
  }

 private:
  std::vector<TrainingSink*> sinks_;
};

void write_magnitudes_csv(const std::filesystem::path& path, const MagnitudeCdf& cdf);
void write_wineglass_csv(const std::filesystem::path& path, const WineGlassSeries& series);
MagnitudeCdf read_magnitudes_csv(const std::filesystem::path& path);
WineGlassSeries read_wineglass_csv(const std::filesystem::path& path);

}  // namespace aprlab
