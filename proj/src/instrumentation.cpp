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

#include "aprlab/instrumentation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "aprlab/errors.hpp"

namespace aprlab {

MagnitudeCdf magnitude_cdf(std::span<const MagnitudeRecord> records,
                           std::span<const double> thresholds) {
  if (records.empty()) throw DataError("magnitude_cdf needs at least one record");

  struct Bucket {
    std::int64_t n = 0, n_adv = 0;
    std::vector<std::int64_t> below, below_adv;
  };
  std::map<int, Bucket> buckets;
  for (const MagnitudeRecord& r : records) {
    Bucket& b = buckets[r.epoch];
    if (b.below.empty()) {
      b.below.assign(thresholds.size(), 0);
      b.below_adv.assign(thresholds.size(), 0);
    }
    ++b.n;
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      if (r.omega <= thresholds[ti]) ++b.below[ti];
    }
    if (r.omega_adv) {
      ++b.n_adv;
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        if (*r.omega_adv <= thresholds[ti]) ++b.below_adv[ti];
      }
    }
  }

  MagnitudeCdf cdf;
  for (const auto& [epoch, b] : buckets) {
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      MagnitudeCdfRow row;
      row.epoch = epoch;
      row.tau = thresholds[ti];
      row.p_omega = static_cast<double>(b.below[ti]) / static_cast<double>(b.n);
      if (b.n_adv > 0) {
        row.p_omega_adv = static_cast<double>(b.below_adv[ti]) / static_cast<double>(b.n_adv);
      }
      cdf.push_back(row);
    }
  }
  return cdf;
}

GlobalUpdates global_updates(std::span<const MagnitudeRecord> epoch_records) {
  GlobalUpdates g;
  if (epoch_records.empty()) return g;
  const int epoch = epoch_records.front().epoch;
  for (const MagnitudeRecord& r : epoch_records) {
    if (r.epoch != epoch) {
      throw DataError("global_updates expects records from a single epoch");
    }
    const double w = r.omega + r.omega_adv.value_or(0.0);
    if (r.pos_in_head) {
      g.pos_sh += w;
    } else {
      g.pos_lt += w;
    }
    if (r.neg_in_head) {
      g.neg_sh -= w;
    } else {
      g.neg_lt -= w;
    }
  }
  return g;
}

WineGlassSeries wine_glass(std::span<const std::pair<int, GlobalUpdates>> per_epoch,
                           int short_head_size, int long_tail_size) {
  if (short_head_size <= 0 || long_tail_size <= 0) {
    throw DataError("wine_glass needs both partition sides non-empty");
  }
  WineGlassSeries series;
  series.reserve(per_epoch.size());
  for (const auto& [epoch, g] : per_epoch) {
    WineGlassRow row;
    row.epoch = epoch;
    row.raw = g;
    row.avg_sh = (g.pos_sh + g.neg_sh) / static_cast<double>(short_head_size);
    row.avg_lt = (g.pos_lt + g.neg_lt) / static_cast<double>(long_tail_size);
    series.push_back(row);
  }
  return series;
}

StreamingAggregator::StreamingAggregator(const PopularityPartition& part)
    : part_(&part),
      short_head_size_(static_cast<int>(part.short_head.size())),
      long_tail_size_(static_cast<int>(part.long_tail.size())) {}

void StreamingAggregator::on_triplet(int epoch, double omega, std::optional<double> omega_adv,
                                     int pos_item, int neg_item) {
  current_epoch_ = epoch;
  ++n_;
  omega_sum_ += omega;
  for (std::size_t ti = 0; ti < kCdfThresholds.size(); ++ti) {
    if (omega <= kCdfThresholds[ti]) ++below_[ti];
  }
  if (omega_adv) {
    ++n_adv_;
    for (std::size_t ti = 0; ti < kCdfThresholds.size(); ++ti) {
      if (*omega_adv <= kCdfThresholds[ti]) ++below_adv_[ti];
    }
  }
  const double w = omega + omega_adv.value_or(0.0);
  if (part_->head(pos_item)) {
    updates_.pos_sh += w;
  } else {
    updates_.pos_lt += w;
  }
  if (part_->head(neg_item)) {
    updates_.neg_sh -= w;
  } else {
    updates_.neg_lt -= w;
  }
}

void StreamingAggregator::on_epoch_end(int epoch) {
  if (n_ == 0) return;
  if (epoch != current_epoch_) throw DataError("epoch boundary mismatch in aggregator");

  for (std::size_t ti = 0; ti < kCdfThresholds.size(); ++ti) {
    MagnitudeCdfRow row;
    row.epoch = epoch;
    row.tau = kCdfThresholds[ti];
    row.p_omega = static_cast<double>(below_[ti]) / static_cast<double>(n_);
    if (n_adv_ > 0) {
      row.p_omega_adv = static_cast<double>(below_adv_[ti]) / static_cast<double>(n_adv_);
    }
    cdf_.push_back(row);
  }
  WineGlassRow row;
  row.epoch = epoch;
  row.raw = updates_;
  row.avg_sh = (updates_.pos_sh + updates_.neg_sh) / static_cast<double>(short_head_size_);
  row.avg_lt = (updates_.pos_lt + updates_.neg_lt) / static_cast<double>(long_tail_size_);
  series_.push_back(row);
  means_.emplace_back(epoch, omega_sum_ / static_cast<double>(n_));

  n_ = n_adv_ = 0;
  below_ = {};
  below_adv_ = {};
  omega_sum_ = 0.0;
  updates_ = GlobalUpdates{};
}

TraceWriter::TraceWriter(const PopularityPartition& part, const std::filesystem::path& path)
    : part_(&part) {
  out_ = std::fopen(path.string().c_str(), "w");
  if (!out_) throw DataError("cannot write trace file " + path.string());
}

TraceWriter::~TraceWriter() {
  if (out_) std::fclose(out_);
}

void TraceWriter::on_triplet(int epoch, double omega, std::optional<double> omega_adv,
                             int pos_item, int neg_item) {
  if (omega_adv) {
    std::fprintf(out_, "%d,%s,%s,pos_head:%d,neg_head:%d\n", epoch, format_real(omega).c_str(),
                 format_real(*omega_adv).c_str(), part_->head(pos_item) ? 1 : 0,
                 part_->head(neg_item) ? 1 : 0);
  } else {
    std::fprintf(out_, "%d,%s,-,pos_head:%d,neg_head:%d\n", epoch, format_real(omega).c_str(),
                 part_->head(pos_item) ? 1 : 0, part_->head(neg_item) ? 1 : 0);
  }
}

void write_magnitudes_csv(const std::filesystem::path& path, const MagnitudeCdf& cdf) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,tau,p_omega,p_omega_adv\n";
  for (const MagnitudeCdfRow& row : cdf) {
    out << row.epoch << ',' << format_real(row.tau) << ',' << format_real(row.p_omega) << ',';
    if (row.p_omega_adv) out << format_real(*row.p_omega_adv);
    out << '\n';
  }
}

void write_wineglass_csv(const std::filesystem::path& path, const WineGlassSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,avg_sh,avg_lt,omega_pos_sh,omega_neg_sh,omega_pos_lt,omega_neg_lt\n";
  for (const WineGlassRow& row : series) {
    out << row.epoch << ',' << format_real(row.avg_sh) << ',' << format_real(row.avg_lt) << ','
        << format_real(row.raw.pos_sh) << ',' << format_real(row.raw.neg_sh) << ','
        << format_real(row.raw.pos_lt) << ',' << format_real(row.raw.neg_lt) << '\n';
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

MagnitudeCdf read_magnitudes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  MagnitudeCdf cdf;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_commas(line);
    if (f.size() != 4) throw DataError("bad magnitudes.csv row: " + line);
    MagnitudeCdfRow row;
    row.epoch = std::stoi(f[0]);
    row.tau = std::stod(f[1]);
    row.p_omega = std::stod(f[2]);
    if (!f[3].empty()) row.p_omega_adv = std::stod(f[3]);
    cdf.push_back(row);
  }
  return cdf;
}

WineGlassSeries read_wineglass_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  WineGlassSeries series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_commas(line);
    if (f.size() != 7) throw DataError("bad wineglass.csv row: " + line);
    WineGlassRow row;
    row.epoch = std::stoi(f[0]);
    row.avg_sh = std::stod(f[1]);
    row.avg_lt = std::stod(f[2]);
    row.raw.pos_sh = std::stod(f[3]);
    row.raw.neg_sh = std::stod(f[4]);
    row.raw.pos_lt = std::stod(f[5]);
    row.raw.neg_lt = std::stod(f[6]);
    series.push_back(row);
  }
  return series;
}

}  // namespace aprlab
