// Copyright 2026 The Duet Authors
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

#include "duet/codebook.hpp"

#include <algorithm>
#include <cmath>

#include "duet/error.hpp"

namespace duet::vq {

Codebook::Codebook(int size, int dim)
    : size_(size),
      dim_(dim),
      entries_(static_cast<std::size_t>(size) * dim, 0.0),
      ema_count_(static_cast<std::size_t>(size), 0.0),
      ema_sum_(static_cast<std::size_t>(size) * dim, 0.0),
      usage_(static_cast<std::size_t>(size), 0.0) {
  require(size >= 1 && dim >= 1, ErrorCode::InvalidArgument, "codebook needs at least one entry of positive width");
}

void Codebook::set_entry(int k, std::span<const double> values) {
  require(k >= 0 && k < size_ && static_cast<int>(values.size()) == dim_, ErrorCode::InvalidArgument,
          "codebook entry out of range");
  std::copy(values.begin(), values.end(), entries_.begin() + static_cast<std::ptrdiff_t>(k) * dim_);
}

template <typename T>
int Codebook::nearest_impl(std::span<const T> cell) const {
  require(size_ >= 1, ErrorCode::InvalidArgument, "codebook is empty");
  require(static_cast<int>(cell.size()) == dim_, ErrorCode::DimensionMismatch, "latent width differs from codebook");
  int best = 0;
  double best_distance = 0.0;
  for (int k = 0; k < size_; ++k) {
    const double* code = entries_.data() + static_cast<std::size_t>(k) * dim_;
    double distance = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double diff = static_cast<double>(cell[c]) - code[c];
      distance += diff * diff;
    }
    if (k == 0 || distance < best_distance) {
      best = k;
      best_distance = distance;
    }
  }
  return best;
}

int Codebook::nearest(std::span<const float> cell) const { return nearest_impl(cell); }
int Codebook::nearest(std::span<const double> cell) const { return nearest_impl(cell); }

std::vector<int> Codebook::assign(std::span<const float> cells) const {
  require(cells.size() % static_cast<std::size_t>(dim_) == 0, ErrorCode::DimensionMismatch,
          "cell buffer is not a multiple of the code width");
  const std::size_t count = cells.size() / dim_;
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto cell = cells.subspan(i * dim_, dim_);
    for (float v : cell) require(std::isfinite(v), ErrorCode::NonFinite, "latent contains non-finite values");
    out[i] = nearest(cell);
  }
  return out;
}

void Codebook::initialize_from(std::span<const float> cells, Rng& rng) {
  const std::size_t count = cells.size() / dim_;
  require(count >= 1, ErrorCode::InvalidArgument, "cannot initialize a codebook from an empty batch");
  for (int k = 0; k < size_; ++k) {
    const std::size_t pick = rng.below(count);
    for (int c = 0; c < dim_; ++c) {
      const double v = cells[pick * dim_ + c];
      entries_[static_cast<std::size_t>(k) * dim_ + c] = v;
      ema_sum_[static_cast<std::size_t>(k) * dim_ + c] = v;
    }
    ema_count_[k] = 1.0;
    usage_[k] = 0.0;
  }
  batches_since_reset_ = 0;
  initialized_ = true;
}

ResetReport Codebook::ema_update(std::span<const float> cells, std::span<const int> assignments, double decay,
                                 int reset_window, double reset_threshold, Rng& rng) {
  const std::size_t count = assignments.size();
  require(cells.size() == count * dim_, ErrorCode::DimensionMismatch, "one assignment per cell is required");
  std::vector<double> hits(static_cast<std::size_t>(size_), 0.0);
  std::vector<double> sums(static_cast<std::size_t>(size_) * dim_, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const int k = assignments[i];
    require(k >= 0 && k < size_, ErrorCode::InvalidArgument, "assignment outside the codebook");
    hits[k] += 1.0;
    for (int c = 0; c < dim_; ++c) sums[static_cast<std::size_t>(k) * dim_ + c] += cells[i * dim_ + c];
  }
  for (int k = 0; k < size_; ++k) {
    ema_count_[k] = decay * ema_count_[k] + (1.0 - decay) * hits[k];
    usage_[k] += hits[k];
    const double denom = std::max(ema_count_[k], kEpsilon);
    for (int c = 0; c < dim_; ++c) {
      const std::size_t at = static_cast<std::size_t>(k) * dim_ + c;
      ema_sum_[at] = decay * ema_sum_[at] + (1.0 - decay) * sums[at];
      entries_[at] = ema_sum_[at] / denom;
    }
  }

  ResetReport report;
  if (++batches_since_reset_ >= reset_window) {
    for (int k = 0; k < size_; ++k) {
      if (usage_[k] >= reset_threshold) continue;
      report.reset_ids.push_back(k);
      if (count == 0) continue;
      const std::size_t pick = rng.below(count);
      for (int c = 0; c < dim_; ++c) {
        const std::size_t at = static_cast<std::size_t>(k) * dim_ + c;
        entries_[at] = cells[pick * dim_ + c];
        ema_sum_[at] = entries_[at];
      }
      ema_count_[k] = 1.0;
    }
    std::fill(usage_.begin(), usage_.end(), 0.0);
    batches_since_reset_ = 0;
  }
  return report;
}

void Codebook::restore(std::vector<double> entries, std::vector<double> ema_count, std::vector<double> ema_sum,
                       std::vector<double> usage, int batches_since_reset, bool initialized) {
  require(entries.size() == entries_.size() && ema_count.size() == ema_count_.size() &&
              ema_sum.size() == ema_sum_.size() && usage.size() == usage_.size(),
          ErrorCode::DimensionMismatch, "codebook state has the wrong size");
  entries_ = std::move(entries);
  ema_count_ = std::move(ema_count);
  ema_sum_ = std::move(ema_sum);
  usage_ = std::move(usage);
  batches_since_reset_ = batches_since_reset;
  initialized_ = initialized;
}

}  // namespace duet::vq
