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

#pragma once

#include <span>
#include <vector>

#include "duet/rng.hpp"

namespace duet::vq {

struct TokenMap {
  int rows = 0;  // temporal
  int cols = 0;  // spatial
  std::vector<int> indices;

  int at(int row, int col) const { return indices[static_cast<std::size_t>(row) * cols + col]; }
  bool operator==(const TokenMap&) const = default;
};

struct ResetReport {
  std::vector<int> reset_ids;
};

// Code table with exponential-moving-average statistics. Entries are kept in
// double precision; `entries[k] = ema_sum[k] / max(ema_count[k], eps)`.
class Codebook {
 public:
  Codebook() = default;
  Codebook(int size, int dim);

  int size() const { return size_; }
  int dim() const { return dim_; }

  std::span<const double> entry(int k) const { return {entries_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)}; }
  void set_entry(int k, std::span<const double> values);

  // Squared-distance nearest neighbour; ties go to the lowest index.
  int nearest(std::span<const float> cell) const;
  int nearest(std::span<const double> cell) const;
  // cells is count x dim, row-major.
  std::vector<int> assign(std::span<const float> cells) const;

  // Seeds every entry with a random cell from `cells` (count x dim) and
  // primes the EMA state with one hit each.
  void initialize_from(std::span<const float> cells, Rng& rng);

  // One EMA step over a batch of cells and their assignments. Codes whose
  // hits over `reset_window` batches stay below `reset_threshold` are
  // re-seeded from random batch cells when the window closes.
  ResetReport ema_update(std::span<const float> cells, std::span<const int> assignments, double decay,
                         int reset_window, double reset_threshold, Rng& rng);

  const std::vector<double>& entries() const { return entries_; }
  const std::vector<double>& ema_count() const { return ema_count_; }
  const std::vector<double>& ema_sum() const { return ema_sum_; }
  const std::vector<double>& usage() const { return usage_; }
  int batches_since_reset() const { return batches_since_reset_; }
  bool initialized() const { return initialized_; }

  void restore(std::vector<double> entries, std::vector<double> ema_count, std::vector<double> ema_sum,
               std::vector<double> usage, int batches_since_reset, bool initialized);

  static constexpr double kEpsilon = 1e-5;

 private:
  template <typename T>
  int nearest_impl(std::span<const T> cell) const;

  int size_ = 0;
  int dim_ = 0;
  std::vector<double> entries_;
  std::vector<double> ema_count_;
  std::vector<double> ema_sum_;
  std::vector<double> usage_;
  int batches_since_reset_ = 0;
  bool initialized_ = false;
};

}  // namespace duet::vq
