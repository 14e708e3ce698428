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

#include "duet/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "duet/error.hpp"

namespace duet::mask {

double cosine_gamma(double tau) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "schedule position must lie in [0, 1]");
  return std::cos(std::numbers::pi * tau / 2.0);
}

int mask_count(int pool, double tau) {
  require(pool >= 0, ErrorCode::InvalidArgument, "pool size must be non-negative");
  const double raw = std::ceil(cosine_gamma(tau) * pool - 1e-9);
  return std::clamp(static_cast<int>(raw), 0, pool);
}

std::vector<int> TokenLayout::token_positions() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(generable_pool()));
  for (int i = 0; i < length(); ++i) {
    if (i != sep()) out.push_back(i);
  }
  return out;
}

std::vector<int> TokenLayout::person_positions(Person person) const {
  std::vector<int> out(static_cast<std::size_t>(span()));
  for (int k = 0; k < span(); ++k) out[k] = index(person, k);
  return out;
}

namespace {

std::vector<int> choose_from(const std::vector<int>& pool, int count, Rng& rng) {
  const auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), count);
  std::vector<int> out;
  out.reserve(picks.size());
  for (int p : picks) out.push_back(pool[p]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MaskPlan random_mask(const TokenLayout& layout, double tau, Rng& rng) {
  require(layout.span() >= 1, ErrorCode::InvalidArgument, "token grid must be non-empty");
  const int pool = layout.generable_pool();
  const int count = std::max(1, mask_count(pool, tau));
  return {Strategy::Random, tau, choose_from(layout.token_positions(), count, rng)};
}

MaskPlan interaction_mask(const TokenLayout& layout, Person which, double tau, Rng& rng) {
  require(layout.span() >= 1, ErrorCode::InvalidArgument, "token grid must be non-empty");
  const int count = std::max(1, mask_count(layout.span(), tau));
  return {which == Person::A ? Strategy::InteractionA : Strategy::InteractionB, tau,
          choose_from(layout.person_positions(which), count, rng)};
}

Strategy choose_strategy(double p_r, Rng& rng) {
  require(p_r >= 0.0 && p_r <= 1.0, ErrorCode::InvalidArgument, "p_r must lie in [0, 1]");
  if (rng.uniform() < p_r) return Strategy::Random;
  return rng.bernoulli(0.5) ? Strategy::InteractionA : Strategy::InteractionB;
}

MaskPlan first_round_mask(const TokenLayout& layout, double p_r, Rng& rng) {
  const Strategy strategy = choose_strategy(p_r, rng);
  const double tau = rng.uniform();
  switch (strategy) {
    case Strategy::Random: return random_mask(layout, tau, rng);
    case Strategy::InteractionA: return interaction_mask(layout, Person::A, tau, rng);
    case Strategy::InteractionB: return interaction_mask(layout, Person::B, tau, rng);
  }
  return {};
}

std::vector<int> lowest_confidence(std::span<const int> positions, std::span<const double> confidences, int count) {
  require(positions.size() == confidences.size(), ErrorCode::DimensionMismatch,
          "one confidence per position is required");
  require(count >= 0 && count <= static_cast<int>(positions.size()), ErrorCode::InvalidArgument,
          "remask count exceeds candidates");
  std::vector<int> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  const auto less = [&](int l, int r) {
    if (confidences[l] != confidences[r]) return confidences[l] < confidences[r];
    return positions[l] < positions[r];
  };
  std::partial_sort(order.begin(), order.begin() + count, order.end(), less);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end(), [&](int l, int r) { return positions[l] < positions[r]; });
  return order;
}

MaskPlan step_unroll_remask_at(std::span<const int> masked, std::span<const double> confidences, double tau_next) {
  const int count = mask_count(static_cast<int>(masked.size()), tau_next);
  MaskPlan out{Strategy::Random, tau_next, {}};
  for (int k : lowest_confidence(masked, confidences, count)) out.positions.push_back(masked[k]);
  return out;
}

MaskPlan step_unroll_remask(std::span<const int> masked, std::span<const double> confidences, double tau, Rng& rng) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "schedule position must lie in [0, 1]");
  return step_unroll_remask_at(masked, confidences, rng.uniform(tau, 1.0));
}

}  // namespace duet::mask
