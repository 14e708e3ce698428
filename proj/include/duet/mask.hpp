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

namespace duet::mask {

// gamma(tau) = cos(pi * tau / 2) on [0, 1].
double cosine_gamma(double tau);

// ceil(gamma(tau) * pool). A 1e-9 slack keeps mathematically integral
// products (e.g. cos(pi/3) * 160) from rounding up by one ulp.
int mask_count(int pool, double tau);

enum class Person { A, B };
enum class Strategy { Random, InteractionA, InteractionB };

// Flattened two-person token sequence: person a occupies [0, nj), SEP sits at
// nj, person b occupies (nj, 2nj]. Within a span, position = i_n * j + i_j.
struct TokenLayout {
  int rows = 0;  // n, temporal
  int cols = 0;  // j, spatial

  int span() const { return rows * cols; }
  int length() const { return 2 * span() + 1; }
  int sep() const { return span(); }
  int index(Person person, int cell) const { return person == Person::A ? cell : span() + 1 + cell; }
  int generable_pool() const { return 2 * span(); }
  // All non-SEP sequence indices in ascending order.
  std::vector<int> token_positions() const;
  std::vector<int> person_positions(Person person) const;
};

struct MaskPlan {
  Strategy strategy = Strategy::Random;
  double tau = 0.0;
  std::vector<int> positions;  // ascending sequence indices, never the SEP
};

// ceil(gamma(tau) * 2nj) positions drawn uniformly across both persons, at
// least one.
MaskPlan random_mask(const TokenLayout& layout, double tau, Rng& rng);

// Masks ratio gamma(tau) of one person's tokens (at least one); the partner
// stays fully visible.
MaskPlan interaction_mask(const TokenLayout& layout, Person which, double tau, Rng& rng);

// Random with probability p_r, otherwise interaction masking on a person
// chosen uniformly.
Strategy choose_strategy(double p_r, Rng& rng);

// First training round: tau ~ U(0, 1), strategy from choose_strategy.
MaskPlan first_round_mask(const TokenLayout& layout, double p_r, Rng& rng);

// Indices (into `positions`) of the `count` lowest confidences; ties go to the
// lower sequence index. Result is sorted by sequence index.
std::vector<int> lowest_confidence(std::span<const int> positions, std::span<const double> confidences, int count);

// Step-unroll second round: remasks ceil(gamma(tau_next) * M) of the M
// first-round positions with the lowest confidence. May be empty.
MaskPlan step_unroll_remask_at(std::span<const int> masked, std::span<const double> confidences, double tau_next);

// Same with tau_next ~ U(tau, 1).
MaskPlan step_unroll_remask(std::span<const int> masked, std::span<const double> confidences, double tau, Rng& rng);

}  // namespace duet::mask
