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

#include <cstdint>
#include <string>
#include <vector>

#include "duet/motion.hpp"

namespace duet::motion {

inline const std::vector<std::string>& interaction_classes() {
  static const std::vector<std::string> kClasses = {"approach_retreat", "mirror_wave", "orbit", "high_five", "bow"};
  return kClasses;
}

struct ClassCount {
  std::string name;
  int count = 0;
};

struct SynthSpec {
  std::vector<ClassCount> classes;
  int frames = 64;
  float fps = 20.0f;
  int texts_per_sample = 3;
};

// Deterministic procedural two-person interactions on the synthetic8
// skeleton. Pure function of (spec, seed).
std::vector<InteractionSample> generate_synthetic_interactions(const SynthSpec& spec, std::uint64_t seed);

// Reflects positions and velocities through the x = 0 plane and conjugates
// the rotations accordingly.
MotionSequence mirror_x(const MotionSequence& motion);

}  // namespace duet::motion
