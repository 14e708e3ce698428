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

#include <filesystem>
#include <string>
#include <vector>

#include "duet/motion.hpp"

namespace duet::motion {

// IMK1 container: magic "IMK1", then little-endian u32 N, J, d, layout code,
// f32 fps, and N*J*d f32 values in (frame, joint, feature) order.
//
// The container does not carry the skeleton topology, only J; readers resolve
// the skeleton from J (8, 22 or 56 joints) unless one is supplied.
void write_motion(const MotionSequence& motion, const std::filesystem::path& path);
MotionSequence read_motion(const std::filesystem::path& path);
MotionSequence read_motion(const std::filesystem::path& path, const Skeleton& skeleton);

std::vector<char> encode_motion(const MotionSequence& motion);
MotionSequence decode_motion(const std::vector<char>& bytes, const Skeleton* skeleton = nullptr);

Skeleton skeleton_for_joint_count(int joints);

// Directory of .imk1 files plus dataset.json, a UTF-8 array of
// {id, motion_a, motion_b, texts[], class}.
void write_dataset(const std::vector<InteractionSample>& samples, const std::filesystem::path& dir);
std::vector<InteractionSample> read_dataset(const std::filesystem::path& dir);

}  // namespace duet::motion
