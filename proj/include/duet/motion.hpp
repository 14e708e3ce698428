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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace duet::motion {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rot6d = std::array<double, 6>;

struct Skeleton {
  std::string name;
  std::vector<int> parents;  // root has parent -1
  std::vector<int> feet;     // heel/toe joints used for contact labels

  int joint_count() const { return static_cast<int>(parents.size()); }
  void validate() const;
  bool operator==(const Skeleton&) const = default;

  // Default desk-scale skeleton: root, spine, head, two 2-joint arms and one
  // collapsed leg ending in a foot.
  static Skeleton synthetic8();
  // SMPL body joints.
  static Skeleton interhuman22();
  // SMPL-X body, face and hand joints plus a head-end marker.
  static Skeleton interx56();
  static Skeleton by_name(const std::string& name);
};

// Per-joint channel layouts. Position channels, when present, are [0, 3) and
// velocity channels [3, 6); the 6D rotation follows.
enum class Layout : std::uint32_t {
  PosVelRot6d = 0,
  Rot6d = 1,
  RootPosVelRot6d = 2,
};

int feature_width(Layout layout);
bool has_positions(Layout layout);
Layout layout_from_code(std::uint32_t code);

// frames x joints array of 3-vectors, row-major.
class PositionArray {
 public:
  PositionArray() = default;
  PositionArray(int frames, int joints) : frames_(frames), joints_(joints), values_(static_cast<std::size_t>(frames) * joints, Vec3::Zero()) {}

  int frames() const { return frames_; }
  int joints() const { return joints_; }
  Vec3& at(int frame, int joint) { return values_[index(frame, joint)]; }
  const Vec3& at(int frame, int joint) const { return values_[index(frame, joint)]; }
  std::span<const Vec3> pose(int frame) const { return {values_.data() + index(frame, 0), static_cast<std::size_t>(joints_)}; }

 private:
  std::size_t index(int frame, int joint) const { return static_cast<std::size_t>(frame) * joints_ + joint; }

  int frames_ = 0;
  int joints_ = 0;
  std::vector<Vec3> values_;
};

class MotionSequence {
 public:
  MotionSequence() = default;
  MotionSequence(int frames, Skeleton skeleton, Layout layout, float fps);
  MotionSequence(int frames, Skeleton skeleton, Layout layout, float fps, std::vector<float> data);

  int frames() const { return frames_; }
  int joints() const { return skeleton_.joint_count(); }
  int width() const { return feature_width(layout_); }
  float fps() const { return fps_; }
  Layout layout() const { return layout_; }
  const Skeleton& skeleton() const { return skeleton_; }

  float& at(int frame, int joint, int channel) { return data_[index(frame, joint, channel)]; }
  float at(int frame, int joint, int channel) const { return data_[index(frame, joint, channel)]; }
  std::span<const float> values() const { return data_; }
  std::span<float> values() { return data_; }

  PositionArray positions() const;

  // Throws if any entry is non-finite or dimensions are inconsistent.
  void validate() const;

  bool same_shape(const MotionSequence& other) const;
  bool operator==(const MotionSequence&) const = default;

 private:
  std::size_t index(int frame, int joint, int channel) const {
    return (static_cast<std::size_t>(frame) * joints() + joint) * width() + channel;
  }

  int frames_ = 0;
  Skeleton skeleton_;
  Layout layout_ = Layout::PosVelRot6d;
  float fps_ = 20.0f;
  std::vector<float> data_;
};

struct InteractionSample {
  std::string id;
  MotionSequence motion_a;
  MotionSequence motion_b;
  std::vector<std::string> texts;
  std::string label;

  void validate() const;
};

// Forward difference scaled by fps; the last frame repeats the previous
// difference and a single frame yields zeros.
PositionArray derive_velocity_features(const PositionArray& positions, double fps);

// First two columns of the rotation matrix.
Rot6d rotation_to_6d(const Mat3& rotation);
// Gram-Schmidt recovery of a rotation from its 6D encoding.
Mat3 rotation_from_6d(const Rot6d& encoded);

// One length per non-root joint in joint-index order.
std::vector<double> bone_lengths(std::span<const Vec3> pose, const Skeleton& skeleton);

// frames x feet labels: 1 where the foot's speed is below the threshold.
std::vector<std::vector<std::uint8_t>> foot_contact_labels(const MotionSequence& motion, double velocity_threshold);

// Default speed threshold in position units per second.
double default_contact_threshold(double fps);

// Builds a POS_VEL_ROT6D sequence from joint positions and per-joint local
// rotations (frames x joints).
MotionSequence assemble_motion(const PositionArray& positions, const std::vector<std::vector<Mat3>>& local_rotations,
                               const Skeleton& skeleton, float fps);

// Mean joint distance to the common centroid of all given motions, over
// every frame and joint. Used to express reconstruction error relatively.
double positional_scale(std::span<const MotionSequence> motions);

}  // namespace duet::motion
