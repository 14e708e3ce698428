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

#include "duet/motion.hpp"

#include <cmath>
#include <Eigen/Geometry>

#include "duet/error.hpp"

namespace duet::motion {

void Skeleton::validate() const {
  const int count = joint_count();
  require(count >= 2, ErrorCode::InvalidArgument, "skeleton needs at least two joints");
  int roots = 0;
  for (int j = 0; j < count; ++j) {
    const int parent = parents[j];
    if (parent == -1) {
      ++roots;
      continue;
    }
    require(parent >= 0 && parent < count && parent != j, ErrorCode::InvalidArgument,
            "skeleton parent index out of range at joint " + std::to_string(j));
  }
  require(roots == 1, ErrorCode::InvalidArgument, "skeleton must have exactly one root");
  // Every chain must reach the root within joint_count steps.
  for (int j = 0; j < count; ++j) {
    int cursor = j;
    int steps = 0;
    while (parents[cursor] != -1) {
      cursor = parents[cursor];
      require(++steps <= count, ErrorCode::InvalidArgument, "skeleton parent graph has a cycle");
    }
  }
  for (int foot : feet) {
    require(foot >= 0 && foot < count, ErrorCode::InvalidArgument, "foot index out of range");
  }
}

Skeleton Skeleton::synthetic8() {
  return {"synthetic8", {-1, 0, 1, 1, 3, 1, 5, 0}, {7}};
}

Skeleton Skeleton::interhuman22() {
  return {"interhuman22",
          {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19},
          {7, 10, 8, 11}};
}

Skeleton Skeleton::interx56() {
  std::vector<int> parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  parents.insert(parents.end(), {15, 15, 15});  // jaw, eyes
  for (int wrist : {20, 21}) {
    for (int finger = 0; finger < 5; ++finger) {
      const int base = static_cast<int>(parents.size());
      parents.push_back(wrist);
      parents.push_back(base);
      parents.push_back(base + 1);
    }
  }
  parents.push_back(15);  // head end
  return {"interx56", std::move(parents), {7, 10, 8, 11}};
}

Skeleton Skeleton::by_name(const std::string& name) {
  if (name == "synthetic8") return synthetic8();
  if (name == "interhuman22") return interhuman22();
  if (name == "interx56") return interx56();
  throw Error(ErrorCode::UnsupportedSkeleton, "unknown skeleton '" + name + "'");
}

int feature_width(Layout layout) {
  switch (layout) {
    case Layout::PosVelRot6d: return 12;
    case Layout::Rot6d: return 6;
    case Layout::RootPosVelRot6d: return 12;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown layout");
}

bool has_positions(Layout layout) { return layout != Layout::Rot6d; }

Layout layout_from_code(std::uint32_t code) {
  require(code <= 2, ErrorCode::InvalidArgument, "unknown layout code " + std::to_string(code));
  return static_cast<Layout>(code);
}

MotionSequence::MotionSequence(int frames, Skeleton skeleton, Layout layout, float fps)
    : frames_(frames), skeleton_(std::move(skeleton)), layout_(layout), fps_(fps) {
  require(frames >= 1, ErrorCode::InvalidArgument, "motion needs at least one frame");
  require(fps > 0.0f && std::isfinite(fps), ErrorCode::InvalidArgument, "fps must be positive");
  data_.assign(static_cast<std::size_t>(frames) * joints() * width(), 0.0f);
}

MotionSequence::MotionSequence(int frames, Skeleton skeleton, Layout layout, float fps, std::vector<float> data)
    : MotionSequence(frames, std::move(skeleton), layout, fps) {
  require(data.size() == data_.size(), ErrorCode::DimensionMismatch, "motion payload size does not match N*J*d");
  data_ = std::move(data);
}

PositionArray MotionSequence::positions() const {
  require(has_positions(layout_), ErrorCode::InvalidArgument, "layout carries no position channels");
  PositionArray out(frames_, joints());
  for (int f = 0; f < frames_; ++f) {
    for (int j = 0; j < joints(); ++j) {
      out.at(f, j) = Vec3(at(f, j, 0), at(f, j, 1), at(f, j, 2));
    }
  }
  return out;
}

void MotionSequence::validate() const {
  skeleton_.validate();
  require(frames_ >= 1, ErrorCode::InvalidArgument, "motion needs at least one frame");
  require(data_.size() == static_cast<std::size_t>(frames_) * joints() * width(), ErrorCode::DimensionMismatch,
          "motion payload size does not match N*J*d");
  for (float v : data_) require(std::isfinite(v), ErrorCode::NonFinite, "motion contains non-finite values");
}

bool MotionSequence::same_shape(const MotionSequence& other) const {
  return frames_ == other.frames_ && skeleton_ == other.skeleton_ && layout_ == other.layout_;
}

void InteractionSample::validate() const {
  motion_a.validate();
  motion_b.validate();
  require(motion_a.same_shape(motion_b) && motion_a.fps() == motion_b.fps(), ErrorCode::DimensionMismatch,
          "interaction partners must share frames, fps, skeleton and layout");
  require(!texts.empty(), ErrorCode::InvalidArgument, "interaction sample needs at least one text");
}

PositionArray derive_velocity_features(const PositionArray& positions, double fps) {
  require(positions.frames() >= 1, ErrorCode::InvalidArgument, "need at least one frame");
  require(fps > 0.0, ErrorCode::InvalidArgument, "fps must be positive");
  const int frames = positions.frames();
  const int joints = positions.joints();
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < joints; ++j) {
      require(positions.at(f, j).allFinite(), ErrorCode::NonFinite, "positions contain non-finite values");
    }
  }
  PositionArray out(frames, joints);
  if (frames == 1) return out;
  for (int f = 0; f + 1 < frames; ++f) {
    for (int j = 0; j < joints; ++j) out.at(f, j) = (positions.at(f + 1, j) - positions.at(f, j)) * fps;
  }
  for (int j = 0; j < joints; ++j) out.at(frames - 1, j) = out.at(frames - 2, j);
  return out;
}

Rot6d rotation_to_6d(const Mat3& rotation) {
  constexpr double kTolerance = 1e-5;
  require(rotation.allFinite(), ErrorCode::NonFinite, "rotation contains non-finite values");
  const double orthogonality = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(orthogonality <= kTolerance && std::abs(rotation.determinant() - 1.0) <= kTolerance,
          ErrorCode::InvalidArgument, "matrix is not a proper rotation");
  return {rotation(0, 0), rotation(1, 0), rotation(2, 0), rotation(0, 1), rotation(1, 1), rotation(2, 1)};
}

Mat3 rotation_from_6d(const Rot6d& encoded) {
  const Vec3 a(encoded[0], encoded[1], encoded[2]);
  const Vec3 b(encoded[3], encoded[4], encoded[5]);
  const Vec3 x = a.normalized();
  const Vec3 y = (b - x.dot(b) * x).normalized();
  Mat3 out;
  out.col(0) = x;
  out.col(1) = y;
  out.col(2) = x.cross(y);
  return out;
}

std::vector<double> bone_lengths(std::span<const Vec3> pose, const Skeleton& skeleton) {
  require(static_cast<int>(pose.size()) == skeleton.joint_count(), ErrorCode::DimensionMismatch,
          "pose joint count does not match skeleton");
  std::vector<double> out;
  out.reserve(pose.size() - 1);
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    const int parent = skeleton.parents[j];
    if (parent < 0) continue;
    require(pose[j].allFinite() && pose[parent].allFinite(), ErrorCode::NonFinite, "pose contains non-finite values");
    out.push_back((pose[j] - pose[parent]).norm());
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> foot_contact_labels(const MotionSequence& motion, double velocity_threshold) {
  require(has_positions(motion.layout()), ErrorCode::InvalidArgument, "foot contact needs position channels");
  require(velocity_threshold > 0.0, ErrorCode::InvalidArgument, "contact threshold must be positive");
  const PositionArray velocity = derive_velocity_features(motion.positions(), motion.fps());
  const auto& feet = motion.skeleton().feet;
  std::vector<std::vector<std::uint8_t>> labels(static_cast<std::size_t>(motion.frames()),
                                                std::vector<std::uint8_t>(feet.size(), 0));
  for (int f = 0; f < motion.frames(); ++f) {
    for (std::size_t k = 0; k < feet.size(); ++k) {
      labels[f][k] = velocity.at(f, feet[k]).norm() < velocity_threshold ? 1 : 0;
    }
  }
  return labels;
}

double default_contact_threshold(double fps) { return 0.02 * fps; }

MotionSequence assemble_motion(const PositionArray& positions, const std::vector<std::vector<Mat3>>& local_rotations,
                               const Skeleton& skeleton, float fps) {
  require(positions.joints() == skeleton.joint_count(), ErrorCode::DimensionMismatch, "joint count mismatch");
  require(static_cast<int>(local_rotations.size()) == positions.frames(), ErrorCode::DimensionMismatch,
          "rotation frame count mismatch");
  MotionSequence out(positions.frames(), skeleton, Layout::PosVelRot6d, fps);
  const PositionArray velocity = derive_velocity_features(positions, fps);
  for (int f = 0; f < positions.frames(); ++f) {
    require(static_cast<int>(local_rotations[f].size()) == skeleton.joint_count(), ErrorCode::DimensionMismatch,
            "rotation joint count mismatch");
    for (int j = 0; j < skeleton.joint_count(); ++j) {
      const Rot6d rot = rotation_to_6d(local_rotations[f][j]);
      for (int c = 0; c < 3; ++c) {
        out.at(f, j, c) = static_cast<float>(positions.at(f, j)[c]);
        out.at(f, j, 3 + c) = static_cast<float>(velocity.at(f, j)[c]);
      }
      for (int c = 0; c < 6; ++c) out.at(f, j, 6 + c) = static_cast<float>(rot[c]);
    }
  }
  return out;
}

double positional_scale(std::span<const MotionSequence> motions) {
  require(!motions.empty(), ErrorCode::InvalidArgument, "positional scale needs at least one motion");
  Vec3 centroid = Vec3::Zero();
  double count = 0.0;
  std::vector<PositionArray> all;
  all.reserve(motions.size());
  for (const auto& m : motions) {
    all.push_back(m.positions());
    for (int f = 0; f < m.frames(); ++f) {
      for (int j = 0; j < m.joints(); ++j) {
        centroid += all.back().at(f, j);
        count += 1.0;
      }
    }
  }
  centroid /= count;
  double total = 0.0;
  for (const auto& p : all) {
    for (int f = 0; f < p.frames(); ++f) {
      for (int j = 0; j < p.joints(); ++j) total += (p.at(f, j) - centroid).norm();
    }
  }
  return total / count;
}

}  // namespace duet::motion
