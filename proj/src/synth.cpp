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

#include "duet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <Eigen/Geometry>

#include "duet/error.hpp"
#include "duet/rng.hpp"

namespace duet::motion {
namespace {

using std::numbers::pi;

// Joint ids of the synthetic skeleton.
enum Joint { kRoot = 0, kSpine, kHead, kLeftElbow, kLeftHand, kRightElbow, kRightHand, kFoot };

constexpr double kPelvisHeight = 0.9;
constexpr double kSpineLength = 0.5;
constexpr double kHeadLength = 0.25;
constexpr double kUpperArm = 0.3;
constexpr double kForearm = 0.25;

// Body frame: +z forward, +y up, +x to the person's left.
struct ArmPose {
  double elevation = 0.15;  // 0 hangs down, pi points up
  double swing = 0.0;       // rotation of the raised arm toward forward
  double bend = 0.1;        // elbow flexion
};

struct BodyPose {
  Vec3 root = Vec3::Zero();  // ground-plane position; y is added from the pelvis height
  double yaw = 0.0;          // facing direction (sin yaw, 0, cos yaw)
  double pitch = 0.0;        // forward bow of the torso
  double bob = 0.0;
  double step = 0.0;         // forward offset of the foot
  ArmPose left;
  ArmPose right;
};

Mat3 yaw_matrix(double yaw) { return Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix(); }
Mat3 pitch_matrix(double pitch) { return Eigen::AngleAxisd(pitch, Vec3::UnitX()).toRotationMatrix(); }

Vec3 arm_direction(const ArmPose& arm, double side) {
  const double s = std::sin(arm.elevation);
  return {side * s * std::cos(arm.swing), -std::cos(arm.elevation), s * std::sin(arm.swing)};
}

Vec3 forearm_direction(const Vec3& upper, double bend) {
  Vec3 up = Vec3::UnitY() - upper.dot(Vec3::UnitY()) * upper;
  if (up.norm() < 1e-6) up = Vec3::UnitZ() - upper.dot(Vec3::UnitZ()) * upper;
  up.normalize();
  return (std::cos(bend) * upper + std::sin(bend) * up).normalized();
}

std::vector<Vec3> forward_kinematics(const BodyPose& pose) {
  const Mat3 world = yaw_matrix(pose.yaw);
  const Mat3 torso = pitch_matrix(pose.pitch);
  const Vec3 pelvis = pose.root + Vec3(0.0, kPelvisHeight + pose.bob, 0.0);
  std::vector<Vec3> body(8);
  body[kRoot] = Vec3::Zero();
  body[kSpine] = torso * Vec3(0.0, kSpineLength, 0.0);
  body[kHead] = body[kSpine] + torso * Vec3(0.0, kHeadLength, 0.0);
  const Vec3 left_upper = torso * arm_direction(pose.left, 1.0);
  const Vec3 right_upper = torso * arm_direction(pose.right, -1.0);
  body[kLeftElbow] = body[kSpine] + kUpperArm * left_upper;
  body[kLeftHand] = body[kLeftElbow] + kForearm * forearm_direction(left_upper, pose.left.bend);
  body[kRightElbow] = body[kSpine] + kUpperArm * right_upper;
  body[kRightHand] = body[kRightElbow] + kForearm * forearm_direction(right_upper, pose.right.bend);
  body[kFoot] = Vec3(0.0, -kPelvisHeight - pose.bob, pose.step);
  std::vector<Vec3> out(8);
  for (int j = 0; j < 8; ++j) out[j] = pelvis + world * body[j];
  return out;
}

// Rest bone offsets in the body frame (T-pose arms).
const std::vector<Vec3>& rest_offsets() {
  static const std::vector<Vec3> kOffsets = {
      Vec3::Zero(),          Vec3(0, kSpineLength, 0),  Vec3(0, kHeadLength, 0), Vec3(kUpperArm, 0, 0),
      Vec3(kForearm, 0, 0), Vec3(-kUpperArm, 0, 0),   Vec3(-kForearm, 0, 0),   Vec3(0, -kPelvisHeight, 0)};
  return kOffsets;
}

// Local joint rotations: each bone's global rotation is the minimal rotation
// from its yaw-aligned rest direction to the observed bone direction.
std::vector<Mat3> local_rotations(const std::vector<Vec3>& joints, double yaw, const Skeleton& skeleton) {
  const Mat3 facing = yaw_matrix(yaw);
  std::vector<Mat3> global(joints.size());
  std::vector<Mat3> local(joints.size());
  global[kRoot] = facing;
  local[kRoot] = facing;
  for (int j = 1; j < static_cast<int>(joints.size()); ++j) {
    const int parent = skeleton.parents[j];
    const Vec3 rest = facing * rest_offsets()[j];
    const Vec3 bone = joints[j] - joints[parent];
    const Mat3 align = Eigen::Quaterniond::FromTwoVectors(rest, bone).normalized().toRotationMatrix();
    global[j] = align * facing;
    local[j] = global[parent].transpose() * global[j];
  }
  return local;
}

MotionSequence build_motion(const std::vector<BodyPose>& poses, float fps) {
  const Skeleton skeleton = Skeleton::synthetic8();
  const int frames = static_cast<int>(poses.size());
  PositionArray positions(frames, skeleton.joint_count());
  std::vector<std::vector<Mat3>> rotations;
  rotations.reserve(poses.size());
  for (int f = 0; f < frames; ++f) {
    const auto joints = forward_kinematics(poses[f]);
    for (int j = 0; j < skeleton.joint_count(); ++j) positions.at(f, j) = joints[j];
    rotations.push_back(local_rotations(joints, poses[f].yaw, skeleton));
  }
  return assemble_motion(positions, rotations, skeleton, fps);
}

double bump(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

// Facing yaw toward a target on the ground plane.
double yaw_toward(const Vec3& from, const Vec3& to) { return std::atan2(to.x() - from.x(), to.z() - from.z()); }

void add_walk(BodyPose& pose, double phase, double amplitude) {
  pose.left.swing = 0.0;
  pose.left.elevation = 0.15 + 0.25 * amplitude * std::sin(phase);
  pose.right.elevation = 0.15 - 0.25 * amplitude * std::sin(phase);
  pose.step = 0.3 * amplitude * std::sin(phase);
  pose.bob = 0.02 * amplitude * std::cos(2.0 * phase);
}

struct Pair {
  std::vector<BodyPose> a;
  std::vector<BodyPose> b;
};

Pair approach_retreat(int frames, float fps, Rng& rng) {
  const double far = rng.uniform(1.6, 2.2);
  const double near = rng.uniform(0.5, 0.8);
  const double turn = rng.uniform(0.4, 0.6);
  const double offset = rng.uniform(-0.5, 0.5);
  const double stride = rng.uniform(5.0, 8.0);
  Pair out{std::vector<BodyPose>(frames), std::vector<BodyPose>(frames)};
  const double reach = std::max(turn, 1.0 - turn);
  for (int f = 0; f < frames; ++f) {
    const double u = frames > 1 ? static_cast<double>(f) / (frames - 1) : 0.0;
    const double z = (u - turn) / reach;
    const double distance = near + (far - near) * z * z;
    const double speed = std::abs(2.0 * (far - near) * z / reach);
    const double phase = stride * f / fps;
    BodyPose& a = out.a[f];
    BodyPose& b = out.b[f];
    a.root = Vec3(-0.5 * distance, 0.0, offset);
    b.root = Vec3(0.5 * distance, 0.0, offset);
    a.yaw = pi / 2;
    b.yaw = -pi / 2;
    add_walk(a, phase, std::min(1.0, speed));
    add_walk(b, phase + pi, std::min(1.0, speed));
  }
  return out;
}

Pair mirror_wave(int frames, float fps, Rng& rng) {
  const double distance = rng.uniform(1.5, 2.5);
  const double offset = rng.uniform(-0.5, 0.5);
  const double freq = rng.uniform(0.8, 1.5);
  const double amplitude = rng.uniform(0.3, 0.6);
  const double phase0 = rng.uniform(0.0, 2.0 * pi);
  const double raise = rng.uniform(2.2, 2.6);
  Pair out{std::vector<BodyPose>(frames), std::vector<BodyPose>(frames)};
  for (int f = 0; f < frames; ++f) {
    const double t = f / static_cast<double>(fps);
    BodyPose a;
    a.root = Vec3(-0.5 * distance, 0.0, offset);
    a.yaw = pi / 2;
    const double ramp = std::min(1.0, t / 0.5);
    a.right.elevation = 0.15 + (raise - 0.15) * ramp;
    a.right.swing = 0.3;
    a.right.bend = 0.8 + amplitude * std::sin(2.0 * pi * freq * t + phase0);
    out.a[f] = a;
  }
  // Partner is filled by reflecting person a.
  return out;
}

Pair orbit(int frames, float fps, Rng& rng) {
  const double radius = rng.uniform(0.6, 1.0);
  const double omega = rng.uniform(0.5, 1.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  const double start = rng.uniform(0.0, 2.0 * pi);
  const Vec3 center(rng.uniform(-0.3, 0.3), 0.0, rng.uniform(-0.3, 0.3));
  Pair out{std::vector<BodyPose>(frames), std::vector<BodyPose>(frames)};
  for (int f = 0; f < frames; ++f) {
    const double t = f / static_cast<double>(fps);
    const double angle = start + omega * t;
    BodyPose& a = out.a[f];
    BodyPose& b = out.b[f];
    a.root = center + radius * Vec3(std::cos(angle), 0.0, std::sin(angle));
    b.root = center - radius * Vec3(std::cos(angle), 0.0, std::sin(angle));
    a.yaw = yaw_toward(a.root, center);
    b.yaw = yaw_toward(b.root, center);
    const double phase = 6.0 * t;
    add_walk(a, phase, 0.6);
    add_walk(b, phase + pi, 0.6);
  }
  return out;
}

Pair high_five(int frames, float fps, Rng& rng) {
  const double distance = rng.uniform(1.0, 1.3);
  const double offset = rng.uniform(-0.5, 0.5);
  const double duration = frames / static_cast<double>(fps);
  const double center = rng.uniform(0.4, 0.6) * duration;
  const double width = rng.uniform(0.35, 0.5);
  Pair out{std::vector<BodyPose>(frames), std::vector<BodyPose>(frames)};
  for (int f = 0; f < frames; ++f) {
    const double t = f / static_cast<double>(fps);
    const double lift = bump(t, center, width);
    for (int p = 0; p < 2; ++p) {
      BodyPose& pose = p == 0 ? out.a[f] : out.b[f];
      pose.root = Vec3((p == 0 ? -0.5 : 0.5) * distance, 0.0, offset);
      pose.yaw = p == 0 ? pi / 2 : -pi / 2;
      pose.right.elevation = 0.15 + 2.2 * lift;
      pose.right.swing = 1.1 * lift;
      pose.right.bend = 0.1 + 0.3 * lift;
      pose.pitch = 0.1 * lift;
    }
  }
  return out;
}

Pair bow(int frames, float fps, Rng& rng) {
  const double distance = rng.uniform(1.2, 1.8);
  const double offset = rng.uniform(-0.5, 0.5);
  const double duration = frames / static_cast<double>(fps);
  const double center = rng.uniform(0.4, 0.6) * duration;
  const double delay = rng.uniform(-0.2, 0.2);
  const double depth = rng.uniform(0.5, 0.9);
  const double width = rng.uniform(0.4, 0.6);
  Pair out{std::vector<BodyPose>(frames), std::vector<BodyPose>(frames)};
  for (int f = 0; f < frames; ++f) {
    const double t = f / static_cast<double>(fps);
    for (int p = 0; p < 2; ++p) {
      BodyPose& pose = p == 0 ? out.a[f] : out.b[f];
      const double amount = bump(t, center + (p == 0 ? 0.0 : delay), width);
      pose.root = Vec3((p == 0 ? -0.5 : 0.5) * distance, 0.0, offset);
      pose.yaw = p == 0 ? pi / 2 : -pi / 2;
      pose.pitch = depth * amount;
      pose.left.swing = 0.2 * amount;
      pose.right.swing = 0.2 * amount;
    }
  }
  return out;
}

struct TextTemplate {
  std::vector<std::vector<std::string>> slots;
};

const TextTemplate& text_template(const std::string& label) {
  static const std::vector<std::string> kSubjects = {"two people", "two persons", "the pair", "both people"};
  static const TextTemplate kApproach{{kSubjects,
                                       {"walk toward", "approach", "move closer to"},
                                       {"each other"},
                                       {"and then", "then"},
                                       {"back away", "retreat", "walk apart"}}};
  static const TextTemplate kWave{{{"one person", "someone", "a person"},
                                   {"waves", "waves a hand", "raises a hand and waves"},
                                   {"and the other", "while the partner"},
                                   {"mirrors the wave", "waves back like a mirror", "copies the wave"}}};
  static const TextTemplate kOrbit{{kSubjects,
                                    {"circle around", "walk in a circle around", "orbit around"},
                                    {"each other", "one another"},
                                    {"", "slowly", "while facing the center"}}};
  static const TextTemplate kHighFive{{kSubjects,
                                       {"give each other a high five", "high five", "slap hands in a high five"},
                                       {"", "happily", "in celebration"}}};
  static const TextTemplate kBow{{kSubjects,
                                  {"bow to", "bow politely to", "greet with a bow to"},
                                  {"each other", "one another"},
                                  {"", "respectfully", "at the same time"}}};
  if (label == "approach_retreat") return kApproach;
  if (label == "mirror_wave") return kWave;
  if (label == "orbit") return kOrbit;
  if (label == "high_five") return kHighFive;
  if (label == "bow") return kBow;
  throw Error(ErrorCode::InvalidArgument, "unknown interaction class '" + label + "'");
}

std::vector<std::string> sample_texts(const std::string& label, int count, Rng& rng) {
  const auto& tmpl = text_template(label);
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (int attempt = 0; attempt < 64 && static_cast<int>(out.size()) < count; ++attempt) {
    std::string text;
    for (const auto& slot : tmpl.slots) {
      const auto& word = slot[rng.below(slot.size())];
      if (word.empty()) continue;
      if (!text.empty()) text += ' ';
      text += word;
    }
    if (seen.insert(text).second) out.push_back(text);
  }
  return out;
}

}  // namespace

MotionSequence mirror_x(const MotionSequence& motion) {
  require(motion.layout() != Layout::Rot6d, ErrorCode::InvalidArgument, "mirroring needs position channels");
  MotionSequence out = motion;
  const Mat3 flip = Vec3(-1.0, 1.0, 1.0).asDiagonal();
  for (int f = 0; f < motion.frames(); ++f) {
    for (int j = 0; j < motion.joints(); ++j) {
      out.at(f, j, 0) = -motion.at(f, j, 0);
      out.at(f, j, 3) = -motion.at(f, j, 3);
      Rot6d rot;
      for (int c = 0; c < 6; ++c) rot[c] = motion.at(f, j, 6 + c);
      const Mat3 mirrored = flip * rotation_from_6d(rot) * flip;
      const Rot6d encoded = rotation_to_6d(mirrored);
      for (int c = 0; c < 6; ++c) out.at(f, j, 6 + c) = static_cast<float>(encoded[c]);
    }
  }
  return out;
}

std::vector<InteractionSample> generate_synthetic_interactions(const SynthSpec& spec, std::uint64_t seed) {
  require(spec.classes.size() >= 2, ErrorCode::InvalidArgument, "synthetic data needs at least two classes");
  require(spec.frames >= 2, ErrorCode::InvalidArgument, "synthetic data needs at least two frames");
  require(spec.fps > 0.0f, ErrorCode::InvalidArgument, "fps must be positive");
  for (const auto& cls : spec.classes) {
    const auto& known = interaction_classes();
    require(std::find(known.begin(), known.end(), cls.name) != known.end(), ErrorCode::InvalidArgument,
            "unknown interaction class '" + cls.name + "'");
    require(cls.count >= 0, ErrorCode::InvalidArgument, "class count must be non-negative");
  }

  Rng master(seed);
  std::vector<InteractionSample> out;
  int serial = 0;
  for (const auto& cls : spec.classes) {
    for (int i = 0; i < cls.count; ++i) {
      Rng rng(master.fork());
      Pair poses;
      if (cls.name == "approach_retreat") poses = approach_retreat(spec.frames, spec.fps, rng);
      else if (cls.name == "mirror_wave") poses = mirror_wave(spec.frames, spec.fps, rng);
      else if (cls.name == "orbit") poses = orbit(spec.frames, spec.fps, rng);
      else if (cls.name == "high_five") poses = high_five(spec.frames, spec.fps, rng);
      else poses = bow(spec.frames, spec.fps, rng);

      InteractionSample sample;
      char id[16];
      std::snprintf(id, sizeof(id), "s%05d", serial++);
      sample.id = id;
      sample.label = cls.name;
      sample.motion_a = build_motion(poses.a, spec.fps);
      sample.motion_b = cls.name == "mirror_wave" ? mirror_x(sample.motion_a) : build_motion(poses.b, spec.fps);
      sample.texts = sample_texts(cls.name, spec.texts_per_sample, rng);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace duet::motion
