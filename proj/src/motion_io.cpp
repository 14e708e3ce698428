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

#include "duet/motion_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "duet/error.hpp"

namespace duet::motion {
namespace {

static_assert(std::endian::native == std::endian::little, "IMK1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'I', 'M', 'K', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 4;

template <typename T>
void put(std::vector<char>& out, T value) {
  const auto* bytes = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get(const std::vector<char>& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

}  // namespace

Skeleton skeleton_for_joint_count(int joints) {
  switch (joints) {
    case 8: return Skeleton::synthetic8();
    case 22: return Skeleton::interhuman22();
    case 56: return Skeleton::interx56();
    default:
      throw Error(ErrorCode::UnsupportedSkeleton, "no built-in skeleton with " + std::to_string(joints) + " joints");
  }
}

std::vector<char> encode_motion(const MotionSequence& motion) {
  motion.validate();
  std::vector<char> out;
  out.reserve(kHeaderBytes + motion.values().size() * sizeof(float));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(motion.frames()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(motion.joints()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(motion.width()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(motion.layout()));
  put<float>(out, motion.fps());
  const auto* payload = reinterpret_cast<const char*>(motion.values().data());
  out.insert(out.end(), payload, payload + motion.values().size() * sizeof(float));
  return out;
}

MotionSequence decode_motion(const std::vector<char>& bytes, const Skeleton* skeleton) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::BadMagic,
          "not an IMK1 container");
  require(bytes.size() >= kHeaderBytes, ErrorCode::Truncated, "IMK1 header is truncated");
  const auto frames = get<std::uint32_t>(bytes, 4);
  const auto joints = get<std::uint32_t>(bytes, 8);
  const auto width = get<std::uint32_t>(bytes, 12);
  const auto layout = layout_from_code(get<std::uint32_t>(bytes, 16));
  const auto fps = get<float>(bytes, 20);
  require(frames >= 1 && joints >= 2, ErrorCode::DimensionMismatch, "IMK1 header has empty dimensions");
  require(static_cast<int>(width) == feature_width(layout), ErrorCode::DimensionMismatch,
          "feature width does not match layout code");
  const std::uint64_t count = std::uint64_t{frames} * joints * width;
  const std::uint64_t available = (bytes.size() - kHeaderBytes) / sizeof(float);
  require(count <= available, ErrorCode::Truncated, "IMK1 payload shorter than header claims");
  require((bytes.size() - kHeaderBytes) == count * sizeof(float), ErrorCode::DimensionMismatch,
          "IMK1 payload longer than header claims");

  Skeleton resolved = skeleton ? *skeleton : skeleton_for_joint_count(static_cast<int>(joints));
  require(resolved.joint_count() == static_cast<int>(joints), ErrorCode::DimensionMismatch,
          "skeleton joint count does not match IMK1 header");
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + kHeaderBytes, count * sizeof(float));
  MotionSequence out(static_cast<int>(frames), std::move(resolved), layout, fps, std::move(data));
  out.validate();
  return out;
}

void write_motion(const MotionSequence& motion, const std::filesystem::path& path) {
  const auto bytes = encode_motion(motion);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(file), ErrorCode::Io, "failed writing " + path.string());
}

namespace {
std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}
}  // namespace

MotionSequence read_motion(const std::filesystem::path& path) { return decode_motion(slurp(path)); }

MotionSequence read_motion(const std::filesystem::path& path, const Skeleton& skeleton) {
  return decode_motion(slurp(path), &skeleton);
}

void write_dataset(const std::vector<InteractionSample>& samples, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& sample : samples) {
    sample.validate();
    const std::string file_a = sample.id + "_a.imk1";
    const std::string file_b = sample.id + "_b.imk1";
    write_motion(sample.motion_a, dir / file_a);
    write_motion(sample.motion_b, dir / file_b);
    index.push_back({{"id", sample.id},
                     {"motion_a", file_a},
                     {"motion_b", file_b},
                     {"texts", sample.texts},
                     {"class", sample.label}});
  }
  std::ofstream file(dir / "dataset.json", std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot write dataset.json in " + dir.string());
  file << index.dump(2) << '\n';
}

std::vector<InteractionSample> read_dataset(const std::filesystem::path& dir) {
  std::ifstream file(dir / "dataset.json");
  require(static_cast<bool>(file), ErrorCode::Io, "missing dataset.json in " + dir.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigSchema, std::string("dataset.json: ") + e.what());
  }
  require(index.is_array(), ErrorCode::ConfigSchema, "dataset.json must be an array");
  std::vector<InteractionSample> out;
  out.reserve(index.size());
  for (const auto& entry : index) {
    try {
      InteractionSample sample;
      sample.id = entry.at("id").get<std::string>();
      sample.motion_a = read_motion(dir / entry.at("motion_a").get<std::string>());
      sample.motion_b = read_motion(dir / entry.at("motion_b").get<std::string>());
      sample.texts = entry.at("texts").get<std::vector<std::string>>();
      sample.label = entry.value("class", std::string{});
      sample.validate();
      out.push_back(std::move(sample));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigSchema, std::string("dataset.json entry: ") + e.what());
    }
  }
  return out;
}

}  // namespace duet::motion
