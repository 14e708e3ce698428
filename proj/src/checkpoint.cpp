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

#include "duet/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "duet/error.hpp"

namespace duet {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<char>& out, T value) {
  const auto* p = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw Error(ErrorCode::CheckpointMismatch, "checkpoint has no array '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

std::vector<char> serialize(const Checkpoint& checkpoint) {
  nlohmann::ordered_json header;
  header["kind"] = checkpoint.kind;
  header["metadata"] = checkpoint.metadata;
  header["arrays"] = nlohmann::ordered_json::array();
  for (const auto& a : checkpoint.arrays) {
    std::int64_t count = 1;
    for (auto d : a.shape) count *= d;
    require(count == static_cast<std::int64_t>(a.values.size()), ErrorCode::DimensionMismatch,
            "array '" + a.name + "' shape does not match its size");
    header["arrays"].push_back({{"name", a.name}, {"shape", a.shape}});
  }
  const std::string text = header.dump();
  std::vector<char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& a : checkpoint.arrays) {
    const auto* p = reinterpret_cast<const char*>(a.values.data());
    out.insert(out.end(), p, p + a.values.size() * sizeof(float));
  }
  return out;
}

Checkpoint deserialize(const std::vector<char>& bytes) {
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::BadMagic,
          "not a checkpoint archive");
  std::uint32_t version;
  std::uint64_t header_len;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 8);
  require(version == kVersion, ErrorCode::CheckpointMismatch, "unsupported checkpoint version");
  require(16 + header_len <= bytes.size(), ErrorCode::Truncated, "checkpoint header truncated");
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointMismatch, std::string("corrupt checkpoint header: ") + e.what());
  }
  Checkpoint out;
  out.kind = header.at("kind").get<std::string>();
  out.metadata = header.at("metadata");
  std::size_t offset = 16 + header_len;
  for (const auto& entry : header.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    std::int64_t count = 1;
    for (auto d : a.shape) count *= d;
    const std::size_t nbytes = static_cast<std::size_t>(count) * sizeof(float);
    require(offset + nbytes <= bytes.size(), ErrorCode::Truncated, "checkpoint payload truncated");
    a.values.resize(static_cast<std::size_t>(count));
    std::memcpy(a.values.data(), bytes.data() + offset, nbytes);
    offset += nbytes;
    out.arrays.push_back(std::move(a));
  }
  require(offset == bytes.size(), ErrorCode::DimensionMismatch, "checkpoint has trailing bytes");
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = serialize(checkpoint);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot write checkpoint " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind) {
  require(std::filesystem::exists(path), ErrorCode::MissingCheckpoint, "checkpoint not found: " + path.string());
  std::ifstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open checkpoint " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
  Checkpoint out = deserialize(bytes);
  require(out.kind == expected_kind, ErrorCode::CheckpointMismatch,
          "expected a " + expected_kind + " checkpoint, found " + out.kind);
  return out;
}

std::string content_hash(const std::vector<char>& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const Checkpoint& checkpoint) { return content_hash(serialize(checkpoint)); }

}  // namespace duet
