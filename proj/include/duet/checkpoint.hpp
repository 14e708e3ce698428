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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace duet {

struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

// Versioned archive: magic "DCK1", u32 format version, u64 header length, a
// UTF-8 JSON header (kind, metadata, array directory), then the arrays as
// little-endian f32 in directory order.
struct Checkpoint {
  std::string kind;                 // "tokenizer", "transformer", "extractor"
  nlohmann::ordered_json metadata;  // config echo, seed, pairing hashes
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::vector<char> serialize(const Checkpoint& checkpoint);
Checkpoint deserialize(const std::vector<char>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind);

// 64-bit FNV-1a of the serialized bytes, as 16 hex digits.
std::string content_hash(const std::vector<char>& bytes);
std::string content_hash(const Checkpoint& checkpoint);

}  // namespace duet
