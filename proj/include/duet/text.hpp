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
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace duet::text {

inline constexpr int kConditionWidth = 512;

struct TextEmbedding {
  std::vector<float> vector;
  bool is_null = false;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual TextEmbedding encode(std::string_view text) const = 0;
  virtual int width() const = 0;
  virtual std::string backend() const = 0;
};

// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

// Bag of hashed tokens: every token adds a few signed unit entries at hashed
// coordinates, then the sum is L2-normalized. Word order is ignored.
class HashTextEncoder final : public TextEncoder {
 public:
  explicit HashTextEncoder(int width = kConditionWidth, int probes = 4);

  TextEmbedding encode(std::string_view text) const override;
  int width() const override { return width_; }
  std::string backend() const override { return "hash"; }

 private:
  int width_;
  int probes_;
};

// Adapter for vectors produced offline by a pretrained encoder. The table is
// a JSON object mapping each text to its embedding.
class ExternalTextEncoder final : public TextEncoder {
 public:
  ExternalTextEncoder(std::map<std::string, std::vector<float>> table, int width);
  static ExternalTextEncoder from_file(const std::filesystem::path& path);

  TextEmbedding encode(std::string_view text) const override;
  int width() const override { return width_; }
  std::string backend() const override { return "external"; }

 private:
  std::map<std::string, std::vector<float>, std::less<>> table_;
  int width_;
};

// backend is "hash" or "external"; external needs a table path.
std::unique_ptr<TextEncoder> make_encoder(const std::string& backend, const std::filesystem::path& table = {});

double cosine_similarity(const TextEmbedding& a, const TextEmbedding& b);

}  // namespace duet::text
