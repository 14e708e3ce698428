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

#include "duet/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "duet/error.hpp"

namespace duet::text {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

HashTextEncoder::HashTextEncoder(int width, int probes) : width_(width), probes_(probes) {
  require(width > 0 && probes > 0, ErrorCode::InvalidArgument, "hash encoder needs positive width and probes");
}

TextEmbedding HashTextEncoder::encode(std::string_view text) const {
  require(!text.empty(), ErrorCode::InvalidArgument, "text must be non-empty");
  std::vector<double> acc(static_cast<std::size_t>(width_), 0.0);
  const auto tokens = tokenize(text);
  require(!tokens.empty(), ErrorCode::InvalidArgument, "text has no tokens");
  for (const auto& token : tokens) {
    std::uint64_t h = fnv1a(token, 0);
    for (int p = 0; p < probes_; ++p) {
      h = splitmix(h);
      const auto slot = static_cast<std::size_t>(h % static_cast<std::uint64_t>(width_));
      acc[slot] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  TextEmbedding out;
  out.vector.resize(acc.size());
  // Probes can cancel exactly; fall back to the raw (zero) vector then.
  for (std::size_t i = 0; i < acc.size(); ++i) out.vector[i] = static_cast<float>(norm > 0.0 ? acc[i] / norm : 0.0);
  return out;
}

ExternalTextEncoder::ExternalTextEncoder(std::map<std::string, std::vector<float>> table, int width)
    : table_(table.begin(), table.end()), width_(width) {
  for (const auto& [key, vec] : table_) {
    require(static_cast<int>(vec.size()) == width_, ErrorCode::DimensionMismatch,
            "external embedding for '" + key + "' has the wrong width");
    for (float v : vec) require(std::isfinite(v), ErrorCode::NonFinite, "external embedding is not finite");
  }
}

ExternalTextEncoder ExternalTextEncoder::from_file(const std::filesystem::path& path) {
  std::ifstream file(path);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open external text table " + path.string());
  std::map<std::string, std::vector<float>> table;
  try {
    const auto json = nlohmann::json::parse(file);
    table = json.get<std::map<std::string, std::vector<float>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigSchema, std::string("external text table: ") + e.what());
  }
  require(!table.empty(), ErrorCode::ConfigSchema, "external text table is empty");
  const int width = static_cast<int>(table.begin()->second.size());
  return ExternalTextEncoder(std::move(table), width);
}

TextEmbedding ExternalTextEncoder::encode(std::string_view text) const {
  require(!text.empty(), ErrorCode::InvalidArgument, "text must be non-empty");
  const auto it = table_.find(text);
  require(it != table_.end(), ErrorCode::InvalidArgument, "no external embedding for '" + std::string(text) + "'");
  return {it->second, false};
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& backend, const std::filesystem::path& table) {
  if (backend == "hash") return std::make_unique<HashTextEncoder>();
  if (backend == "external") return std::make_unique<ExternalTextEncoder>(ExternalTextEncoder::from_file(table));
  throw Error(ErrorCode::ConfigSchema, "unknown text backend '" + backend + "'");
}

double cosine_similarity(const TextEmbedding& a, const TextEmbedding& b) {
  require(a.vector.size() == b.vector.size(), ErrorCode::DimensionMismatch, "embedding widths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.vector.size(); ++i) {
    dot += double{a.vector[i]} * b.vector[i];
    na += double{a.vector[i]} * a.vector[i];
    nb += double{b.vector[i]} * b.vector[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace duet::text
