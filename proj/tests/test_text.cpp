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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "duet/error.hpp"
#include "duet/rng.hpp"
#include "duet/text.hpp"

namespace duet::text {
namespace {

TEST(HashEncoder, DeterministicAndUnitLength) {
  HashTextEncoder enc;
  const auto a = enc.encode("Two people bow to each other.");
  const auto b = enc.encode("Two people bow to each other.");
  EXPECT_EQ(a.vector, b.vector);
  EXPECT_FALSE(a.is_null);
  EXPECT_EQ(a.vector.size(), 512u);
  double norm = 0.0;
  for (float v : a.vector) norm += static_cast<double>(v) * v;
  EXPECT_NEAR(norm, 1.0, 1e-6);
}

TEST(HashEncoder, BagOfTokens) {
  HashTextEncoder enc;
  EXPECT_EQ(enc.encode("two people bow").vector, enc.encode("people two bow").vector);
  EXPECT_EQ(enc.encode("Two, people... BOW!").vector, enc.encode("two people bow").vector);
}

TEST(HashEncoder, RejectsEmpty) {
  HashTextEncoder enc;
  EXPECT_THROW(enc.encode(""), Error);
  EXPECT_THROW(enc.encode("  !! "), Error);
}

TEST(HashEncoder, RandomStringsRarelyCollide) {
  HashTextEncoder enc;
  Rng rng(12);
  std::vector<TextEmbedding> embeddings;
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const int words = 2 + static_cast<int>(rng.below(4));
    for (int w = 0; w < words; ++w) {
      if (w > 0) s += ' ';
      const int len = 3 + static_cast<int>(rng.below(5));
      for (int c = 0; c < len; ++c) s += static_cast<char>('a' + rng.below(26));
    }
    embeddings.push_back(enc.encode(s));
  }
  long close = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      ++pairs;
      close += cosine_similarity(embeddings[i], embeddings[j]) >= 0.5 ? 1 : 0;
    }
  }
  EXPECT_LE(static_cast<double>(close) / pairs, 0.01);
}

TEST(ExternalEncoder, PassesVectorsThrough) {
  const auto path = std::filesystem::temp_directory_path() / "duet_text_table.json";
  {
    std::ofstream out(path);
    out << R"({"hello there": [0.5, -0.25, 1.0], "bye": [0, 0, 1]})";
  }
  const auto enc = ExternalTextEncoder::from_file(path);
  EXPECT_EQ(enc.width(), 3);
  EXPECT_EQ(enc.encode("hello there").vector, (std::vector<float>{0.5f, -0.25f, 1.0f}));
  EXPECT_THROW(enc.encode("unknown"), Error);
  const auto via_factory = make_encoder("external", path);
  EXPECT_EQ(via_factory->backend(), "external");
  std::filesystem::remove(path);
  EXPECT_THROW(make_encoder("clip"), Error);
}

}  // namespace
}  // namespace duet::text
