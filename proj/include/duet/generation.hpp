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
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "duet/motion.hpp"
#include "duet/text.hpp"
#include "duet/transformer.hpp"
#include "duet/vq.hpp"

namespace duet::gen {

// (1 + s) * cond - s * uncond, elementwise.
torch::Tensor cfg_combine(const torch::Tensor& cond, const torch::Tensor& uncond, double scale);

struct DecodeOptions {
  int iterations = 20;
  double cfg_scale = 2.0;
  double temperature = 1.0;  // <= 0 selects argmax
  std::uint64_t seed = 0;
};

// Per-iteration record of a decode run.
struct DecodeTrace {
  std::vector<int> masked_after;                // masked generable positions after each iteration
  std::vector<std::vector<int>> tokens_after;   // full sequence after each iteration
  std::vector<int> person;                      // 0 = a, 1 = b (alternative mode); -1 otherwise
};

// Fills `generable` sequence positions by confidence-ordered iterative
// decoding; all other positions of `init` stay frozen. `cond` is a
// [cond_width] vector.
interm::TokenSequence iterative_decode(interm::InterM& model, const torch::Tensor& cond, interm::TokenSequence init,
                                       const std::vector<int>& generable, const DecodeOptions& options,
                                       DecodeTrace* trace = nullptr);

// Alternative-mode decoding: odd iterations update person a, even ones
// person b, `options.iterations` passes per person.
interm::TokenSequence alternative_decode(interm::InterM& model, const torch::Tensor& cond,
                                         const mask::TokenLayout& layout, const DecodeOptions& options,
                                         DecodeTrace* trace = nullptr);

using MotionPair = std::pair<motion::MotionSequence, motion::MotionSequence>;

MotionPair generate_interaction(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                const text::TextEmbedding& text, int frames, float fps, const DecodeOptions& options,
                                DecodeTrace* trace = nullptr);

// The reference occupies person a's span and stays frozen; person b is
// generated. A null embedding selects unconditional generation.
motion::MotionSequence generate_reaction(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                         const motion::MotionSequence& reference, const text::TextEmbedding& text,
                                         const DecodeOptions& options, DecodeTrace* trace = nullptr);

MotionPair alternative_generate(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                const text::TextEmbedding& text, int frames, float fps, const DecodeOptions& options,
                                DecodeTrace* trace = nullptr);

}  // namespace duet::gen
