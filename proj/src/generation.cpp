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

#include "duet/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "duet/error.hpp"
#include "duet/mask.hpp"
#include "duet/rng.hpp"

namespace duet::gen {

using interm::TokenSequence;

torch::Tensor cfg_combine(const torch::Tensor& cond, const torch::Tensor& uncond, double scale) {
  require(cond.sizes() == uncond.sizes(), ErrorCode::DimensionMismatch, "guidance needs matching logit shapes");
  if (scale == 0.0) return cond;
  return (1.0 + scale) * cond - scale * uncond;
}

namespace {

constexpr double kFrozen = std::numeric_limits<double>::infinity();

void check_options(const DecodeOptions& options) {
  require(options.iterations >= 1, ErrorCode::InvalidArgument, "decoding needs at least one iteration");
  require(std::isfinite(options.cfg_scale) && std::isfinite(options.temperature), ErrorCode::InvalidArgument,
          "guidance scale and temperature must be finite");
}

// Guided probabilities [2nj, K] for the current tokens.
torch::Tensor guided_probabilities(interm::InterM& model, const torch::Tensor& cond, const TokenSequence& seq,
                                   const DecodeOptions& options) {
  std::vector<int64_t> ids(seq.tokens.begin(), seq.tokens.end());
  const auto row = torch::tensor(ids, torch::kLong).unsqueeze(0);
  torch::Tensor guided;
  if (options.cfg_scale == 0.0) {
    guided = model->forward(row, cond.unsqueeze(0), seq.layout)[0];
  } else {
    const auto both = model->forward(torch::cat({row, row}, 0), torch::stack({cond, model->null_embedding()}),
                                     seq.layout);
    guided = cfg_combine(both[0], both[1], options.cfg_scale);
  }
  guided = guided.to(torch::kDouble);
  const double temperature = options.temperature > 0.0 ? options.temperature : 1.0;
  return torch::softmax(guided / temperature, -1).contiguous();
}

// Samples every masked position in `positions`, recording the probability
// of the drawn token as its confidence.
void sample_masked(const torch::Tensor& probs, TokenSequence& seq, const std::vector<int>& positions,
                   std::vector<double>& confidence, int mask, const DecodeOptions& options, Rng& rng) {
  const auto acc = probs.accessor<double, 2>();
  const int64_t classes = probs.size(1);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int p = positions[i];
    if (seq.tokens[static_cast<std::size_t>(p)] != mask) continue;
    const int r = interm::index_to_row(seq.layout, p);
    int64_t choice = 0;
    if (options.temperature <= 0.0) {
      for (int64_t c = 1; c < classes; ++c) {
        if (acc[r][c] > acc[r][choice]) choice = c;
      }
    } else {
      const double u = rng.uniform();
      double cumulative = 0.0;
      choice = classes - 1;
      for (int64_t c = 0; c < classes; ++c) {
        cumulative += acc[r][c];
        if (u < cumulative) {
          choice = c;
          break;
        }
      }
    }
    seq.tokens[static_cast<std::size_t>(p)] = static_cast<int>(choice);
    confidence[i] = acc[r][choice];
  }
}

// Remasks the `count` least confident of `positions`.
void remask(TokenSequence& seq, const std::vector<int>& positions, const std::vector<double>& confidence, int count,
            int mask) {
  for (int k : mask::lowest_confidence(positions, confidence, count)) {
    seq.tokens[static_cast<std::size_t>(positions[static_cast<std::size_t>(k)])] = mask;
  }
}

int count_masked(const TokenSequence& seq, const std::vector<int>& positions, int mask) {
  return static_cast<int>(std::count_if(positions.begin(), positions.end(), [&](int p) {
    return seq.tokens[static_cast<std::size_t>(p)] == mask;
  }));
}

void record(DecodeTrace* trace, const TokenSequence& seq, int masked, int person) {
  if (trace == nullptr) return;
  trace->masked_after.push_back(masked);
  trace->tokens_after.push_back(seq.tokens);
  trace->person.push_back(person);
}

void check_sequence(const interm::InterM& model, const TokenSequence& seq) {
  require(static_cast<int>(seq.tokens.size()) == seq.layout.length() && seq.layout.cols == model->shape().cols,
          ErrorCode::DimensionMismatch, "token sequence does not match the model grid");
}

}  // namespace

TokenSequence iterative_decode(interm::InterM& model, const torch::Tensor& cond, TokenSequence seq,
                               const std::vector<int>& generable, const DecodeOptions& options, DecodeTrace* trace) {
  check_options(options);
  check_sequence(model, seq);
  require(model->config().mode == ModelMode::Collaborative, ErrorCode::ModeMismatch,
          "collaborative decoding needs a collaborative checkpoint");
  torch::NoGradGuard no_grad;
  const int k = model->shape().codebook_size;
  const int mask = interm::mask_token(k);
  const int pool = static_cast<int>(generable.size());
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const int t = seq.tokens[i];
    if (static_cast<int>(i) == seq.sep_index()) continue;
    const bool is_generable = std::binary_search(generable.begin(), generable.end(), static_cast<int>(i));
    require(is_generable || (t >= 0 && t < k), ErrorCode::InvalidArgument, "frozen positions need valid tokens");
  }
  for (int p : generable) {
    require(p >= 0 && p < seq.layout.length() && p != seq.sep_index(), ErrorCode::InvalidArgument,
            "generable positions must be token positions");
    seq.tokens[static_cast<std::size_t>(p)] = mask;
  }
  Rng rng(options.seed);
  std::vector<double> confidence(generable.size(), kFrozen);
  for (int i = 1; i <= options.iterations; ++i) {
    const auto probs = guided_probabilities(model, cond, seq, options);
    sample_masked(probs, seq, generable, confidence, mask, options, rng);
    const int target = mask::mask_count(pool, static_cast<double>(i) / options.iterations);
    remask(seq, generable, confidence, target, mask);
    const int masked = count_masked(seq, generable, mask);
    require(masked == target, ErrorCode::InvalidArgument, "masked count departs from the decoding schedule");
    record(trace, seq, masked, -1);
  }
  return seq;
}

TokenSequence alternative_decode(interm::InterM& model, const torch::Tensor& cond, const mask::TokenLayout& layout,
                                 const DecodeOptions& options, DecodeTrace* trace) {
  check_options(options);
  require(model->config().mode == ModelMode::Alternative, ErrorCode::ModeMismatch,
          "alternative decoding needs an alternative-mode checkpoint");
  torch::NoGradGuard no_grad;
  const int k = model->shape().codebook_size;
  const int mask = interm::mask_token(k);
  TokenSequence seq{layout, std::vector<int>(static_cast<std::size_t>(layout.length()), mask)};
  seq.tokens[static_cast<std::size_t>(layout.sep())] = interm::sep_token(k);
  check_sequence(model, seq);
  const std::vector<std::vector<int>> spans = {layout.person_positions(mask::Person::A),
                                               layout.person_positions(mask::Person::B)};
  std::vector<std::vector<double>> confidence(2, std::vector<double>(static_cast<std::size_t>(layout.span()), kFrozen));
  Rng rng(options.seed);
  for (int step = 1; step <= 2 * options.iterations; ++step) {
    const int person = (step - 1) % 2;
    const int i = (step + 1) / 2;
    const auto& span = spans[static_cast<std::size_t>(person)];
    const auto probs = guided_probabilities(model, cond, seq, options);
    sample_masked(probs, seq, span, confidence[static_cast<std::size_t>(person)], mask, options, rng);
    const int target = mask::mask_count(layout.span(), static_cast<double>(i) / options.iterations);
    remask(seq, span, confidence[static_cast<std::size_t>(person)], target, mask);
    const int masked = count_masked(seq, span, mask);
    require(masked == target, ErrorCode::InvalidArgument, "masked count departs from the decoding schedule");
    record(trace, seq, masked, person);
  }
  return seq;
}

namespace {

mask::TokenLayout layout_for(const interm::Transformer& transformer, const vq::Tokenizer& tokenizer, int frames) {
  transformer.check_pairing(tokenizer);
  return {vq::token_rows(frames), vq::token_cols(tokenizer.skeleton().joint_count())};
}

MotionPair decode_pair(const vq::Tokenizer& tokenizer, const TokenSequence& seq, float fps) {
  const auto [a, b] = interm::split(seq, tokenizer.config().codebook_size);
  return {tokenizer.detokenize(a, fps), tokenizer.detokenize(b, fps)};
}

}  // namespace

MotionPair generate_interaction(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                const text::TextEmbedding& text, int frames, float fps, const DecodeOptions& options,
                                DecodeTrace* trace) {
  const auto layout = layout_for(transformer, tokenizer, frames);
  const int k = tokenizer.config().codebook_size;
  TokenSequence init{layout, std::vector<int>(static_cast<std::size_t>(layout.length()), interm::mask_token(k))};
  init.tokens[static_cast<std::size_t>(layout.sep())] = interm::sep_token(k);
  const auto cond = transformer.model->condition_vector(text).detach();
  const auto seq = iterative_decode(transformer.model, cond, init, layout.token_positions(), options, trace);
  return decode_pair(tokenizer, seq, fps);
}

motion::MotionSequence generate_reaction(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                         const motion::MotionSequence& reference, const text::TextEmbedding& text,
                                         const DecodeOptions& options, DecodeTrace* trace) {
  tokenizer.check_motion(reference);
  const auto layout = layout_for(transformer, tokenizer, reference.frames());
  const int k = tokenizer.config().codebook_size;
  const auto ref_tokens = tokenizer.tokenize(reference);
  vq::TokenMap placeholder{ref_tokens.rows, ref_tokens.cols,
                           std::vector<int>(ref_tokens.indices.size(), interm::mask_token(k))};
  const auto init = interm::flatten_concat(ref_tokens, placeholder, k);
  const auto cond = transformer.model->condition_vector(text).detach();
  const auto seq =
      iterative_decode(transformer.model, cond, init, layout.person_positions(mask::Person::B), options, trace);
  const auto [a, b] = interm::split(seq, k);
  require(a == ref_tokens, ErrorCode::InvalidArgument, "reference tokens changed during decoding");
  return tokenizer.detokenize(b, reference.fps());
}

MotionPair alternative_generate(interm::Transformer& transformer, const vq::Tokenizer& tokenizer,
                                const text::TextEmbedding& text, int frames, float fps, const DecodeOptions& options,
                                DecodeTrace* trace) {
  const auto layout = layout_for(transformer, tokenizer, frames);
  const auto cond = transformer.model->condition_vector(text).detach();
  const auto seq = alternative_decode(transformer.model, cond, layout, options, trace);
  return decode_pair(tokenizer, seq, fps);
}

}  // namespace duet::gen
