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

#include "duet/pipeline.hpp"

#include "duet/error.hpp"

namespace duet {

std::vector<motion::MotionSequence> individual_motions(const std::vector<motion::InteractionSample>& samples) {
  std::vector<motion::MotionSequence> out;
  out.reserve(2 * samples.size());
  for (const auto& s : samples) {
    out.push_back(s.motion_a);
    out.push_back(s.motion_b);
  }
  return out;
}

std::unique_ptr<text::TextEncoder> make_text_encoder(const RunConfig& config) {
  return text::make_encoder(config.text_backend, config.text_table);
}

std::vector<interm::TrainingPair> tokenize_dataset(const vq::Tokenizer& tokenizer,
                                                   const std::vector<motion::InteractionSample>& samples,
                                                   const text::TextEncoder& encoder) {
  std::vector<interm::TrainingPair> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    interm::TrainingPair pair{tokenizer.tokenize(s.motion_a), tokenizer.tokenize(s.motion_b), {}};
    for (const auto& t : s.texts) pair.texts.push_back(encoder.encode(t));
    out.push_back(std::move(pair));
  }
  return out;
}

interm::Transformer fit_transformer(const vq::Tokenizer& tokenizer,
                                    const std::vector<motion::InteractionSample>& samples,
                                    const text::TextEncoder& encoder, const TransformerConfig& config,
                                    std::uint64_t seed, interm::TransformerTrainLog* log,
                                    const interm::TrainCallback& on_step) {
  require(!samples.empty(), ErrorCode::InvalidArgument, "training set is empty");
  require(encoder.width() == config.cond_width, ErrorCode::DimensionMismatch,
          "text encoder width differs from the transformer condition width");
  const auto data = tokenize_dataset(tokenizer, samples, encoder);
  const interm::ModelShape shape{tokenizer.config().codebook_size, data.front().a.rows, data.front().a.cols};
  auto transformer = interm::make_transformer(config, shape, seed);
  transformer.tokenizer_fingerprint = tokenizer.fingerprint();
  transformer.text_backend = encoder.backend();
  auto result = interm::train_transformer(transformer, data, seed, on_step);
  if (log != nullptr) *log = std::move(result);
  return transformer;
}

}  // namespace duet
