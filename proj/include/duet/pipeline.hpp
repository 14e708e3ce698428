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
#include <memory>
#include <vector>

#include "duet/config.hpp"
#include "duet/motion.hpp"
#include "duet/text.hpp"
#include "duet/transformer.hpp"
#include "duet/vq.hpp"

namespace duet {

// Both persons of every sample, a before b.
std::vector<motion::MotionSequence> individual_motions(const std::vector<motion::InteractionSample>& samples);

std::unique_ptr<text::TextEncoder> make_text_encoder(const RunConfig& config);

std::vector<interm::TrainingPair> tokenize_dataset(const vq::Tokenizer& tokenizer,
                                                   const std::vector<motion::InteractionSample>& samples,
                                                   const text::TextEncoder& encoder);

// Builds and trains a transformer paired with `tokenizer`.
interm::Transformer fit_transformer(const vq::Tokenizer& tokenizer,
                                    const std::vector<motion::InteractionSample>& samples,
                                    const text::TextEncoder& encoder, const TransformerConfig& config,
                                    std::uint64_t seed, interm::TransformerTrainLog* log = nullptr,
                                    const interm::TrainCallback& on_step = {});

}  // namespace duet
