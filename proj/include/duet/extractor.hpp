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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "duet/checkpoint.hpp"
#include "duet/config.hpp"
#include "duet/metrics.hpp"
#include "duet/motion.hpp"
#include "duet/text.hpp"

namespace duet::eval {

// Two conv layers over time on the concatenated two-person features, mean
// pooled and projected to the feature width.
class InteractionEncoderImpl : public torch::nn::Module {
 public:
  InteractionEncoderImpl(int input_width, int hidden, int feature_dim);
  // x [B, C, N] -> [B, feature_dim], unit length.
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv1d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(InteractionEncoder);

class TextHeadImpl : public torch::nn::Module {
 public:
  TextHeadImpl(int cond_width, int hidden, int feature_dim);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(TextHead);

class FeatureExtractor {
 public:
  FeatureExtractor(const EvaluationConfig& config, int joints, int width, int cond_width, std::uint64_t seed);

  const EvaluationConfig& config() const { return config_; }
  int input_width() const { return 2 * joints_ * width_; }

  // [B, 2*J*d, N] normalized input of a batch of pairs.
  torch::Tensor prepare(const std::vector<const motion::InteractionSample*>& samples) const;
  Features motion_features(const std::vector<motion::InteractionSample>& samples) const;
  Features text_features(const std::vector<text::TextEmbedding>& texts) const;

  InteractionEncoder& encoder() { return encoder_; }
  TextHead& text_head() { return text_head_; }
  void set_normalization(torch::Tensor mean, torch::Tensor std);

  Checkpoint to_checkpoint() const;
  static FeatureExtractor from_checkpoint(const Checkpoint& checkpoint);
  std::string fingerprint() const;

 private:
  EvaluationConfig config_;
  int joints_;
  int width_;
  int cond_width_;
  std::uint64_t seed_;
  mutable InteractionEncoder encoder_{nullptr};
  mutable TextHead text_head_{nullptr};
  torch::Tensor mean_;  // [C]
  torch::Tensor std_;   // [C]
};

struct ExtractorTrainLog {
  std::vector<double> step_loss;
};

// Contrastive alignment of matched (interaction, text) pairs against the
// in-batch pairs of other classes. Needs at least two classes.
FeatureExtractor train_feature_extractor(const std::vector<motion::InteractionSample>& samples,
                                         const text::TextEncoder& encoder, const EvaluationConfig& config,
                                         std::uint64_t seed, ExtractorTrainLog* log = nullptr);

// Generated samples carry their conditioning text in texts[0]. `mpjpe` is
// reported when every generated id has a reference sample of the same id.
nlohmann::ordered_json evaluation_report(const FeatureExtractor& extractor, const text::TextEncoder& encoder,
                                         const std::vector<motion::InteractionSample>& generated,
                                         const std::vector<motion::InteractionSample>& reference,
                                         std::uint64_t seed);

}  // namespace duet::eval
