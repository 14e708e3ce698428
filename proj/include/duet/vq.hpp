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
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "duet/checkpoint.hpp"
#include "duet/codebook.hpp"
#include "duet/config.hpp"
#include "duet/motion.hpp"

namespace duet::vq {

struct StageSpec {
  int kernel;
  int stride;
  int padding;
};

// Two stride-2 temporal stages: N -> N/4.
std::vector<StageSpec> temporal_stages();
// Per-skeleton spatial stages: 8 -> 2, 22 -> 5, 56 -> 5.
std::vector<StageSpec> spatial_stages(int joints);
int downsampled_size(int size, const StageSpec& stage);
int token_rows(int frames);
int token_cols(int joints);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

// 2D convolutional encoder/decoder over (time, joint) grids. Inputs are laid
// out [B, d, N, J]; latents [B, n, j, d'].
class MotionVqVaeImpl : public torch::nn::Module {
 public:
  MotionVqVaeImpl(const VqConfig& config, int joints, int feature_width);

  torch::Tensor encode(const torch::Tensor& x);
  torch::Tensor decode(const torch::Tensor& latent, int frames);

 private:
  int joints_;
  int feature_width_;
  int latent_dim_;
  std::vector<std::pair<StageSpec, StageSpec>> stages_;  // (temporal, spatial)
  torch::nn::Conv2d enc_in_{nullptr};
  torch::nn::ModuleList enc_stages_;
  torch::nn::Conv2d enc_out_{nullptr};
  torch::nn::Conv2d dec_in_{nullptr};
  torch::nn::ModuleList dec_stages_;
  torch::nn::Conv2d dec_out_{nullptr};
};
TORCH_MODULE(MotionVqVae);

struct QuantizeResult {
  torch::Tensor indices;    // int64, latent shape without the last dim
  torch::Tensor codes;      // selected code vectors, no gradient
  torch::Tensor quantized;  // straight-through: forward = codes, backward = identity to latent
  torch::Tensor commitment; // beta * mean((latent - sg(codes))^2)
};

// Nearest-code assignment per cell of `latent` [..., d'].
QuantizeResult quantize(const torch::Tensor& latent, const Codebook& codebook, double beta);

// Pure table lookup for a token grid -> [rows, cols, d'].
torch::Tensor dequantize(const TokenMap& tokens, const Codebook& codebook);

struct VqLossParts {
  torch::Tensor reconstruction;  // mean |m - m_hat|
  torch::Tensor commitment;
};

VqLossParts vq_losses(const torch::Tensor& motion, const torch::Tensor& reconstruction, const torch::Tensor& latent,
                      const torch::Tensor& codes, double beta);

struct GeometricLossParts {
  torch::Tensor velocity;
  torch::Tensor foot_contact;
  torch::Tensor bone_length;
};

// positions [B, N, J, 3]; foot_labels [B, N, F] in {0, 1}. Each term is an
// element-wise mean: velocity over (N-1) x J x 3, foot contact over
// (N-1) x F x 3, bone length over N x (J-1).
GeometricLossParts geometric_losses(const torch::Tensor& positions, const torch::Tensor& reconstructed,
                                    const torch::Tensor& foot_labels, const motion::Skeleton& skeleton);

struct LossWeights {
  double velocity = 100.0;
  double foot_contact = 500.0;
  double bone_length = 5.0;
};

template <typename T>
T total_vq_loss(const T& vq, const T& velocity, const T& foot_contact, const T& bone_length, const LossWeights& w) {
  return vq + w.velocity * velocity + w.foot_contact * foot_contact + w.bone_length * bone_length;
}

// Per (joint, feature) channel z-scoring statistics.
struct Normalizer {
  torch::Tensor mean;  // [J, d]
  torch::Tensor std;   // [J, d]

  static Normalizer identity(int joints, int width);
  static Normalizer fit(const std::vector<motion::MotionSequence>& motions);
  // [N, J, d] raw -> normalized, and back.
  torch::Tensor apply(const torch::Tensor& raw) const;
  torch::Tensor invert(const torch::Tensor& normalized) const;
};

torch::Tensor motion_to_tensor(const motion::MotionSequence& motion);  // [N, J, d] float

class Tokenizer {
 public:
  Tokenizer(const VqConfig& config, std::uint64_t seed);

  const VqConfig& config() const { return config_; }
  const motion::Skeleton& skeleton() const { return skeleton_; }
  motion::Layout layout() const { return layout_; }
  int feature_width() const { return motion::feature_width(layout_); }
  std::uint64_t seed() const { return seed_; }

  MotionVqVae& model() { return model_; }
  const MotionVqVae& model() const { return model_; }
  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }
  Normalizer& normalizer() { return normalizer_; }
  const Normalizer& normalizer() const { return normalizer_; }

  void check_motion(const motion::MotionSequence& motion) const;

  // Latent grid [n, j, d'] of one motion.
  torch::Tensor encode(const motion::MotionSequence& motion) const;
  TokenMap tokenize(const motion::MotionSequence& motion) const;
  torch::Tensor dequantize(const TokenMap& tokens) const;
  motion::MotionSequence decode(const torch::Tensor& latent, float fps) const;
  motion::MotionSequence detokenize(const TokenMap& tokens, float fps) const;
  motion::MotionSequence reconstruct(const motion::MotionSequence& motion) const;

  Checkpoint to_checkpoint() const;
  static Tokenizer from_checkpoint(const Checkpoint& checkpoint);
  std::string fingerprint() const;

 private:
  VqConfig config_;
  std::uint64_t seed_;
  motion::Skeleton skeleton_;
  motion::Layout layout_;
  mutable MotionVqVae model_{nullptr};
  Codebook codebook_;
  Normalizer normalizer_;
};

struct VqTrainLog {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::vector<double> learning_rate;
  int resets = 0;
};

using StepCallback = std::function<void(int step, int total, double loss)>;

// Adam with linear warm-up and multistep decay. Aborts with
// ErrorCode::Divergence on a non-finite loss.
VqTrainLog train_vqvae(Tokenizer& tokenizer, const std::vector<motion::MotionSequence>& motions,
                       std::uint64_t seed, const StepCallback& on_step = {});

motion::Layout layout_from_name(const std::string& name);

// Torch module parameters and buffers as named float arrays, and back.
void export_module(const torch::nn::Module& module, const std::string& prefix, std::vector<NamedArray>& out);
void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& checkpoint);
NamedArray to_array(const std::string& name, const torch::Tensor& tensor);
torch::Tensor from_array(const NamedArray& array);

}  // namespace duet::vq
