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
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "duet/checkpoint.hpp"
#include "duet/codebook.hpp"
#include "duet/config.hpp"
#include "duet/mask.hpp"
#include "duet/motion.hpp"
#include "duet/text.hpp"

namespace duet::vq {
class Tokenizer;
}

namespace duet::interm {

// Two persons' token maps joined around a separator. Codebook indices occupy
// [0, K); the separator is K and the mask placeholder K + 1.
struct TokenSequence {
  mask::TokenLayout layout;
  std::vector<int> tokens;

  int sep_index() const { return layout.sep(); }
  bool operator==(const TokenSequence&) const = default;
};

inline int sep_token(int codebook_size) { return codebook_size; }
inline int mask_token(int codebook_size) { return codebook_size + 1; }

TokenSequence flatten_concat(const vq::TokenMap& a, const vq::TokenMap& b, int codebook_size);
std::pair<vq::TokenMap, vq::TokenMap> split(const TokenSequence& seq, int codebook_size);

// Sequence index of a logit row (logits skip the separator) and back.
inline int row_to_index(const mask::TokenLayout& layout, int row) { return row < layout.sep() ? row : row + 1; }
inline int index_to_row(const mask::TokenLayout& layout, int index) { return index < layout.sep() ? index : index - 1; }

// Fixed 2D sinusoidal encoding [rows * cols, dim]: the first dim/2 channels
// encode the temporal index, the rest the spatial index.
torch::Tensor positional_encoding_2d(int rows, int cols, int dim);

// Multi-head scaled dot-product attention. `allowed` is an optional
// [Lq, Lk] boolean mask.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int dim, int heads);
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& context,
                        const torch::Tensor& allowed = {});

  torch::nn::Linear q{nullptr}, k{nullptr}, v{nullptr}, o{nullptr};

 private:
  int heads_;
};
TORCH_MODULE(Attention);

class FeedForwardImpl : public torch::nn::Module {
 public:
  FeedForwardImpl(int dim, int hidden);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(FeedForward);

// Parameter-free layer normalization, then scale * x + shift.
torch::Tensor adaln_modulate(const torch::Tensor& x, const torch::Tensor& scale, const torch::Tensor& shift);

// Condition regressors for one modulated sub-layer: scale, shift and the
// residual gate alpha. alpha starts at exactly zero for every condition.
class AdaLnImpl : public torch::nn::Module {
 public:
  AdaLnImpl(int dim, int cond_dim, bool gated = true);
  // x [B, L, D], cond [B, C] -> modulated x.
  torch::Tensor modulate(const torch::Tensor& x, const torch::Tensor& cond);
  // [B, 1, D] residual gate.
  torch::Tensor alpha(const torch::Tensor& cond);

  torch::nn::Linear scale_shift{nullptr};
  torch::nn::Linear gate{nullptr};
};
TORCH_MODULE(AdaLn);

// One Inter-M block: self attention over the joint sequence, a feed-forward
// layer, shared spatio-temporal attention per person, shared cross attention
// between persons and a second per-person feed-forward layer.
class InterMBlockImpl : public torch::nn::Module {
 public:
  InterMBlockImpl(int dim, int heads, int ffn_hidden, int cond_dim);

  // x [B, 2nj+1, D]; cond [B, C]. `isolate` restricts self attention to
  // each person's own span (alternative mode).
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& cond, const mask::TokenLayout& layout,
                        bool isolate = false);

  // Sub-layers with their gated residuals, exposed for inspection.
  torch::Tensor self_sublayer(const torch::Tensor& x, const torch::Tensor& cond, const torch::Tensor& allowed = {});
  torch::Tensor self_ffn_sublayer(const torch::Tensor& x, const torch::Tensor& cond);
  // e [B, nj, D] of one person.
  torch::Tensor spatio_temporal_sublayer(const torch::Tensor& e, const torch::Tensor& cond,
                                         const mask::TokenLayout& layout);
  std::pair<torch::Tensor, torch::Tensor> cross_sublayer(const torch::Tensor& ea, const torch::Tensor& eb,
                                                         const torch::Tensor& cond);
  torch::Tensor person_ffn_sublayer(const torch::Tensor& e, const torch::Tensor& cond);

  Attention self_attn{nullptr}, spatial_attn{nullptr}, temporal_attn{nullptr}, cross_attn{nullptr};
  FeedForward ffn1{nullptr}, ffn2{nullptr};
  AdaLn mod_self{nullptr}, mod_ffn1{nullptr}, mod_st{nullptr}, mod_cross{nullptr}, mod_ffn2{nullptr};
};
TORCH_MODULE(InterMBlock);

struct ModelShape {
  int codebook_size = 1024;
  int rows = 16;
  int cols = 5;
};

class InterMImpl : public torch::nn::Module {
 public:
  InterMImpl(const TransformerConfig& config, const ModelShape& shape);

  const TransformerConfig& config() const { return config_; }
  const ModelShape& shape() const { return shape_; }
  mask::TokenLayout layout() const { return {shape_.rows, shape_.cols}; }

  // tokens [B, 2nj+1] int64 -> [B, 2nj+1, D]. The temporal extent may
  // differ from the training grid; the spatial extent may not.
  torch::Tensor embed(const torch::Tensor& tokens, const mask::TokenLayout& layout);
  // cond [B, cond_width] -> block conditioning [B, D].
  torch::Tensor condition(const torch::Tensor& cond);
  // tokens [B, 2nj+1], cond [B, cond_width] -> logits [B, 2nj, K].
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& cond);
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& cond, const mask::TokenLayout& layout);

  // Learned unconditional vector [cond_width].
  torch::Tensor null_embedding() const { return null_cond; }
  // [cond_width] condition vector for an embedding (null -> learned vector).
  torch::Tensor condition_vector(const text::TextEmbedding& embedding) const;

  torch::nn::Embedding token_embedding{nullptr};
  torch::nn::Linear token_proj{nullptr};
  torch::nn::Linear cond_proj{nullptr};
  torch::nn::ModuleList blocks{nullptr};
  AdaLn head_mod{nullptr};
  torch::nn::Linear head{nullptr};
  torch::Tensor null_cond;

 private:
  TransformerConfig config_;
  ModelShape shape_;
};
TORCH_MODULE(InterM);

// Mean cross-entropy over the selected rows. logits [R, K], targets [R]
// int64, rows: logit-row indices. Rejects an empty selection.
torch::Tensor masked_ce_loss(const torch::Tensor& logits, const torch::Tensor& targets, const std::vector<int>& rows);

// Model plus the pairing information needed at inference time.
struct Transformer {
  InterM model{nullptr};
  std::string tokenizer_fingerprint;
  std::uint64_t seed = 0;
  std::string text_backend = "hash";

  Checkpoint to_checkpoint() const;
  static Transformer from_checkpoint(const Checkpoint& checkpoint);
  // Throws ErrorCode::CheckpointMismatch unless trained against `tokenizer`.
  void check_pairing(const vq::Tokenizer& tokenizer) const;
  void check_pairing(const std::string& fingerprint) const;
};

Transformer make_transformer(const TransformerConfig& config, const ModelShape& shape, std::uint64_t seed);

struct TrainingPair {
  vq::TokenMap a;
  vq::TokenMap b;
  std::vector<text::TextEmbedding> texts;
};

// Mask sizes drawn for one training sample.
struct MaskRecord {
  int pool = 0;  // maskable positions for the strategy
  double tau = 0.0;
  int masked = 0;
  double tau_next = 1.0;
  int remasked = 0;
};

struct TransformerTrainLog {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::vector<MaskRecord> masks;  // per sample, in draw order
  int dropped_conditions = 0;
  int conditions = 0;
};

using TrainCallback = std::function<void(int step, int total, double loss)>;

// Two-round masked training. Collaborative mode masks via first_round_mask;
// alternative mode masks one person per sample with the partner visible
// only through cross attention.
TransformerTrainLog train_transformer(Transformer& transformer, const std::vector<TrainingPair>& data,
                                      std::uint64_t seed, const TrainCallback& on_step = {});

}  // namespace duet::interm
