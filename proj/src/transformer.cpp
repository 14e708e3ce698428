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

#include "duet/transformer.hpp"

#include <algorithm>
#include <cmath>

#include "duet/error.hpp"
#include "duet/rng.hpp"
#include "duet/vq.hpp"

namespace duet::interm {

using torch::indexing::Slice;

TokenSequence flatten_concat(const vq::TokenMap& a, const vq::TokenMap& b, int codebook_size) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::DimensionMismatch,
          "token maps of both persons must share grid dimensions");
  require(static_cast<int>(a.indices.size()) == a.rows * a.cols &&
              static_cast<int>(b.indices.size()) == b.rows * b.cols,
          ErrorCode::DimensionMismatch, "token map size does not match its grid");
  TokenSequence seq{{a.rows, a.cols}, {}};
  seq.tokens.reserve(static_cast<std::size_t>(seq.layout.length()));
  seq.tokens.insert(seq.tokens.end(), a.indices.begin(), a.indices.end());
  seq.tokens.push_back(sep_token(codebook_size));
  seq.tokens.insert(seq.tokens.end(), b.indices.begin(), b.indices.end());
  return seq;
}

std::pair<vq::TokenMap, vq::TokenMap> split(const TokenSequence& seq, int codebook_size) {
  const auto& layout = seq.layout;
  require(static_cast<int>(seq.tokens.size()) == layout.length(), ErrorCode::DimensionMismatch,
          "sequence length does not match its layout");
  require(seq.tokens[static_cast<std::size_t>(layout.sep())] == sep_token(codebook_size),
          ErrorCode::InvalidArgument, "separator missing from token sequence");
  const auto begin = seq.tokens.begin();
  vq::TokenMap a{layout.rows, layout.cols, {begin, begin + layout.span()}};
  vq::TokenMap b{layout.rows, layout.cols, {begin + layout.span() + 1, seq.tokens.end()}};
  return {std::move(a), std::move(b)};
}

torch::Tensor positional_encoding_2d(int rows, int cols, int dim) {
  require(dim % 4 == 0, ErrorCode::InvalidArgument, "2D positional encoding needs dim divisible by 4");
  const int half = dim / 2;
  auto pe = torch::zeros({rows * cols, dim}, torch::kDouble);
  auto acc = pe.accessor<double, 2>();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int p = r * cols + c;
      for (int k = 0; k < half / 2; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / half);
        acc[p][2 * k] = std::sin(r * freq);
        acc[p][2 * k + 1] = std::cos(r * freq);
        acc[p][half + 2 * k] = std::sin(c * freq);
        acc[p][half + 2 * k + 1] = std::cos(c * freq);
      }
    }
  }
  return pe.to(torch::kFloat);
}

AttentionImpl::AttentionImpl(int dim, int heads) : heads_(heads) {
  require(heads > 0 && dim % heads == 0, ErrorCode::InvalidArgument, "attention dim must divide into heads");
  q = register_module("q", torch::nn::Linear(dim, dim));
  k = register_module("k", torch::nn::Linear(dim, dim));
  v = register_module("v", torch::nn::Linear(dim, dim));
  o = register_module("o", torch::nn::Linear(dim, dim));
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& context,
                                     const torch::Tensor& allowed) {
  const auto batch = query.size(0);
  const auto lq = query.size(1);
  const auto lk = context.size(1);
  const auto dim = query.size(2);
  const auto head_dim = dim / heads_;
  const auto split_heads = [&](const torch::Tensor& t, int64_t len) {
    return t.view({batch, len, heads_, head_dim}).transpose(1, 2);
  };
  const auto qh = split_heads(q(query), lq);
  const auto kh = split_heads(k(context), lk);
  const auto vh = split_heads(v(context), lk);
  auto scores = torch::matmul(qh, kh.transpose(-2, -1)) / std::sqrt(static_cast<double>(head_dim));
  if (allowed.defined()) scores = scores.masked_fill(allowed.logical_not(), -std::numeric_limits<double>::infinity());
  const auto out = torch::matmul(torch::softmax(scores, -1), vh);
  return o(out.transpose(1, 2).reshape({batch, lq, dim}));
}

FeedForwardImpl::FeedForwardImpl(int dim, int hidden) {
  fc1_ = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor FeedForwardImpl::forward(const torch::Tensor& x) { return fc2_(torch::gelu(fc1_(x))); }

torch::Tensor adaln_modulate(const torch::Tensor& x, const torch::Tensor& scale, const torch::Tensor& shift) {
  const auto normalized = torch::layer_norm(x, {x.size(-1)}, {}, {}, 1e-6);
  return scale * normalized + shift;
}

AdaLnImpl::AdaLnImpl(int dim, int cond_dim, bool gated) {
  scale_shift = register_module("scale_shift", torch::nn::Linear(cond_dim, 2 * dim));
  if (gated) {
    gate = register_module("gate", torch::nn::Linear(cond_dim, dim));
    torch::NoGradGuard no_grad;
    gate->weight.zero_();
    gate->bias.zero_();
  }
}

torch::Tensor AdaLnImpl::modulate(const torch::Tensor& x, const torch::Tensor& cond) {
  const auto params = scale_shift(cond).unsqueeze(1);
  const auto chunks = params.chunk(2, -1);
  return adaln_modulate(x, 1.0 + chunks[0], chunks[1]);
}

torch::Tensor AdaLnImpl::alpha(const torch::Tensor& cond) { return gate(cond).unsqueeze(1); }

InterMBlockImpl::InterMBlockImpl(int dim, int heads, int ffn_hidden, int cond_dim) {
  self_attn = register_module("self_attn", Attention(dim, heads));
  spatial_attn = register_module("spatial_attn", Attention(dim, heads));
  temporal_attn = register_module("temporal_attn", Attention(dim, heads));
  cross_attn = register_module("cross_attn", Attention(dim, heads));
  ffn1 = register_module("ffn1", FeedForward(dim, ffn_hidden));
  ffn2 = register_module("ffn2", FeedForward(dim, ffn_hidden));
  mod_self = register_module("mod_self", AdaLn(dim, cond_dim));
  mod_ffn1 = register_module("mod_ffn1", AdaLn(dim, cond_dim));
  mod_st = register_module("mod_st", AdaLn(dim, cond_dim));
  mod_cross = register_module("mod_cross", AdaLn(dim, cond_dim));
  mod_ffn2 = register_module("mod_ffn2", AdaLn(dim, cond_dim));
}

torch::Tensor InterMBlockImpl::self_sublayer(const torch::Tensor& x, const torch::Tensor& cond,
                                             const torch::Tensor& allowed) {
  const auto y = mod_self->modulate(x, cond);
  return x + mod_self->alpha(cond) * self_attn(y, y, allowed);
}

torch::Tensor InterMBlockImpl::self_ffn_sublayer(const torch::Tensor& x, const torch::Tensor& cond) {
  return x + mod_ffn1->alpha(cond) * ffn1(mod_ffn1->modulate(x, cond));
}

torch::Tensor InterMBlockImpl::spatio_temporal_sublayer(const torch::Tensor& e, const torch::Tensor& cond,
                                                        const mask::TokenLayout& layout) {
  const auto batch = e.size(0);
  const auto dim = e.size(2);
  const int64_t n = layout.rows;
  const int64_t j = layout.cols;
  const auto y = mod_st->modulate(e, cond);
  const auto rows = y.reshape({batch * n, j, dim});
  const auto spatial = spatial_attn(rows, rows).reshape({batch, n * j, dim});
  const auto cols = y.view({batch, n, j, dim}).transpose(1, 2).reshape({batch * j, n, dim});
  const auto temporal =
      temporal_attn(cols, cols).view({batch, j, n, dim}).transpose(1, 2).reshape({batch, n * j, dim});
  return e + mod_st->alpha(cond) * (spatial + temporal);
}

std::pair<torch::Tensor, torch::Tensor> InterMBlockImpl::cross_sublayer(const torch::Tensor& ea,
                                                                        const torch::Tensor& eb,
                                                                        const torch::Tensor& cond) {
  const auto batch = ea.size(0);
  const auto c2 = torch::cat({cond, cond}, 0);
  const auto y = mod_cross->modulate(torch::cat({ea, eb}, 0), c2);
  const auto ya = y.slice(0, 0, batch);
  const auto yb = y.slice(0, batch);
  const auto attended = cross_attn(y, torch::cat({yb, ya}, 0));
  const auto out = torch::cat({ea, eb}, 0) + mod_cross->alpha(c2) * attended;
  return {out.slice(0, 0, batch), out.slice(0, batch)};
}

torch::Tensor InterMBlockImpl::person_ffn_sublayer(const torch::Tensor& e, const torch::Tensor& cond) {
  return e + mod_ffn2->alpha(cond) * ffn2(mod_ffn2->modulate(e, cond));
}

namespace {

torch::Tensor isolation_mask(const mask::TokenLayout& layout) {
  const int64_t len = layout.length();
  const int64_t span = layout.span();
  auto allowed = torch::zeros({len, len}, torch::kBool);
  allowed.index_put_({Slice(0, span), Slice(0, span)}, true);
  allowed.index_put_({Slice(span + 1), Slice(span + 1)}, true);
  allowed.index_put_({span}, true);
  return allowed;
}

}  // namespace

torch::Tensor InterMBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& cond,
                                       const mask::TokenLayout& layout, bool isolate) {
  const int64_t span = layout.span();
  require(x.size(1) == layout.length(), ErrorCode::DimensionMismatch, "block input length does not match layout");
  auto h = self_sublayer(x, cond, isolate ? isolation_mask(layout) : torch::Tensor());
  h = self_ffn_sublayer(h, cond);
  const auto batch = h.size(0);
  const auto sep = h.slice(1, span, span + 1);
  // Both persons go through the shared modules as one stacked batch.
  const auto c2 = torch::cat({cond, cond}, 0);
  auto persons = torch::cat({h.slice(1, 0, span), h.slice(1, span + 1)}, 0);
  persons = spatio_temporal_sublayer(persons, c2, layout);
  auto [ea, eb] = cross_sublayer(persons.slice(0, 0, batch), persons.slice(0, batch), cond);
  persons = person_ffn_sublayer(torch::cat({ea, eb}, 0), c2);
  return torch::cat({persons.slice(0, 0, batch), sep, persons.slice(0, batch)}, 1);
}

InterMImpl::InterMImpl(const TransformerConfig& config, const ModelShape& shape) : config_(config), shape_(shape) {
  require(config.dim % config.heads == 0 && config.dim % 4 == 0, ErrorCode::InvalidArgument,
          "transformer dim must be divisible by heads and by 4");
  require(shape.codebook_size >= 1 && shape.rows >= 1 && shape.cols >= 1, ErrorCode::InvalidArgument,
          "invalid model shape");
  const int dim = config.dim;
  token_embedding = register_module("token_embedding", torch::nn::Embedding(shape.codebook_size + 2, dim));
  token_proj = register_module("token_proj", torch::nn::Linear(dim, dim));
  cond_proj = register_module("cond_proj", torch::nn::Linear(config.cond_width, dim));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int l = 0; l < config.layers; ++l) blocks->push_back(InterMBlock(dim, config.heads, dim * config.ffn_mult, dim));
  head_mod = register_module("head_mod", AdaLn(dim, dim, /*gated=*/false));
  head = register_module("head", torch::nn::Linear(dim, shape.codebook_size));
  null_cond = register_parameter("null_cond", torch::randn({config.cond_width}) / std::sqrt(config.cond_width));
}

torch::Tensor InterMImpl::embed(const torch::Tensor& tokens, const mask::TokenLayout& layout) {
  require(layout.cols == shape_.cols && layout.rows >= 1, ErrorCode::DimensionMismatch,
          "token grid width does not match the model");
  const int64_t span = layout.span();
  require(tokens.dim() == 2 && tokens.size(1) == layout.length(), ErrorCode::DimensionMismatch,
          "token batch must be [B, 2nj+1]");
  const auto x = token_proj(token_embedding(tokens));
  const auto p = positional_encoding_2d(layout.rows, layout.cols, config_.dim).to(x.scalar_type()).unsqueeze(0);
  return torch::cat({x.slice(1, 0, span) + p, x.slice(1, span, span + 1), x.slice(1, span + 1) + p}, 1);
}

torch::Tensor InterMImpl::condition(const torch::Tensor& cond) { return torch::silu(cond_proj(cond)); }

torch::Tensor InterMImpl::forward(const torch::Tensor& tokens, const torch::Tensor& cond) {
  return forward(tokens, cond, layout());
}

torch::Tensor InterMImpl::forward(const torch::Tensor& tokens, const torch::Tensor& cond,
                                  const mask::TokenLayout& lay) {
  require(cond.dim() == 2 && cond.size(0) == tokens.size(0) && cond.size(1) == config_.cond_width,
          ErrorCode::DimensionMismatch, "condition batch must be [B, cond_width]");
  const bool isolate = config_.mode == ModelMode::Alternative;
  auto x = embed(tokens, lay);
  const auto c = condition(cond);
  for (const auto& block : *blocks) x = block->as<InterMBlock>()->forward(x, c, lay, isolate);
  const auto logits = head(head_mod->modulate(x, c));
  const int64_t span = lay.span();
  return torch::cat({logits.slice(1, 0, span), logits.slice(1, span + 1)}, 1);
}

torch::Tensor InterMImpl::condition_vector(const text::TextEmbedding& embedding) const {
  if (embedding.is_null) return null_cond;
  require(static_cast<int>(embedding.vector.size()) == config_.cond_width, ErrorCode::DimensionMismatch,
          "text embedding width does not match the model condition width");
  return torch::from_blob(const_cast<float*>(embedding.vector.data()), {config_.cond_width}, torch::kFloat)
      .clone()
      .to(null_cond.scalar_type());
}

torch::Tensor masked_ce_loss(const torch::Tensor& logits, const torch::Tensor& targets, const std::vector<int>& rows) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "masked loss needs at least one masked position");
  require(logits.dim() == 2 && targets.dim() == 1 && targets.size(0) == logits.size(0),
          ErrorCode::DimensionMismatch, "masked loss expects logits [R, K] and targets [R]");
  std::vector<int64_t> ids(rows.begin(), rows.end());
  const auto index = torch::tensor(ids, torch::kLong);
  const auto selected_targets = targets.index_select(0, index);
  const auto classes = logits.size(1);
  require(selected_targets.min().item<int64_t>() >= 0 && selected_targets.max().item<int64_t>() < classes,
          ErrorCode::InvalidArgument, "masked target outside the codebook");
  const auto log_probs = torch::log_softmax(logits.index_select(0, index), -1);
  return -log_probs.gather(1, selected_targets.unsqueeze(1)).mean();
}

Transformer make_transformer(const TransformerConfig& config, const ModelShape& shape, std::uint64_t seed) {
  torch::manual_seed(seed);
  Transformer out;
  out.model = InterM(config, shape);
  out.seed = seed;
  return out;
}

Checkpoint Transformer::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.kind = "transformer";
  ckpt.metadata["config"] = to_json(model->config());
  ckpt.metadata["mode"] = to_string(model->config().mode);
  ckpt.metadata["codebook_size"] = model->shape().codebook_size;
  ckpt.metadata["rows"] = model->shape().rows;
  ckpt.metadata["cols"] = model->shape().cols;
  ckpt.metadata["tokenizer_fingerprint"] = tokenizer_fingerprint;
  ckpt.metadata["seed"] = seed;
  ckpt.metadata["text_backend"] = text_backend;
  vq::export_module(*model, "model.", ckpt.arrays);
  return ckpt;
}

Transformer Transformer::from_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.kind == "transformer", ErrorCode::CheckpointMismatch, "not a transformer checkpoint");
  TransformerConfig config;
  from_json_strict(ckpt.metadata.at("config"), config);
  const ModelShape shape{ckpt.metadata.at("codebook_size").get<int>(), ckpt.metadata.at("rows").get<int>(),
                         ckpt.metadata.at("cols").get<int>()};
  auto out = make_transformer(config, shape, ckpt.metadata.at("seed").get<std::uint64_t>());
  vq::import_module(*out.model, "model.", ckpt);
  out.tokenizer_fingerprint = ckpt.metadata.at("tokenizer_fingerprint").get<std::string>();
  out.text_backend = ckpt.metadata.at("text_backend").get<std::string>();
  out.model->eval();
  return out;
}

void Transformer::check_pairing(const std::string& fingerprint) const {
  require(tokenizer_fingerprint == fingerprint, ErrorCode::CheckpointMismatch,
          "transformer was trained against tokenizer " + tokenizer_fingerprint + ", got " + fingerprint);
}

void Transformer::check_pairing(const vq::Tokenizer& tokenizer) const {
  require(tokenizer.config().codebook_size == model->shape().codebook_size, ErrorCode::CheckpointMismatch,
          "codebook size differs between tokenizer and transformer");
  check_pairing(tokenizer.fingerprint());
}

TransformerTrainLog train_transformer(Transformer& transformer, const std::vector<TrainingPair>& data,
                                      std::uint64_t seed, const TrainCallback& on_step) {
  require(!data.empty(), ErrorCode::InvalidArgument, "training set is empty");
  auto& model = transformer.model;
  const auto& config = model->config();
  const auto layout = model->layout();
  const int k = model->shape().codebook_size;
  const int rows_per_sample = layout.generable_pool();
  const bool alternative = config.mode == ModelMode::Alternative;
  for (const auto& pair : data) {
    require(pair.a.rows == layout.rows && pair.a.cols == layout.cols && !pair.texts.empty(),
            ErrorCode::DimensionMismatch, "training pair does not match the model token grid");
  }

  torch::manual_seed(seed);
  Rng rng(seed);
  const int count = static_cast<int>(data.size());
  const int batch = std::min(config.schedule.batch_size, count);
  const int total = config.schedule.total_iterations(count);
  const int per_epoch = (count + batch - 1) / batch;

  model->train();
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.schedule.learning_rate));
  TransformerTrainLog log;
  std::vector<int> order;
  int cursor = count;
  double epoch_sum = 0.0;
  int epoch_steps = 0;

  for (int step = 0; step < total; ++step) {
    if (cursor + batch > count) {
      order = rng.sample_without_replacement(count, count);
      cursor = 0;
    }
    std::vector<TokenSequence> sequences;
    std::vector<torch::Tensor> conds;
    std::vector<mask::MaskPlan> plans;
    for (int s = 0; s < batch; ++s) {
      const auto& pair = data[static_cast<std::size_t>(order[static_cast<std::size_t>(cursor + s)])];
      sequences.push_back(flatten_concat(pair.a, pair.b, k));
      const auto& text = pair.texts[rng.below(pair.texts.size())];
      const bool drop = rng.bernoulli(config.cond_drop);
      log.dropped_conditions += drop ? 1 : 0;
      ++log.conditions;
      conds.push_back(drop ? model->null_embedding() : model->condition_vector(text));
      if (alternative) {
        const auto person = rng.bernoulli(0.5) ? mask::Person::A : mask::Person::B;
        plans.push_back(mask::interaction_mask(layout, person, rng.uniform(), rng));
      } else {
        plans.push_back(mask::first_round_mask(layout, config.p_r, rng));
      }
      const auto& plan = plans.back();
      const int pool = plan.strategy == mask::Strategy::Random ? layout.generable_pool() : layout.span();
      require(static_cast<int>(plan.positions.size()) == std::max(1, mask::mask_count(pool, plan.tau)),
              ErrorCode::InvalidArgument, "first-round mask size departs from the schedule");
      log.masks.push_back({pool, plan.tau, static_cast<int>(plan.positions.size()), 1.0, 0});
    }
    cursor += batch;

    std::vector<int64_t> input(static_cast<std::size_t>(batch) * layout.length());
    std::vector<int64_t> targets(static_cast<std::size_t>(batch) * rows_per_sample);
    std::vector<int> rows;
    for (int s = 0; s < batch; ++s) {
      const auto& seq = sequences[static_cast<std::size_t>(s)].tokens;
      std::copy(seq.begin(), seq.end(), input.begin() + static_cast<std::ptrdiff_t>(s) * layout.length());
      for (int r = 0; r < rows_per_sample; ++r) {
        targets[static_cast<std::size_t>(s) * rows_per_sample + r] = seq[static_cast<std::size_t>(row_to_index(layout, r))];
      }
      for (int p : plans[static_cast<std::size_t>(s)].positions) {
        input[static_cast<std::size_t>(s) * layout.length() + p] = mask_token(k);
        rows.push_back(s * rows_per_sample + index_to_row(layout, p));
      }
    }
    const auto cond = torch::stack(conds);
    const auto target_tensor = torch::tensor(targets, torch::kLong);
    auto tokens = torch::tensor(input, torch::kLong).view({batch, layout.length()});
    const auto logits = model->forward(tokens, cond).reshape({-1, k});
    auto loss = masked_ce_loss(logits, target_tensor, rows);

    // Step unroll: fill first-round positions with predictions, remask the
    // least confident ones and predict them again.
    const auto probs = torch::softmax(logits.detach(), -1);
    const auto [best_prob, best_index] = probs.max(-1);
    const auto prob_acc = best_prob.accessor<float, 1>();
    const auto index_acc = best_index.accessor<int64_t, 1>();
    std::vector<int> second_rows;
    for (int s = 0; s < batch; ++s) {
      const auto& plan = plans[static_cast<std::size_t>(s)];
      std::vector<double> confidences;
      for (int p : plan.positions) {
        const int row = s * rows_per_sample + index_to_row(layout, p);
        confidences.push_back(prob_acc[row]);
        input[static_cast<std::size_t>(s) * layout.length() + p] = index_acc[row];
      }
      const auto remask = mask::step_unroll_remask(plan.positions, confidences, plan.tau, rng);
      const int expected = mask::mask_count(static_cast<int>(plan.positions.size()), remask.tau);
      require(static_cast<int>(remask.positions.size()) == expected, ErrorCode::InvalidArgument,
              "step-unroll remask size departs from the schedule");
      auto& record = log.masks[log.masks.size() - static_cast<std::size_t>(batch - s)];
      record.tau_next = remask.tau;
      record.remasked = expected;
      for (int p : remask.positions) {
        input[static_cast<std::size_t>(s) * layout.length() + p] = mask_token(k);
        second_rows.push_back(s * rows_per_sample + index_to_row(layout, p));
      }
    }
    if (!second_rows.empty()) {
      tokens = torch::tensor(input, torch::kLong).view({batch, layout.length()});
      const auto logits2 = model->forward(tokens, cond).reshape({-1, k});
      loss = loss + masked_ce_loss(logits2, target_tensor, second_rows);
    }

    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::Divergence, "non-finite transformer loss at step " + std::to_string(step));
    }
    const double lr = config.schedule.learning_rate_at(step, total);
    for (auto& group : optimizer.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    optimizer.zero_grad();
    loss.backward();
    optimizer.step();

    log.step_loss.push_back(value);
    epoch_sum += value;
    if (++epoch_steps == per_epoch || step + 1 == total) {
      log.epoch_loss.push_back(epoch_sum / epoch_steps);
      epoch_sum = 0.0;
      epoch_steps = 0;
    }
    if (on_step) on_step(step, total, value);
  }
  model->eval();
  return log;
}

}  // namespace duet::interm
