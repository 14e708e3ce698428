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

#include "duet/vq.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "duet/error.hpp"
#include "duet/rng.hpp"

namespace duet::vq {

namespace F = torch::nn::functional;

std::vector<StageSpec> temporal_stages() { return {{4, 2, 1}, {4, 2, 1}}; }

std::vector<StageSpec> spatial_stages(int joints) {
  switch (joints) {
    case 8: return {{4, 2, 1}, {4, 2, 1}};
    case 22: return {{4, 2, 1}, {3, 2, 0}};
    case 56: return {{4, 2, 1}, {4, 2, 1}, {2, 3, 0}};
    default:
      throw Error(ErrorCode::UnsupportedSkeleton,
                  "no spatial downsampling table for " + std::to_string(joints) + " joints");
  }
}

int downsampled_size(int size, const StageSpec& stage) {
  return (size + 2 * stage.padding - stage.kernel) / stage.stride + 1;
}

int token_rows(int frames) {
  require(frames > 0 && frames % 4 == 0, ErrorCode::InvalidArgument,
          "frame count must be a positive multiple of 4, got " + std::to_string(frames));
  return frames / 4;
}

int token_cols(int joints) {
  int size = joints;
  for (const auto& s : spatial_stages(joints)) size = downsampled_size(size, s);
  return size;
}

motion::Layout layout_from_name(const std::string& name) {
  if (name == "pos_vel_rot6d") return motion::Layout::PosVelRot6d;
  if (name == "rot6d") return motion::Layout::Rot6d;
  if (name == "root_pos_vel_rot6d") return motion::Layout::RootPosVelRot6d;
  throw Error(ErrorCode::ConfigSchema, "unknown layout '" + name + "'");
}

ResidualBlockImpl::ResidualBlockImpl(int channels) {
  conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
  conv2_ = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 1)));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  return x + conv2_(torch::relu(conv1_(torch::relu(x))));
}

namespace {
constexpr StageSpec kKeep{3, 1, 1};
}

MotionVqVaeImpl::MotionVqVaeImpl(const VqConfig& config, int joints, int feature_width)
    : joints_(joints), feature_width_(feature_width), latent_dim_(config.latent_dim) {
  const auto temporal = temporal_stages();
  const auto spatial = spatial_stages(joints);
  const std::size_t count = std::max(temporal.size(), spatial.size());
  for (std::size_t i = 0; i < count; ++i) {
    stages_.emplace_back(i < temporal.size() ? temporal[i] : kKeep, i < spatial.size() ? spatial[i] : kKeep);
  }
  const int width = config.width;
  enc_in_ = register_module("enc_in", torch::nn::Conv2d(torch::nn::Conv2dOptions(feature_width, width, 3).padding(1)));
  enc_stages_ = register_module("enc_stages", torch::nn::ModuleList());
  dec_stages_ = register_module("dec_stages", torch::nn::ModuleList());
  for (const auto& [t, s] : stages_) {
    torch::nn::Sequential down;
    down->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(width, width, {t.kernel, s.kernel})
                                          .stride({t.stride, s.stride})
                                          .padding({t.padding, s.padding})));
    down->push_back(torch::nn::ReLU());
    for (int r = 0; r < config.res_blocks; ++r) down->push_back(ResidualBlock(width));
    enc_stages_->push_back(down);

    torch::nn::Sequential up;
    for (int r = 0; r < config.res_blocks; ++r) up->push_back(ResidualBlock(width));
    up->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(width, width, 3).padding(1)));
    up->push_back(torch::nn::ReLU());
    dec_stages_->push_back(up);
  }
  enc_out_ = register_module("enc_out", torch::nn::Conv2d(torch::nn::Conv2dOptions(width, latent_dim_, 3).padding(1)));
  dec_in_ = register_module("dec_in", torch::nn::Conv2d(torch::nn::Conv2dOptions(latent_dim_, width, 3).padding(1)));
  dec_out_ = register_module("dec_out", torch::nn::Conv2d(torch::nn::Conv2dOptions(width, feature_width, 3).padding(1)));
}

torch::Tensor MotionVqVaeImpl::encode(const torch::Tensor& x) {
  require(x.dim() == 4 && x.size(1) == feature_width_ && x.size(3) == joints_, ErrorCode::DimensionMismatch,
          "encoder expects [B, d, N, J] input");
  token_rows(static_cast<int>(x.size(2)));
  auto h = torch::relu(enc_in_(x));
  for (const auto& stage : *enc_stages_) h = stage->as<torch::nn::Sequential>()->forward(h);
  return enc_out_(h).permute({0, 2, 3, 1});
}

torch::Tensor MotionVqVaeImpl::decode(const torch::Tensor& latent, int frames) {
  require(latent.dim() == 4 && latent.size(3) == latent_dim_, ErrorCode::DimensionMismatch,
          "decoder expects [B, n, j, d'] latents");
  require(latent.size(1) * 4 == frames && latent.size(2) == token_cols(joints_), ErrorCode::DimensionMismatch,
          "latent grid does not match the configured skeleton and frame count");
  // Grid sizes before each downsampling stage.
  std::vector<std::pair<int64_t, int64_t>> sizes;
  int64_t rows = frames;
  int64_t cols = joints_;
  for (const auto& [t, s] : stages_) {
    sizes.emplace_back(rows, cols);
    rows = downsampled_size(static_cast<int>(rows), t);
    cols = downsampled_size(static_cast<int>(cols), s);
  }
  auto h = torch::relu(dec_in_(latent.permute({0, 3, 1, 2})));
  for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
    auto* stage = dec_stages_[static_cast<std::size_t>(i)]->as<torch::nn::Sequential>();
    const std::size_t block_count = stage->size();
    // Residual blocks, then nearest upsampling, then the conv + ReLU tail.
    for (std::size_t k = 0; k + 2 < block_count; ++k) h = (*stage)[k]->as<ResidualBlock>()->forward(h);
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{sizes[i].first, sizes[i].second})
                              .mode(torch::kNearest));
    h = torch::relu((*stage)[block_count - 2]->as<torch::nn::Conv2d>()->forward(h));
  }
  return dec_out_(h);
}

QuantizeResult quantize(const torch::Tensor& latent, const Codebook& codebook, double beta) {
  require(codebook.size() >= 1, ErrorCode::InvalidArgument, "codebook is empty");
  require(latent.size(-1) == codebook.dim(), ErrorCode::DimensionMismatch, "latent width differs from codebook");
  const auto flat = latent.detach().reshape({-1, codebook.dim()}).contiguous();
  const auto cells = flat.size(0);
  std::vector<int64_t> indices(static_cast<std::size_t>(cells));
  if (flat.scalar_type() == torch::kDouble) {
    const double* data = flat.data_ptr<double>();
    for (int64_t i = 0; i < cells; ++i) {
      std::span<const double> cell(data + i * codebook.dim(), static_cast<std::size_t>(codebook.dim()));
      for (double v : cell) require(std::isfinite(v), ErrorCode::NonFinite, "latent contains non-finite values");
      indices[i] = codebook.nearest(cell);
    }
  } else {
    const auto as_float = flat.to(torch::kFloat);
    const float* data = as_float.data_ptr<float>();
    const auto assigned = codebook.assign({data, static_cast<std::size_t>(cells * codebook.dim())});
    std::copy(assigned.begin(), assigned.end(), indices.begin());
  }
  auto table = torch::from_blob(const_cast<double*>(codebook.entries().data()), {codebook.size(), codebook.dim()},
                                torch::kDouble)
                   .to(latent.scalar_type());
  auto index_tensor = torch::from_blob(indices.data(), {cells}, torch::kLong).clone();
  auto shape = latent.sizes().vec();
  shape.pop_back();
  QuantizeResult out;
  out.codes = table.index_select(0, index_tensor).reshape(latent.sizes());
  out.indices = index_tensor.reshape(shape);
  out.quantized = latent + (out.codes - latent).detach();
  out.commitment = beta * (latent - out.codes.detach()).pow(2).mean();
  return out;
}

torch::Tensor dequantize(const TokenMap& tokens, const Codebook& codebook) {
  require(static_cast<int>(tokens.indices.size()) == tokens.rows * tokens.cols, ErrorCode::DimensionMismatch,
          "token map size does not match its grid");
  auto out = torch::empty({tokens.rows, tokens.cols, codebook.dim()}, torch::kFloat);
  float* dst = out.data_ptr<float>();
  for (std::size_t i = 0; i < tokens.indices.size(); ++i) {
    const int k = tokens.indices[i];
    require(k >= 0 && k < codebook.size(), ErrorCode::InvalidArgument,
            "token index " + std::to_string(k) + " outside the codebook");
    const auto code = codebook.entry(k);
    for (int c = 0; c < codebook.dim(); ++c) dst[i * codebook.dim() + c] = static_cast<float>(code[c]);
  }
  return out;
}

VqLossParts vq_losses(const torch::Tensor& motion, const torch::Tensor& reconstruction, const torch::Tensor& latent,
                      const torch::Tensor& codes, double beta) {
  require(motion.sizes() == reconstruction.sizes() && latent.sizes() == codes.sizes(), ErrorCode::DimensionMismatch,
          "loss inputs must have matching shapes");
  return {(motion - reconstruction).abs().mean(), beta * (latent - codes.detach()).pow(2).mean()};
}

GeometricLossParts geometric_losses(const torch::Tensor& positions, const torch::Tensor& reconstructed,
                                    const torch::Tensor& foot_labels, const motion::Skeleton& skeleton) {
  require(positions.sizes() == reconstructed.sizes() && positions.dim() == 4 && positions.size(3) == 3,
          ErrorCode::DimensionMismatch, "geometric losses expect matching [B, N, J, 3] positions");
  const auto frames = positions.size(1);
  require(frames >= 2, ErrorCode::InvalidArgument, "geometric losses need at least two frames");
  require(positions.size(2) == skeleton.joint_count(), ErrorCode::DimensionMismatch, "skeleton joint count mismatch");
  using torch::indexing::None;
  using torch::indexing::Slice;

  const auto diff = positions.index({Slice(), Slice(1)}) - positions.index({Slice(), Slice(None, -1)});
  const auto diff_hat = reconstructed.index({Slice(), Slice(1)}) - reconstructed.index({Slice(), Slice(None, -1)});
  GeometricLossParts out;
  out.velocity = (diff - diff_hat).abs().mean();

  const auto& feet = skeleton.feet;
  if (feet.empty()) {
    out.foot_contact = torch::zeros({}, positions.options());
  } else {
    require(foot_labels.dim() == 3 && foot_labels.size(1) == frames &&
                foot_labels.size(2) == static_cast<int64_t>(feet.size()),
            ErrorCode::DimensionMismatch, "foot labels must be [B, N, feet]");
    std::vector<int64_t> foot_ids(feet.begin(), feet.end());
    const auto foot_index = torch::tensor(foot_ids, torch::kLong);
    const auto foot_motion = diff_hat.index_select(2, foot_index);
    const auto labels = foot_labels.index({Slice(), Slice(None, -1)}).to(positions.scalar_type()).unsqueeze(-1);
    out.foot_contact = (foot_motion * labels).abs().mean();
  }

  std::vector<int64_t> children;
  std::vector<int64_t> parents;
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    if (skeleton.parents[j] < 0) continue;
    children.push_back(j);
    parents.push_back(skeleton.parents[j]);
  }
  const auto child_index = torch::tensor(children, torch::kLong);
  const auto parent_index = torch::tensor(parents, torch::kLong);
  const auto bones = [&](const torch::Tensor& p) {
    const auto v = p.index_select(2, child_index) - p.index_select(2, parent_index);
    return (v.pow(2).sum(-1) + 1e-12).sqrt();
  };
  out.bone_length = (bones(positions) - bones(reconstructed)).abs().mean();
  return out;
}

Normalizer Normalizer::identity(int joints, int width) {
  return {torch::zeros({joints, width}), torch::ones({joints, width})};
}

torch::Tensor motion_to_tensor(const motion::MotionSequence& m) {
  return torch::from_blob(const_cast<float*>(m.values().data()), {m.frames(), m.joints(), m.width()}, torch::kFloat)
      .clone();
}

Normalizer Normalizer::fit(const std::vector<motion::MotionSequence>& motions) {
  require(!motions.empty(), ErrorCode::InvalidArgument, "cannot fit normalization on an empty set");
  std::vector<torch::Tensor> all;
  all.reserve(motions.size());
  for (const auto& m : motions) all.push_back(motion_to_tensor(m).to(torch::kDouble));
  const auto stacked = torch::cat(all, 0);  // [sum N, J, d]
  const auto mean = stacked.mean(0);
  const auto std = stacked.std(0, /*unbiased=*/false).clamp_min(1e-2);
  return {mean.to(torch::kFloat), std.to(torch::kFloat)};
}

torch::Tensor Normalizer::apply(const torch::Tensor& raw) const {
  return (raw - mean.to(raw.scalar_type())) / std.to(raw.scalar_type());
}

torch::Tensor Normalizer::invert(const torch::Tensor& normalized) const {
  return normalized * std.to(normalized.scalar_type()) + mean.to(normalized.scalar_type());
}

Tokenizer::Tokenizer(const VqConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      skeleton_(motion::Skeleton::by_name(config.skeleton)),
      layout_(layout_from_name(config.layout)),
      codebook_(config.codebook_size, config.latent_dim) {
  skeleton_.validate();
  spatial_stages(skeleton_.joint_count());
  torch::manual_seed(seed);
  model_ = MotionVqVae(config_, skeleton_.joint_count(), feature_width());
  normalizer_ = Normalizer::identity(skeleton_.joint_count(), feature_width());
}

void Tokenizer::check_motion(const motion::MotionSequence& m) const {
  require(m.joints() == skeleton_.joint_count() && m.skeleton() == skeleton_, ErrorCode::UnsupportedSkeleton,
          "motion skeleton '" + m.skeleton().name + "' does not match tokenizer skeleton '" + skeleton_.name + "'");
  require(m.layout() == layout_, ErrorCode::DimensionMismatch, "motion layout does not match the tokenizer");
  token_rows(m.frames());
}

torch::Tensor Tokenizer::encode(const motion::MotionSequence& m) const {
  check_motion(m);
  torch::NoGradGuard no_grad;
  const auto x = normalizer_.apply(motion_to_tensor(m)).permute({2, 0, 1}).unsqueeze(0);
  return model_->encode(x).squeeze(0).contiguous();
}

TokenMap Tokenizer::tokenize(const motion::MotionSequence& m) const {
  const auto latent = encode(m);
  const auto result = quantize(latent, codebook_, config_.beta);
  TokenMap out{static_cast<int>(latent.size(0)), static_cast<int>(latent.size(1)), {}};
  const auto idx = result.indices.contiguous();
  out.indices.assign(idx.data_ptr<int64_t>(), idx.data_ptr<int64_t>() + idx.numel());
  return out;
}

torch::Tensor Tokenizer::dequantize(const TokenMap& tokens) const {
  require(tokens.cols == token_cols(skeleton_.joint_count()), ErrorCode::DimensionMismatch,
          "token map width does not match the tokenizer skeleton");
  return vq::dequantize(tokens, codebook_);
}

motion::MotionSequence Tokenizer::decode(const torch::Tensor& latent, float fps) const {
  require(latent.dim() == 3 && latent.size(1) == token_cols(skeleton_.joint_count()) &&
              latent.size(2) == config_.latent_dim,
          ErrorCode::DimensionMismatch, "latent must be [n, j, d'] for this tokenizer");
  torch::NoGradGuard no_grad;
  const int frames = static_cast<int>(latent.size(0)) * 4;
  const auto out = model_->decode(latent.to(torch::kFloat).unsqueeze(0), frames).squeeze(0).permute({1, 2, 0});
  const auto raw = normalizer_.invert(out).contiguous();
  std::vector<float> data(raw.data_ptr<float>(), raw.data_ptr<float>() + raw.numel());
  return {frames, skeleton_, layout_, fps, std::move(data)};
}

motion::MotionSequence Tokenizer::detokenize(const TokenMap& tokens, float fps) const {
  return decode(dequantize(tokens), fps);
}

motion::MotionSequence Tokenizer::reconstruct(const motion::MotionSequence& m) const {
  return detokenize(tokenize(m), m.fps());
}

NamedArray to_array(const std::string& name, const torch::Tensor& tensor) {
  const auto t = tensor.detach().to(torch::kFloat).contiguous();
  NamedArray out{name, t.sizes().vec(), {}};
  out.values.assign(t.data_ptr<float>(), t.data_ptr<float>() + t.numel());
  return out;
}

torch::Tensor from_array(const NamedArray& array) {
  return torch::from_blob(const_cast<float*>(array.values.data()), array.shape, torch::kFloat).clone();
}

void export_module(const torch::nn::Module& module, const std::string& prefix, std::vector<NamedArray>& out) {
  for (const auto& item : module.named_parameters(true)) out.push_back(to_array(prefix + item.key(), item.value()));
  for (const auto& item : module.named_buffers(true)) out.push_back(to_array(prefix + item.key(), item.value()));
}

void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& checkpoint) {
  torch::NoGradGuard no_grad;
  const auto load = [&](const std::string& key, torch::Tensor& target) {
    const auto& array = checkpoint.array(prefix + key);
    const auto source = from_array(array);
    require(source.sizes() == target.sizes(), ErrorCode::CheckpointMismatch,
            "checkpoint array '" + prefix + key + "' has the wrong shape");
    target.copy_(source);
  };
  for (auto& item : module.named_parameters(true)) load(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) load(item.key(), item.value());
}

namespace {

std::vector<double> to_doubles(const NamedArray& a) { return {a.values.begin(), a.values.end()}; }

NamedArray from_doubles(const std::string& name, const std::vector<double>& values, std::vector<int64_t> shape) {
  return {name, std::move(shape), {values.begin(), values.end()}};
}

}  // namespace

Checkpoint Tokenizer::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.kind = "tokenizer";
  ckpt.metadata["config"] = to_json(config_);
  ckpt.metadata["seed"] = seed_;
  ckpt.metadata["codebook_batches_since_reset"] = codebook_.batches_since_reset();
  ckpt.metadata["codebook_initialized"] = codebook_.initialized();
  export_module(*model_, "model.", ckpt.arrays);
  ckpt.arrays.push_back(to_array("norm.mean", normalizer_.mean));
  ckpt.arrays.push_back(to_array("norm.std", normalizer_.std));
  const int64_t k = codebook_.size();
  const int64_t d = codebook_.dim();
  ckpt.arrays.push_back(from_doubles("codebook.entries", codebook_.entries(), {k, d}));
  ckpt.arrays.push_back(from_doubles("codebook.ema_count", codebook_.ema_count(), {k}));
  ckpt.arrays.push_back(from_doubles("codebook.ema_sum", codebook_.ema_sum(), {k, d}));
  ckpt.arrays.push_back(from_doubles("codebook.usage", codebook_.usage(), {k}));
  return ckpt;
}

Tokenizer Tokenizer::from_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.kind == "tokenizer", ErrorCode::CheckpointMismatch, "not a tokenizer checkpoint");
  VqConfig config;
  from_json_strict(ckpt.metadata.at("config"), config);
  Tokenizer out(config, ckpt.metadata.at("seed").get<std::uint64_t>());
  import_module(*out.model_, "model.", ckpt);
  out.normalizer_.mean = from_array(ckpt.array("norm.mean"));
  out.normalizer_.std = from_array(ckpt.array("norm.std"));
  out.codebook_.restore(to_doubles(ckpt.array("codebook.entries")), to_doubles(ckpt.array("codebook.ema_count")),
                        to_doubles(ckpt.array("codebook.ema_sum")), to_doubles(ckpt.array("codebook.usage")),
                        ckpt.metadata.at("codebook_batches_since_reset").get<int>(),
                        ckpt.metadata.at("codebook_initialized").get<bool>());
  return out;
}

std::string Tokenizer::fingerprint() const { return content_hash(to_checkpoint()); }

VqTrainLog train_vqvae(Tokenizer& tokenizer, const std::vector<motion::MotionSequence>& motions, std::uint64_t seed,
                       const StepCallback& on_step) {
  require(!motions.empty(), ErrorCode::InvalidArgument, "training set is empty");
  for (const auto& m : motions) tokenizer.check_motion(m);
  const auto& config = tokenizer.config();
  const auto& skeleton = tokenizer.skeleton();
  require(motion::has_positions(tokenizer.layout()), ErrorCode::InvalidArgument,
          "geometric losses need position channels");

  torch::manual_seed(seed);
  Rng rng(seed);
  tokenizer.normalizer() = Normalizer::fit(motions);
  const auto& norm = tokenizer.normalizer();

  std::vector<torch::Tensor> inputs;
  std::vector<torch::Tensor> positions;
  std::vector<torch::Tensor> labels;
  for (const auto& m : motions) {
    const auto raw = motion_to_tensor(m);
    inputs.push_back(norm.apply(raw).permute({2, 0, 1}));
    positions.push_back(raw.index({torch::indexing::Slice(), torch::indexing::Slice(), torch::indexing::Slice(0, 3)}));
    const double threshold =
        config.contact_threshold > 0.0 ? config.contact_threshold : motion::default_contact_threshold(m.fps());
    const auto contact = motion::foot_contact_labels(m, threshold);
    auto label = torch::zeros({m.frames(), static_cast<int64_t>(skeleton.feet.size())});
    for (int f = 0; f < m.frames(); ++f) {
      for (std::size_t k = 0; k < skeleton.feet.size(); ++k) label[f][static_cast<int64_t>(k)] = contact[f][k];
    }
    labels.push_back(label);
  }
  const auto all_inputs = torch::stack(inputs);
  const auto all_positions = torch::stack(positions);
  const auto all_labels = torch::stack(labels);

  const int count = static_cast<int>(motions.size());
  const int batch = std::min(config.schedule.batch_size, count);
  const int total = config.schedule.total_iterations(count);
  const int per_epoch = (count + batch - 1) / batch;
  const LossWeights weights{config.lambda_vel, config.lambda_fc, config.lambda_bl};

  auto& model = tokenizer.model();
  model->train();
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.schedule.learning_rate));

  VqTrainLog log;
  std::vector<int> order;
  int cursor = count;
  double epoch_sum = 0.0;
  int epoch_steps = 0;
  for (int step = 0; step < total; ++step) {
    if (cursor + batch > count) {
      order = rng.sample_without_replacement(count, count);
      cursor = 0;
    }
    std::vector<int64_t> ids(order.begin() + cursor, order.begin() + cursor + batch);
    cursor += batch;
    const auto index = torch::tensor(ids, torch::kLong);
    const auto x = all_inputs.index_select(0, index);
    const auto pos = all_positions.index_select(0, index);
    const auto foot = all_labels.index_select(0, index);

    const auto latent = model->encode(x);
    if (!torch::isfinite(latent).all().item<bool>()) {
      throw Error(ErrorCode::Divergence, "non-finite encoder output at step " + std::to_string(step));
    }
    auto& codebook = tokenizer.codebook();
    if (!codebook.initialized()) {
      const auto cells = latent.detach().reshape({-1, codebook.dim()}).contiguous();
      codebook.initialize_from({cells.data_ptr<float>(), static_cast<std::size_t>(cells.numel())}, rng);
    }
    const auto q = quantize(latent, codebook, config.beta);
    const auto recon = model->decode(q.quantized, static_cast<int>(x.size(2)));
    const auto parts = vq_losses(x, recon, latent, q.codes, config.beta);
    const auto recon_raw = norm.invert(recon.permute({0, 2, 3, 1}));
    const auto recon_pos = recon_raw.index({"...", torch::indexing::Slice(0, 3)});
    const auto geo = geometric_losses(pos, recon_pos, foot, skeleton);
    const auto loss = total_vq_loss(parts.reconstruction + parts.commitment, geo.velocity, geo.foot_contact,
                                    geo.bone_length, weights);

    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::Divergence, "non-finite VQ loss at step " + std::to_string(step) +
                                             " (recon=" + std::to_string(parts.reconstruction.item<double>()) +
                                             ", vel=" + std::to_string(geo.velocity.item<double>()) + ")");
    }
    const double lr = config.schedule.learning_rate_at(step, total);
    for (auto& group : optimizer.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    optimizer.zero_grad();
    loss.backward();
    optimizer.step();

    const auto cells = latent.detach().reshape({-1, codebook.dim()}).contiguous();
    const auto assigned = q.indices.reshape({-1}).contiguous();
    std::vector<int> assignments(assigned.data_ptr<int64_t>(), assigned.data_ptr<int64_t>() + assigned.numel());
    const auto report = codebook.ema_update({cells.data_ptr<float>(), static_cast<std::size_t>(cells.numel())},
                                            assignments, config.ema_decay, config.reset_window,
                                            config.reset_threshold, rng);
    log.resets += static_cast<int>(report.reset_ids.size());

    log.step_loss.push_back(value);
    log.learning_rate.push_back(lr);
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

}  // namespace duet::vq
