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

#include "duet/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "duet/error.hpp"
#include "duet/rng.hpp"
#include "duet/vq.hpp"

namespace duet::eval {

InteractionEncoderImpl::InteractionEncoderImpl(int input_width, int hidden, int feature_dim) {
  conv1_ = register_module("conv1", torch::nn::Conv1d(torch::nn::Conv1dOptions(input_width, hidden, 5).padding(2)));
  conv2_ = register_module("conv2", torch::nn::Conv1d(torch::nn::Conv1dOptions(hidden, hidden, 5).padding(2)));
  out_ = register_module("out", torch::nn::Linear(hidden, feature_dim));
}

torch::Tensor InteractionEncoderImpl::forward(const torch::Tensor& x) {
  const auto h = torch::relu(conv2_(torch::relu(conv1_(x)))).mean(-1);
  return torch::nn::functional::normalize(out_(h), torch::nn::functional::NormalizeFuncOptions().dim(-1));
}

TextHeadImpl::TextHeadImpl(int cond_width, int hidden, int feature_dim) {
  fc1_ = register_module("fc1", torch::nn::Linear(cond_width, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, feature_dim));
}

torch::Tensor TextHeadImpl::forward(const torch::Tensor& x) {
  return torch::nn::functional::normalize(fc2_(torch::relu(fc1_(x))),
                                          torch::nn::functional::NormalizeFuncOptions().dim(-1));
}

FeatureExtractor::FeatureExtractor(const EvaluationConfig& config, int joints, int width, int cond_width,
                                   std::uint64_t seed)
    : config_(config), joints_(joints), width_(width), cond_width_(cond_width), seed_(seed) {
  require(config.feature_dim >= 1 && config.hidden >= 1, ErrorCode::InvalidArgument, "invalid extractor widths");
  torch::manual_seed(seed);
  encoder_ = InteractionEncoder(input_width(), config.hidden, config.feature_dim);
  text_head_ = TextHead(cond_width, config.hidden, config.feature_dim);
  mean_ = torch::zeros({input_width()});
  std_ = torch::ones({input_width()});
}

void FeatureExtractor::set_normalization(torch::Tensor mean, torch::Tensor std) {
  require(mean.numel() == input_width() && std.numel() == input_width(), ErrorCode::DimensionMismatch,
          "normalization statistics do not match the extractor input");
  mean_ = mean.reshape({input_width()}).to(torch::kFloat);
  std_ = std.reshape({input_width()}).to(torch::kFloat);
}

torch::Tensor FeatureExtractor::prepare(const std::vector<const motion::InteractionSample*>& samples) const {
  require(!samples.empty(), ErrorCode::InvalidArgument, "no samples to embed");
  std::vector<torch::Tensor> rows;
  const int frames = samples.front()->motion_a.frames();
  for (const auto* s : samples) {
    require(s->motion_a.joints() == joints_ && s->motion_a.width() == width_ && s->motion_b.same_shape(s->motion_a) &&
                s->motion_a.frames() == frames,
            ErrorCode::DimensionMismatch, "sample shape does not match the extractor");
    const auto a = vq::motion_to_tensor(s->motion_a).reshape({frames, -1});
    const auto b = vq::motion_to_tensor(s->motion_b).reshape({frames, -1});
    rows.push_back(torch::cat({a, b}, 1));
  }
  const auto x = (torch::stack(rows) - mean_) / std_;  // [B, N, C]
  return x.transpose(1, 2).contiguous();
}

namespace {

Features to_features(const torch::Tensor& t) {
  const auto d = t.detach().to(torch::kDouble).contiguous();
  Features out(d.size(0), d.size(1));
  const double* src = d.data_ptr<double>();
  for (int64_t r = 0; r < d.size(0); ++r) {
    for (int64_t c = 0; c < d.size(1); ++c) out(r, c) = src[r * d.size(1) + c];
  }
  return out;
}

torch::Tensor stack_texts(const std::vector<text::TextEmbedding>& texts, int width) {
  std::vector<torch::Tensor> rows;
  for (const auto& t : texts) {
    require(!t.is_null && static_cast<int>(t.vector.size()) == width, ErrorCode::DimensionMismatch,
            "text embedding width does not match the extractor");
    rows.push_back(torch::from_blob(const_cast<float*>(t.vector.data()), {width}, torch::kFloat).clone());
  }
  return torch::stack(rows);
}

}  // namespace

Features FeatureExtractor::motion_features(const std::vector<motion::InteractionSample>& samples) const {
  torch::NoGradGuard no_grad;
  std::vector<const motion::InteractionSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return to_features(encoder_->forward(prepare(ptrs)));
}

Features FeatureExtractor::text_features(const std::vector<text::TextEmbedding>& texts) const {
  torch::NoGradGuard no_grad;
  require(!texts.empty(), ErrorCode::InvalidArgument, "no texts to embed");
  return to_features(text_head_->forward(stack_texts(texts, cond_width_)));
}

Checkpoint FeatureExtractor::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.kind = "extractor";
  ckpt.metadata["config"] = to_json(config_);
  ckpt.metadata["joints"] = joints_;
  ckpt.metadata["width"] = width_;
  ckpt.metadata["cond_width"] = cond_width_;
  ckpt.metadata["seed"] = seed_;
  vq::export_module(*encoder_, "encoder.", ckpt.arrays);
  vq::export_module(*text_head_, "text.", ckpt.arrays);
  ckpt.arrays.push_back(vq::to_array("norm.mean", mean_));
  ckpt.arrays.push_back(vq::to_array("norm.std", std_));
  return ckpt;
}

FeatureExtractor FeatureExtractor::from_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.kind == "extractor", ErrorCode::CheckpointMismatch, "not a feature extractor checkpoint");
  EvaluationConfig config;
  from_json_strict(ckpt.metadata.at("config"), config);
  FeatureExtractor out(config, ckpt.metadata.at("joints").get<int>(), ckpt.metadata.at("width").get<int>(),
                       ckpt.metadata.at("cond_width").get<int>(), ckpt.metadata.at("seed").get<std::uint64_t>());
  vq::import_module(*out.encoder_, "encoder.", ckpt);
  vq::import_module(*out.text_head_, "text.", ckpt);
  out.set_normalization(vq::from_array(ckpt.array("norm.mean")), vq::from_array(ckpt.array("norm.std")));
  out.encoder_->eval();
  out.text_head_->eval();
  return out;
}

std::string FeatureExtractor::fingerprint() const { return content_hash(to_checkpoint()); }

FeatureExtractor train_feature_extractor(const std::vector<motion::InteractionSample>& samples,
                                         const text::TextEncoder& encoder, const EvaluationConfig& config,
                                         std::uint64_t seed, ExtractorTrainLog* log) {
  require(!samples.empty(), ErrorCode::InvalidArgument, "extractor training set is empty");
  std::map<std::string, int> class_ids;
  for (const auto& s : samples) class_ids.emplace(s.label, static_cast<int>(class_ids.size()));
  require(class_ids.size() >= 2, ErrorCode::InvalidArgument, "contrastive training needs at least two classes");

  const auto& first = samples.front().motion_a;
  FeatureExtractor extractor(config, first.joints(), first.width(), encoder.width(), seed);
  std::vector<const motion::InteractionSample*> all;
  for (const auto& s : samples) all.push_back(&s);
  {
    const auto x = extractor.prepare(all);  // identity-normalized
    const auto stats = x.transpose(1, 2).reshape({-1, extractor.input_width()}).to(torch::kDouble);
    extractor.set_normalization(stats.mean(0), stats.std(0, /*unbiased=*/false).clamp_min(1e-2));
  }
  std::vector<std::vector<torch::Tensor>> text_rows;
  for (const auto& s : samples) {
    require(!s.texts.empty(), ErrorCode::InvalidArgument, "sample without texts");
    std::vector<torch::Tensor> rows;
    for (const auto& t : s.texts) {
      const auto e = encoder.encode(t);
      rows.push_back(torch::from_blob(const_cast<float*>(e.vector.data()), {encoder.width()}, torch::kFloat).clone());
    }
    text_rows.push_back(std::move(rows));
  }
  const auto inputs = extractor.prepare(all);

  torch::manual_seed(seed);
  Rng rng(seed);
  auto& enc = extractor.encoder();
  auto& head = extractor.text_head();
  std::vector<torch::Tensor> params = enc->parameters();
  for (const auto& p : head->parameters()) params.push_back(p);
  torch::optim::Adam optimizer(params, torch::optim::AdamOptions(config.learning_rate));
  const int count = static_cast<int>(samples.size());
  const int batch = std::min(config.batch_size, count);
  enc->train();
  head->train();
  for (int step = 0; step < config.steps; ++step) {
    const auto picks = rng.sample_without_replacement(count, batch);
    std::vector<int64_t> ids(picks.begin(), picks.end());
    std::vector<torch::Tensor> texts;
    std::vector<int64_t> labels;
    for (int i : picks) {
      const auto& rows = text_rows[static_cast<std::size_t>(i)];
      texts.push_back(rows[rng.below(rows.size())]);
      labels.push_back(class_ids.at(samples[static_cast<std::size_t>(i)].label));
    }
    const auto m = enc->forward(inputs.index_select(0, torch::tensor(ids, torch::kLong)));
    const auto t = head->forward(torch::stack(texts));
    const auto label = torch::tensor(labels, torch::kLong);
    const auto same_class = label.unsqueeze(0) == label.unsqueeze(1);
    const auto diagonal = torch::eye(batch, torch::kBool);
    // Same-class pairs other than the matched one are not negatives.
    const auto excluded = same_class.logical_and(diagonal.logical_not());
    const auto logits = (torch::matmul(m, t.transpose(0, 1)) / config.temperature).masked_fill(excluded, -1e9);
    const auto target = torch::arange(batch, torch::kLong);
    const auto loss = 0.5 * (torch::nn::functional::cross_entropy(logits, target) +
                             torch::nn::functional::cross_entropy(logits.transpose(0, 1), target));
    const double value = loss.item<double>();
    require(std::isfinite(value), ErrorCode::Divergence, "non-finite extractor loss at step " + std::to_string(step));
    optimizer.zero_grad();
    loss.backward();
    optimizer.step();
    if (log != nullptr) log->step_loss.push_back(value);
  }
  enc->eval();
  head->eval();
  return extractor;
}

nlohmann::ordered_json evaluation_report(const FeatureExtractor& extractor, const text::TextEncoder& encoder,
                                         const std::vector<motion::InteractionSample>& generated,
                                         const std::vector<motion::InteractionSample>& reference,
                                         std::uint64_t seed) {
  require(generated.size() >= 2 && reference.size() >= 2, ErrorCode::InvalidArgument,
          "evaluation needs at least two generated and two reference samples");
  Rng rng(seed);
  const auto gen = extractor.motion_features(generated);
  const auto real = extractor.motion_features(reference);
  std::vector<text::TextEmbedding> texts;
  for (const auto& s : generated) {
    require(!s.texts.empty(), ErrorCode::InvalidArgument, "generated sample '" + s.id + "' has no text");
    texts.push_back(encoder.encode(s.texts.front()));
  }
  const auto text_feats = extractor.text_features(texts);
  const int pool = std::min(extractor.config().pool_size, static_cast<int>(generated.size()));
  const auto top = r_precision(gen, text_feats, pool, rng);

  std::map<std::string, std::vector<int>> by_text;
  for (std::size_t i = 0; i < generated.size(); ++i) by_text[generated[i].texts.front()].push_back(static_cast<int>(i));
  std::vector<Features> groups;
  for (const auto& [text, rows] : by_text) {
    if (rows.size() < 2) continue;
    Features g(static_cast<Eigen::Index>(rows.size()), gen.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) g.row(static_cast<Eigen::Index>(r)) = gen.row(rows[r]);
    groups.push_back(std::move(g));
  }

  nlohmann::ordered_json report;
  report["fid"] = fid(real, gen);
  report["r_precision"] = {{"top1", top.top1}, {"top2", top.top2}, {"top3", top.top3}};
  report["mm_dist"] = mm_dist(gen, text_feats);
  report["diversity"] = diversity(gen, extractor.config().diversity_pairs, rng);
  report["mmodality"] = groups.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(mmodality(groups));

  std::map<std::string, const motion::InteractionSample*> ref_by_id;
  for (const auto& s : reference) ref_by_id[s.id] = &s;
  bool paired = true;
  double error = 0.0;
  for (const auto& s : generated) {
    const auto it = ref_by_id.find(s.id);
    if (it == ref_by_id.end() || !it->second->motion_a.same_shape(s.motion_a)) {
      paired = false;
      break;
    }
    error += 0.5 * (mpjpe(s.motion_a, it->second->motion_a) + mpjpe(s.motion_b, it->second->motion_b));
  }
  if (paired) report["mpjpe"] = error / static_cast<double>(generated.size());

  report["meta"] = {{"seed", seed},
                    {"extractor", extractor.fingerprint()},
                    {"generated_count", generated.size()},
                    {"reference_count", reference.size()},
                    {"r_precision_pool", pool},
                    {"mmodality_groups", groups.size()}};
  return report;
}

}  // namespace duet::eval
