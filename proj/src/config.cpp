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

#include "duet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "duet/error.hpp"

namespace duet {

int ScheduleConfig::total_iterations(int dataset_size) const {
  if (iterations > 0) return iterations;
  require(dataset_size > 0 && batch_size > 0, ErrorCode::InvalidArgument, "empty dataset or batch");
  const int per_epoch = (dataset_size + batch_size - 1) / batch_size;
  return std::max(1, epochs * per_epoch);
}

double ScheduleConfig::learning_rate_at(int step, int total) const {
  const double progress = total > 0 ? static_cast<double>(step) / total : 0.0;
  double rate = learning_rate;
  const int warmup = static_cast<int>(std::floor(warmup_fraction * total));
  if (warmup > 0 && step < warmup) rate *= static_cast<double>(step) / warmup;
  for (double m : milestones) {
    if (progress >= m) rate *= decay;
  }
  return rate;
}

VqConfig VqConfig::interx() {
  VqConfig c;
  c.skeleton = "interx56";
  c.lambda_fc = 100.0;
  return c;
}

std::string to_string(ModelMode mode) { return mode == ModelMode::Collaborative ? "collaborative" : "alternative"; }

ModelMode mode_from_string(const std::string& name) {
  if (name == "collaborative") return ModelMode::Collaborative;
  if (name == "alternative") return ModelMode::Alternative;
  throw Error(ErrorCode::ConfigSchema, "unknown model mode '" + name + "'");
}

namespace {

void check_keys(const nlohmann::ordered_json& j, std::initializer_list<const char*> allowed, const char* where) {
  require(j.is_object(), ErrorCode::ConfigSchema, std::string(where) + " must be a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    require(keys.count(item.key()) > 0, ErrorCode::ConfigSchema,
            "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::ordered_json& j, const char* key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigSchema, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::ordered_json to_json(const ScheduleConfig& c) {
  return {{"epochs", c.epochs},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"warmup_fraction", c.warmup_fraction},
          {"milestones", c.milestones},
          {"decay", c.decay}};
}

nlohmann::ordered_json to_json(const VqConfig& c) {
  return {{"skeleton", c.skeleton},         {"layout", c.layout},
          {"width", c.width},               {"latent_dim", c.latent_dim},
          {"codebook_size", c.codebook_size}, {"res_blocks", c.res_blocks},
          {"beta", c.beta},                 {"lambda_vel", c.lambda_vel},
          {"lambda_fc", c.lambda_fc},       {"lambda_bl", c.lambda_bl},
          {"ema_decay", c.ema_decay},       {"reset_window", c.reset_window},
          {"reset_threshold", c.reset_threshold}, {"contact_threshold", c.contact_threshold},
          {"schedule", to_json(c.schedule)}};
}

nlohmann::ordered_json to_json(const TransformerConfig& c) {
  return {{"layers", c.layers},         {"heads", c.heads},   {"dim", c.dim},
          {"ffn_mult", c.ffn_mult},     {"cond_width", c.cond_width},
          {"cond_drop", c.cond_drop},   {"p_r", c.p_r},       {"mode", to_string(c.mode)},
          {"schedule", to_json(c.schedule)}};
}

nlohmann::ordered_json to_json(const GenerationConfig& c) {
  return {{"iterations", c.iterations},
          {"react_iterations", c.react_iterations},
          {"alternative_iterations", c.alternative_iterations},
          {"cfg_scale", c.cfg_scale},
          {"temperature", c.temperature},
          {"frames", c.frames}};
}

nlohmann::ordered_json to_json(const EvaluationConfig& c) {
  return {{"feature_dim", c.feature_dim},       {"hidden", c.hidden},
          {"steps", c.steps},                   {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},   {"temperature", c.temperature},
          {"pool_size", c.pool_size},           {"diversity_pairs", c.diversity_pairs}};
}

nlohmann::ordered_json to_json(const motion::SynthSpec& c) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (const auto& cls : c.classes) classes[cls.name] = cls.count;
  return {{"classes", classes}, {"frames", c.frames}, {"fps", c.fps}, {"texts_per_sample", c.texts_per_sample}};
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"text_backend", c.text_backend},
          {"text_table", c.text_table},
          {"data", to_json(c.data)},
          {"vq", to_json(c.vq)},
          {"transformer", to_json(c.transformer)},
          {"generation", to_json(c.generation)},
          {"evaluation", to_json(c.evaluation)}};
}

void from_json_strict(const nlohmann::ordered_json& j, ScheduleConfig& c) {
  check_keys(j, {"epochs", "iterations", "batch_size", "learning_rate", "warmup_fraction", "milestones", "decay"},
             "schedule");
  read(j, "epochs", c.epochs);
  read(j, "iterations", c.iterations);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "warmup_fraction", c.warmup_fraction);
  read(j, "milestones", c.milestones);
  read(j, "decay", c.decay);
  require(c.batch_size >= 1 && c.learning_rate > 0.0 && c.warmup_fraction >= 0.0 && c.warmup_fraction <= 1.0,
          ErrorCode::ConfigSchema, "invalid schedule values");
}

void from_json_strict(const nlohmann::ordered_json& j, VqConfig& c) {
  check_keys(j,
             {"skeleton", "layout", "width", "latent_dim", "codebook_size", "res_blocks", "beta", "lambda_vel",
              "lambda_fc", "lambda_bl", "ema_decay", "reset_window", "reset_threshold", "contact_threshold",
              "schedule"},
             "vq");
  read(j, "skeleton", c.skeleton);
  read(j, "layout", c.layout);
  read(j, "width", c.width);
  read(j, "latent_dim", c.latent_dim);
  read(j, "codebook_size", c.codebook_size);
  read(j, "res_blocks", c.res_blocks);
  read(j, "beta", c.beta);
  read(j, "lambda_vel", c.lambda_vel);
  read(j, "lambda_fc", c.lambda_fc);
  read(j, "lambda_bl", c.lambda_bl);
  read(j, "ema_decay", c.ema_decay);
  read(j, "reset_window", c.reset_window);
  read(j, "reset_threshold", c.reset_threshold);
  read(j, "contact_threshold", c.contact_threshold);
  if (j.contains("schedule")) from_json_strict(j.at("schedule"), c.schedule);
  require(c.width >= 1 && c.latent_dim >= 1 && c.codebook_size >= 1 && c.res_blocks >= 0 && c.reset_window >= 1,
          ErrorCode::ConfigSchema, "invalid vq sizes");
}

void from_json_strict(const nlohmann::ordered_json& j, TransformerConfig& c) {
  check_keys(j, {"layers", "heads", "dim", "ffn_mult", "cond_width", "cond_drop", "p_r", "mode", "schedule"},
             "transformer");
  read(j, "layers", c.layers);
  read(j, "heads", c.heads);
  read(j, "dim", c.dim);
  read(j, "ffn_mult", c.ffn_mult);
  read(j, "cond_width", c.cond_width);
  read(j, "cond_drop", c.cond_drop);
  read(j, "p_r", c.p_r);
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("schedule")) from_json_strict(j.at("schedule"), c.schedule);
  require(c.heads >= 1 && c.dim % c.heads == 0, ErrorCode::ConfigSchema, "dim must be divisible by heads");
  require(c.dim % 4 == 0, ErrorCode::ConfigSchema, "dim must be divisible by 4 for the 2D positional encoding");
  require(c.cond_drop >= 0.0 && c.cond_drop <= 1.0 && c.p_r >= 0.0 && c.p_r <= 1.0, ErrorCode::ConfigSchema,
          "probabilities must lie in [0, 1]");
}

void from_json_strict(const nlohmann::ordered_json& j, GenerationConfig& c) {
  check_keys(j, {"iterations", "react_iterations", "alternative_iterations", "cfg_scale", "temperature", "frames"},
             "generation");
  read(j, "iterations", c.iterations);
  read(j, "react_iterations", c.react_iterations);
  read(j, "alternative_iterations", c.alternative_iterations);
  read(j, "cfg_scale", c.cfg_scale);
  read(j, "temperature", c.temperature);
  read(j, "frames", c.frames);
  require(c.iterations >= 1 && c.react_iterations >= 1 && c.alternative_iterations >= 1 && c.temperature >= 0.0,
          ErrorCode::ConfigSchema, "invalid generation values");
}

void from_json_strict(const nlohmann::ordered_json& j, EvaluationConfig& c) {
  check_keys(j,
             {"feature_dim", "hidden", "steps", "batch_size", "learning_rate", "temperature", "pool_size",
              "diversity_pairs"},
             "evaluation");
  read(j, "feature_dim", c.feature_dim);
  read(j, "hidden", c.hidden);
  read(j, "steps", c.steps);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "temperature", c.temperature);
  read(j, "pool_size", c.pool_size);
  read(j, "diversity_pairs", c.diversity_pairs);
}

void from_json_strict(const nlohmann::ordered_json& j, motion::SynthSpec& c) {
  check_keys(j, {"classes", "frames", "fps", "texts_per_sample"}, "data");
  if (j.contains("classes")) {
    const auto& classes = j.at("classes");
    require(classes.is_object(), ErrorCode::ConfigSchema, "data.classes must map class names to counts");
    c.classes.clear();
    for (const auto& item : classes.items()) c.classes.push_back({item.key(), item.value().get<int>()});
  }
  read(j, "frames", c.frames);
  read(j, "fps", c.fps);
  read(j, "texts_per_sample", c.texts_per_sample);
}

void from_json_strict(const nlohmann::ordered_json& j, RunConfig& c) {
  check_keys(j, {"seed", "text_backend", "text_table", "data", "vq", "transformer", "generation", "evaluation"},
             "config");
  read(j, "seed", c.seed);
  read(j, "text_backend", c.text_backend);
  read(j, "text_table", c.text_table);
  require(c.text_backend == "hash" || c.text_backend == "external", ErrorCode::ConfigSchema,
          "text_backend must be 'hash' or 'external'");
  if (j.contains("data")) from_json_strict(j.at("data"), c.data);
  if (j.contains("vq")) from_json_strict(j.at("vq"), c.vq);
  if (j.contains("transformer")) from_json_strict(j.at("transformer"), c.transformer);
  if (j.contains("generation")) from_json_strict(j.at("generation"), c.generation);
  if (j.contains("evaluation")) from_json_strict(j.at("evaluation"), c.evaluation);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream file(path);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open config " + path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigSchema, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  from_json_strict(j, c);
  return c;
}

}  // namespace duet
