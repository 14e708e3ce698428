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
#include <string>
#include <vector>

#include <json.hpp>

#include "duet/synth.hpp"

namespace duet {

struct ScheduleConfig {
  int epochs = 50;
  int iterations = 0;  // overrides epochs when positive
  int batch_size = 512;
  double learning_rate = 2e-4;
  double warmup_fraction = 0.25;
  std::vector<double> milestones = {0.7, 0.85};
  double decay = 0.1;

  int total_iterations(int dataset_size) const;
  // Linear warm-up from 0, then multiplicative decay at each milestone.
  double learning_rate_at(int step, int total) const;
};

struct VqConfig {
  std::string skeleton = "interhuman22";
  std::string layout = "pos_vel_rot6d";
  int width = 256;
  int latent_dim = 512;
  int codebook_size = 1024;
  int res_blocks = 2;
  double beta = 0.02;
  double lambda_vel = 100.0;
  double lambda_fc = 500.0;
  double lambda_bl = 5.0;
  double ema_decay = 0.99;
  int reset_window = 256;
  double reset_threshold = 1.0;
  double contact_threshold = 0.0;  // units/second; 0 selects 0.02 * fps
  ScheduleConfig schedule{};

  // InterX-style geometric weights.
  static VqConfig interx();
};

enum class ModelMode { Collaborative, Alternative };

struct TransformerConfig {
  int layers = 6;
  int heads = 6;
  int dim = 384;
  int ffn_mult = 4;
  int cond_width = 512;
  double cond_drop = 0.1;
  double p_r = 0.8;
  ModelMode mode = ModelMode::Collaborative;
  ScheduleConfig schedule{500, 0, 52, 2e-4, 0.0, {0.5, 0.7, 0.85}, 1.0 / 3.0};
};

struct GenerationConfig {
  int iterations = 20;
  int react_iterations = 12;
  int alternative_iterations = 10;
  double cfg_scale = 2.0;
  double temperature = 1.0;
  int frames = 64;
};

struct EvaluationConfig {
  int feature_dim = 64;
  int hidden = 128;
  int steps = 600;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double temperature = 0.1;
  int pool_size = 32;
  int diversity_pairs = 300;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string text_backend = "hash";
  std::string text_table;
  motion::SynthSpec data{{{"approach_retreat", 100}, {"mirror_wave", 100}, {"bow", 100}}, 64, 20.0f, 3};
  VqConfig vq{};
  TransformerConfig transformer{};
  GenerationConfig generation{};
  EvaluationConfig evaluation{};
};

// JSON conversion. Parsing rejects unknown keys with ErrorCode::ConfigSchema.
nlohmann::ordered_json to_json(const ScheduleConfig& c);
nlohmann::ordered_json to_json(const VqConfig& c);
nlohmann::ordered_json to_json(const TransformerConfig& c);
nlohmann::ordered_json to_json(const GenerationConfig& c);
nlohmann::ordered_json to_json(const EvaluationConfig& c);
nlohmann::ordered_json to_json(const motion::SynthSpec& c);
nlohmann::ordered_json to_json(const RunConfig& c);

void from_json_strict(const nlohmann::ordered_json& j, ScheduleConfig& c);
void from_json_strict(const nlohmann::ordered_json& j, VqConfig& c);
void from_json_strict(const nlohmann::ordered_json& j, TransformerConfig& c);
void from_json_strict(const nlohmann::ordered_json& j, GenerationConfig& c);
void from_json_strict(const nlohmann::ordered_json& j, EvaluationConfig& c);
void from_json_strict(const nlohmann::ordered_json& j, motion::SynthSpec& c);
void from_json_strict(const nlohmann::ordered_json& j, RunConfig& c);

RunConfig load_run_config(const std::string& path);

std::string to_string(ModelMode mode);
ModelMode mode_from_string(const std::string& name);

}  // namespace duet
