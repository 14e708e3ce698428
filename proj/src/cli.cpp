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

#include "duet/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include "duet/anim.hpp"
#include "duet/checkpoint.hpp"
#include "duet/config.hpp"
#include "duet/error.hpp"
#include "duet/extractor.hpp"
#include "duet/generation.hpp"
#include "duet/motion_io.hpp"
#include "duet/pipeline.hpp"
#include "duet/synth.hpp"

namespace duet::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Append-only JSON-lines log under the output directory.
class RunLog {
 public:
  explicit RunLog(const fs::path& path) : stream_(path) {
    require(static_cast<bool>(stream_), ErrorCode::Io, "cannot write log " + path.string());
  }
  void write(json entry) { stream_ << entry.dump() << '\n' << std::flush; }

 private:
  std::ofstream stream_;
};

struct Context {
  RunConfig config;
  fs::path out;
  std::unique_ptr<RunLog> log;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary);
  require(static_cast<bool>(stream), ErrorCode::Io, "cannot write " + path.string());
  stream << text;
}

Context open_context(const Common& common, const std::string& command, json args) {
  Context ctx;
  if (!common.config_path.empty()) ctx.config = load_run_config(common.config_path);
  if (common.seed) ctx.config.seed = *common.seed;
  require(!common.out.empty(), ErrorCode::InvalidArgument, "--out is required");
  ctx.out = common.out;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory " + common.out);
  json echo;
  echo["command"] = command;
  echo["arguments"] = std::move(args);
  echo["config"] = to_json(ctx.config);
  write_text(ctx.out / "config.json", echo.dump(2) + "\n");
  ctx.log = std::make_unique<RunLog>(ctx.out / "log.jsonl");
  ctx.log->write({{"event", "start"}, {"command", command}, {"seed", ctx.config.seed}});
  return ctx;
}

std::function<void(int, int, double)> step_logger(RunLog& log, const std::string& phase) {
  return [&log, phase](int step, int total, double loss) {
    if (step % 50 == 0 || step + 1 == total) {
      log.write({{"event", "step"}, {"phase", phase}, {"step", step}, {"total", total}, {"loss", loss}});
    }
  };
}

vq::Tokenizer load_tokenizer(const std::string& path) {
  return vq::Tokenizer::from_checkpoint(load_checkpoint(path, "tokenizer"));
}

interm::Transformer load_transformer(const std::string& path, const vq::Tokenizer& tokenizer) {
  auto transformer = interm::Transformer::from_checkpoint(load_checkpoint(path, "transformer"));
  transformer.check_pairing(tokenizer);
  return transformer;
}

gen::DecodeOptions decode_options(const GenerationConfig& g, int iterations, std::uint64_t seed) {
  return {iterations, g.cfg_scale, g.temperature, seed};
}

void finish(Context& ctx, json summary) {
  summary["event"] = "done";
  ctx.log->write(std::move(summary));
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Two-person motion tokenizer and masked transformer"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run configuration");
    sub->add_option("--seed", common.seed, "Seed override");
    sub->add_option("--out", common.out, "Output directory")->required();
  };

  auto* synth = app.add_subcommand("synth-data", "Write a synthetic interaction dataset");
  add_common(synth);

  std::string data_dir;
  auto* train_vq = app.add_subcommand("train-vq", "Train the motion tokenizer");
  add_common(train_vq);
  train_vq->add_option("--data", data_dir, "Dataset directory")->required();

  std::string tokenizer_path;
  auto* train_tf = app.add_subcommand("train-transformer", "Train the masked transformer");
  add_common(train_tf);
  train_tf->add_option("--data", data_dir, "Dataset directory")->required();
  train_tf->add_option("--tokenizer", tokenizer_path, "Tokenizer checkpoint")->required();

  std::string transformer_path;
  std::vector<std::string> texts;
  std::optional<int> frames;
  std::optional<int> iterations;
  std::optional<double> cfg_scale;
  std::optional<double> temperature;
  int count = 1;
  auto* generate = app.add_subcommand("generate", "Generate two-person interactions from text");
  add_common(generate);
  generate->add_option("--tokenizer", tokenizer_path)->required();
  generate->add_option("--transformer", transformer_path)->required();
  generate->add_option("--text", texts, "Prompt; repeat for several")->required();
  generate->add_option("--frames", frames);
  generate->add_option("--iterations", iterations);
  generate->add_option("--cfg-scale", cfg_scale);
  generate->add_option("--temperature", temperature);
  generate->add_option("--count", count, "Samples per prompt")->check(CLI::PositiveNumber);

  std::string reference_path;
  auto* react = app.add_subcommand("react", "Generate a reaction to a reference motion");
  add_common(react);
  react->add_option("--tokenizer", tokenizer_path)->required();
  react->add_option("--transformer", transformer_path)->required();
  react->add_option("--reference", reference_path, "Reference .imk1 motion")->required();
  react->add_option("--text", texts, "Optional prompt")->expected(0, 1);
  react->add_option("--iterations", iterations);
  react->add_option("--cfg-scale", cfg_scale);
  react->add_option("--temperature", temperature);

  std::string generated_dir;
  std::string extractor_path;
  std::string extractor_data;
  auto* evaluate = app.add_subcommand("evaluate", "Score generated interactions against reference data");
  add_common(evaluate);
  evaluate->add_option("--generated", generated_dir, "Generated dataset directory")->required();
  evaluate->add_option("--reference", reference_path, "Reference dataset directory")->required();
  evaluate->add_option("--extractor", extractor_path, "Feature extractor checkpoint");
  evaluate->add_option("--extractor-data", extractor_data, "Dataset to train the extractor on when none is given");

  std::string motion_a;
  std::string motion_b;
  std::string format = "html";
  auto* export_cmd = app.add_subcommand("export-anim", "Export a motion pair as csv or html");
  add_common(export_cmd);
  export_cmd->add_option("--a", motion_a, "Person a .imk1")->required();
  export_cmd->add_option("--b", motion_b, "Person b .imk1")->required();
  export_cmd->add_option("--format", format, "csv or html");

  std::vector<std::string> argv_tail(args.rbegin(), args.rend());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCode::InvalidArgument);
  }

  try {
    torch::set_num_threads(1);
    json echo_args = json::object();
    for (const auto* opt : app.get_subcommands().front()->get_options()) {
      if (opt->count() > 0 && opt->get_name() != "--help") {
        const auto results = opt->results();
        echo_args[opt->get_name()] = results.size() == 1 ? json(results.front()) : json(results);
      }
    }
    if (synth->parsed()) {
      auto ctx = open_context(common, "synth-data", echo_args);
      const auto samples = motion::generate_synthetic_interactions(ctx.config.data, ctx.config.seed);
      motion::write_dataset(samples, ctx.out);
      finish(ctx, {{"samples", samples.size()}});
    } else if (train_vq->parsed()) {
      auto ctx = open_context(common, "train-vq", echo_args);
      const auto samples = motion::read_dataset(data_dir);
      vq::Tokenizer tokenizer(ctx.config.vq, ctx.config.seed);
      const auto log = vq::train_vqvae(tokenizer, individual_motions(samples), ctx.config.seed,
                                       step_logger(*ctx.log, "vq"));
      save_checkpoint(tokenizer.to_checkpoint(), ctx.out / "tokenizer.dck");
      write_text(ctx.out / "train_log.json",
                 json{{"epoch_loss", log.epoch_loss}, {"step_loss", log.step_loss}, {"resets", log.resets}}.dump() +
                     "\n");
      finish(ctx, {{"steps", log.step_loss.size()}, {"fingerprint", tokenizer.fingerprint()}});
    } else if (train_tf->parsed()) {
      auto ctx = open_context(common, "train-transformer", echo_args);
      const auto tokenizer = load_tokenizer(tokenizer_path);
      const auto samples = motion::read_dataset(data_dir);
      const auto encoder = make_text_encoder(ctx.config);
      interm::TransformerTrainLog log;
      const auto transformer = fit_transformer(tokenizer, samples, *encoder, ctx.config.transformer, ctx.config.seed,
                                               &log, step_logger(*ctx.log, "transformer"));
      save_checkpoint(transformer.to_checkpoint(), ctx.out / "transformer.dck");
      write_text(ctx.out / "train_log.json",
                 json{{"epoch_loss", log.epoch_loss}, {"step_loss", log.step_loss}}.dump() + "\n");
      finish(ctx, {{"steps", log.step_loss.size()}});
    } else if (generate->parsed()) {
      auto ctx = open_context(common, "generate", echo_args);
      const auto tokenizer = load_tokenizer(tokenizer_path);
      auto transformer = load_transformer(transformer_path, tokenizer);
      auto g = ctx.config.generation;
      if (frames) g.frames = *frames;
      if (cfg_scale) g.cfg_scale = *cfg_scale;
      if (temperature) g.temperature = *temperature;
      const bool alternative = transformer.model->config().mode == ModelMode::Alternative;
      const int iters = iterations.value_or(alternative ? g.alternative_iterations : g.iterations);
      const auto encoder = make_text_encoder(ctx.config);
      std::vector<motion::InteractionSample> out;
      for (std::size_t t = 0; t < texts.size(); ++t) {
        const auto embedding = encoder->encode(texts[t]);
        for (int c = 0; c < count; ++c) {
          const std::uint64_t seed = ctx.config.seed + out.size();
          const auto options = decode_options(g, iters, seed);
          auto pair = alternative ? gen::alternative_generate(transformer, tokenizer, embedding, g.frames,
                                                              ctx.config.data.fps, options)
                                  : gen::generate_interaction(transformer, tokenizer, embedding, g.frames,
                                                              ctx.config.data.fps, options);
          char id[32];
          std::snprintf(id, sizeof id, "g%05zu", out.size());
          out.push_back({id, std::move(pair.first), std::move(pair.second), {texts[t]}, "generated"});
          ctx.log->write({{"event", "sample"}, {"id", id}, {"text", texts[t]}, {"seed", seed}});
        }
      }
      motion::write_dataset(out, ctx.out);
      finish(ctx, {{"samples", out.size()}, {"mode", to_string(transformer.model->config().mode)}});
    } else if (react->parsed()) {
      auto ctx = open_context(common, "react", echo_args);
      const auto tokenizer = load_tokenizer(tokenizer_path);
      auto transformer = load_transformer(transformer_path, tokenizer);
      auto g = ctx.config.generation;
      if (cfg_scale) g.cfg_scale = *cfg_scale;
      if (temperature) g.temperature = *temperature;
      const auto reference = motion::read_motion(reference_path, tokenizer.skeleton());
      const auto encoder = make_text_encoder(ctx.config);
      const text::TextEmbedding embedding = texts.empty() ? text::TextEmbedding{{}, true} : encoder->encode(texts[0]);
      const auto options = decode_options(g, iterations.value_or(g.react_iterations), ctx.config.seed);
      const auto reaction = gen::generate_reaction(transformer, tokenizer, reference, embedding, options);
      motion::write_motion(reaction, ctx.out / "reaction.imk1");
      finish(ctx, {{"conditioned", !texts.empty()}});
    } else if (evaluate->parsed()) {
      auto ctx = open_context(common, "evaluate", echo_args);
      const auto generated = motion::read_dataset(generated_dir);
      const auto reference = motion::read_dataset(reference_path);
      const auto encoder = make_text_encoder(ctx.config);
      std::optional<eval::FeatureExtractor> extractor;
      if (!extractor_path.empty()) {
        extractor = eval::FeatureExtractor::from_checkpoint(load_checkpoint(extractor_path, "extractor"));
      } else {
        const auto train = extractor_data.empty() ? reference : motion::read_dataset(extractor_data);
        extractor = eval::train_feature_extractor(train, *encoder, ctx.config.evaluation, ctx.config.seed);
        save_checkpoint(extractor->to_checkpoint(), ctx.out / "extractor.dck");
      }
      const auto report = eval::evaluation_report(*extractor, *encoder, generated, reference, ctx.config.seed);
      write_text(ctx.out / "report.json", report.dump(2) + "\n");
      finish(ctx, {{"fid", report["fid"]}});
    } else if (export_cmd->parsed()) {
      auto ctx = open_context(common, "export-anim", echo_args);
      const auto fmt = anim::format_from_string(format);
      const auto a = motion::read_motion(motion_a);
      const auto b = motion::read_motion(motion_b);
      const fs::path path = ctx.out / (fmt == anim::Format::Csv ? "anim.csv" : "anim.html");
      anim::export_anim(a, b, path, fmt);
      finish(ctx, {{"file", path.filename().string()}});
    }
    return 0;
  } catch (const Error& e) {
    const json report{{"error", std::string(to_string(e.code()))},
                      {"code", static_cast<int>(e.code())},
                      {"message", e.what()}};
    std::cerr << report.dump() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"code", 1}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace duet::cli
