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

// Desk-scale acceptance run: one PASS/FAIL line per criterion, details in
// <work>/acceptance.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "duet/checkpoint.hpp"
#include "duet/cli.hpp"
#include "duet/codebook.hpp"
#include "duet/config.hpp"
#include "duet/error.hpp"
#include "duet/extractor.hpp"
#include "duet/generation.hpp"
#include "duet/mask.hpp"
#include "duet/metrics.hpp"
#include "duet/motion_io.hpp"
#include "duet/pipeline.hpp"
#include "duet/synth.hpp"
#include "duet/text.hpp"
#include "duet/transformer.hpp"
#include "duet/vq.hpp"
#include "support/checks.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace duet {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  ordered_json details = ordered_json::object();
};

struct Context {
  RunConfig config;
  fs::path work;
  std::string cli_binary;
  std::vector<motion::InteractionSample> train;
  std::vector<motion::InteractionSample> held_out;
  std::unique_ptr<text::TextEncoder> encoder;
  std::optional<vq::Tokenizer> tokenizer;
  std::optional<interm::Transformer> transformer;
  std::optional<eval::FeatureExtractor> extractor;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// 1. Schedule exactness.

Outcome schedule_exactness(Context&) {
  Outcome out;
  double worst_gamma = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double tau = i / 999.0;
    worst_gamma = std::max(worst_gamma, std::abs(mask::cosine_gamma(tau) - std::cos(M_PI * tau / 2.0)));
  }
  const auto ceiling = [](int pool, double tau) {
    return static_cast<int>(std::ceil(pool * std::cos(M_PI * tau / 2.0) - 1e-9));
  };
  int checked = 0;
  int mismatched = 0;
  const auto expect = [&](int got, int want) {
    ++checked;
    mismatched += got == want ? 0 : 1;
  };

  // Training: a short run of a tiny model, every first-round and
  // step-unroll draw.
  TransformerConfig tc;
  tc.layers = 1;
  tc.heads = 2;
  tc.dim = 16;
  tc.ffn_mult = 2;
  tc.cond_width = 16;
  tc.schedule.iterations = 4;
  tc.schedule.batch_size = 16;
  const text::HashTextEncoder enc(16);
  const interm::ModelShape shape{16, 4, 2};
  const auto layout = mask::TokenLayout{4, 2};
  Rng rng(1);
  std::vector<interm::TrainingPair> pairs;
  for (int i = 0; i < 16; ++i) {
    interm::TrainingPair p{{4, 2, {}}, {4, 2, {}}, {enc.encode("sample " + std::to_string(i))}};
    for (int c = 0; c < 8; ++c) {
      p.a.indices.push_back(static_cast<int>(rng.below(16)));
      p.b.indices.push_back(static_cast<int>(rng.below(16)));
    }
    pairs.push_back(p);
  }
  for (const auto mode : {ModelMode::Collaborative, ModelMode::Alternative}) {
    tc.mode = mode;
    auto t = interm::make_transformer(tc, shape, 2);
    const auto log = interm::train_transformer(t, pairs, 3);
    for (const auto& m : log.masks) {
      expect(m.masked, std::max(1, ceiling(m.pool, m.tau)));
      expect(m.remasked, ceiling(m.masked, m.tau_next));
    }
  }

  // Inference: interaction (P = 2nj, I = 20), reaction (P = nj, I = 12) and
  // alternative (P = nj per person, I = 10).
  tc.mode = ModelMode::Collaborative;
  auto collab = interm::make_transformer(tc, shape, 4);
  collab.model->eval();
  const auto cond = collab.model->null_embedding().detach();
  interm::TokenSequence init{layout, std::vector<int>(static_cast<std::size_t>(layout.length()), 0)};
  init.tokens[static_cast<std::size_t>(layout.sep())] = interm::sep_token(16);
  gen::DecodeTrace trace;
  gen::iterative_decode(collab.model, cond, init, layout.token_positions(), {20, 2.0, 1.0, 5}, &trace);
  for (int i = 1; i <= 20; ++i) expect(trace.masked_after[static_cast<std::size_t>(i - 1)], ceiling(16, i / 20.0));
  trace = {};
  gen::iterative_decode(collab.model, cond, init, layout.person_positions(mask::Person::B), {12, 2.0, 1.0, 6}, &trace);
  for (int i = 1; i <= 12; ++i) expect(trace.masked_after[static_cast<std::size_t>(i - 1)], ceiling(8, i / 12.0));
  tc.mode = ModelMode::Alternative;
  auto alt = interm::make_transformer(tc, shape, 7);
  alt.model->eval();
  trace = {};
  gen::alternative_decode(alt.model, cond, layout, {10, 2.0, 1.0, 8}, &trace);
  for (std::size_t s = 0; s < trace.masked_after.size(); ++s) {
    expect(trace.masked_after[s], ceiling(8, static_cast<double>(s / 2 + 1) / 10.0));
  }
  // The worked example: P = 160, I = 20.
  expect(mask::mask_count(160, 10 / 20.0), 114);
  expect(mask::mask_count(160, 1.0), 0);

  out.pass = worst_gamma <= 1e-12 && mismatched == 0;
  out.summary = fmt("gamma max err %.1e; ", worst_gamma) + std::to_string(checked) + " mask counts, " +
                std::to_string(mismatched) + " mismatched";
  out.details = {{"gamma_max_error", worst_gamma}, {"counts_checked", checked}, {"mismatched", mismatched}};
  return out;
}

// 2. Quantization oracle.

Outcome quantization_oracle(Context&) {
  Rng rng(11);
  const int dim = 16;
  vq::Codebook cb(64, dim);
  for (int k = 0; k < 64; ++k) {
    std::vector<double> e(dim);
    for (auto& v : e) v = rng.normal();
    if (k % 16 == 15) e = std::vector<double>(cb.entry(k - 1).begin(), cb.entry(k - 1).end());  // exact duplicates
    cb.set_entry(k, e);
  }
  std::vector<float> cells(1000 * dim);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<float>(rng.normal());
  for (int i = 0; i < 20; ++i) {
    const int k = 14 + 16 * (i % 4);
    for (int c = 0; c < dim; ++c) cells[static_cast<std::size_t>(i * dim + c)] = static_cast<float>(cb.entry(k)[c]);
  }
  auto latent = torch::from_blob(cells.data(), {1000, dim}, torch::kFloat).clone();
  const auto q = vq::quantize(latent, cb, 0.02);
  int mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 64; ++k) {
      double d = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double diff = static_cast<double>(cells[static_cast<std::size_t>(i * dim + c)]) - cb.entry(k)[c];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    mismatched += q.indices[i].item<int64_t>() == best ? 0 : 1;
  }
  Outcome out;
  out.pass = mismatched == 0;
  out.summary = "1000 cells vs 64 codes (with duplicate entries), " + std::to_string(mismatched) + " mismatched";
  out.details = {{"cells", 1000}, {"mismatched", mismatched}};
  return out;
}

// 3. Gradient checks.

Outcome gradient_checks(Context&) {
  const auto vq_result = testing::vq_gradient_check(200, 21);
  const auto tf_result = testing::transformer_gradient_check(200, 22);
  Outcome out;
  out.pass = vq_result.pass && tf_result.pass;
  out.summary = fmt("straight-through VQ max rel err %.2e over ", vq_result.worst) +
                std::to_string(vq_result.samples) + fmt(" entries; transformer %.2e over ", tf_result.worst) +
                std::to_string(tf_result.samples) + " parameters";
  out.details = {{"vq", {{"samples", vq_result.samples}, {"max_relative_error", vq_result.worst}, {"worst", vq_result.detail}}},
                 {"transformer", {{"samples", tf_result.samples}, {"max_relative_error", tf_result.worst}, {"worst", tf_result.detail}}}};
  return out;
}

// 4. Architectural invariants.

Outcome architectural_invariants(Context&) {
  const auto identity = testing::identity_at_init(31);
  const auto swap = testing::person_swap_equivariance(32);
  const auto st = testing::spatio_temporal_locality(20, 33);
  const auto cross = testing::cross_attention_locality(20, 34);
  Outcome out;
  out.pass = identity.pass && swap.pass && st.pass && cross.pass;
  out.summary = std::string("identity ") + (identity.pass ? "bit-exact" : "broken") +
                fmt("; person swap max diff %.1e; ", swap.worst) + "spatio-temporal " +
                std::to_string(st.samples) + (st.pass ? " ok" : " FAIL") + ", cross " +
                std::to_string(cross.samples) + (cross.pass ? " ok" : " FAIL");
  out.details = {{"identity_at_init", identity.pass},
                 {"swap_max_abs_diff", swap.worst},
                 {"spatio_temporal", {{"trials", st.samples}, {"pass", st.pass}, {"max_unlinked_change", st.worst}}},
                 {"cross", {{"trials", cross.samples}, {"pass", cross.pass}, {"max_unlinked_change", cross.worst}}}};
  return out;
}

// 5. Loss contract.

Outcome loss_contract(Context&) {
  torch::manual_seed(41);
  const auto logits = torch::randn({64, 32});
  const auto targets = torch::randint(0, 32, {64});
  std::vector<int> rows;
  for (int r = 0; r < 64; r += 3) rows.push_back(r);
  const auto base = interm::masked_ce_loss(logits, targets, rows);
  bool invariant = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto other = torch::randn({64, 32}) * 5.0;
    for (int r : rows) other[r] = logits[r];
    invariant = invariant && torch::equal(interm::masked_ce_loss(other, targets, rows), base);
  }
  const auto uniform = interm::masked_ce_loss(torch::zeros({64, 1024}, torch::kDouble), torch::randint(0, 1024, {64}), rows);
  const double err = std::abs(uniform.item<double>() - std::log(1024.0));
  Outcome out;
  out.pass = invariant && err <= 1e-9;
  out.summary = std::string("unmasked-logit invariance ") + (invariant ? "bit-identical" : "BROKEN") +
                fmt("; uniform loss - ln|C| = %.1e", err);
  out.details = {{"invariant", invariant}, {"uniform_error", err}};
  return out;
}

// 6. VQ desk-scale reconstruction.

double mean_mpjpe(const vq::Tokenizer& tok, const std::vector<motion::MotionSequence>& motions) {
  double total = 0.0;
  for (const auto& m : motions) total += eval::mpjpe(m, tok.reconstruct(m));
  return total / static_cast<double>(motions.size());
}

Outcome vq_reconstruction(Context& ctx) {
  const auto motions = individual_motions(ctx.train);
  const double scale = motion::positional_scale(motions);
  const auto start = std::chrono::steady_clock::now();
  vq::Tokenizer tok(ctx.config.vq, ctx.config.seed);
  const auto log = vq::train_vqvae(tok, motions, ctx.config.seed);
  const double train_seconds = seconds_since(start);
  const double train_err = mean_mpjpe(tok, motions);
  const double held_err = mean_mpjpe(tok, individual_motions(ctx.held_out));
  save_checkpoint(tok.to_checkpoint(), ctx.work / "tokenizer.dck");

  // Single-sample overfit with the same architecture.
  auto overfit_config = ctx.config.vq;
  overfit_config.schedule.iterations = 500;
  vq::Tokenizer single(overfit_config, ctx.config.seed);
  const std::vector<motion::MotionSequence> one = {motions.front()};
  vq::train_vqvae(single, one, ctx.config.seed);
  const double single_scale = motion::positional_scale(one);
  const double single_err = eval::mpjpe(one.front(), single.reconstruct(one.front()));

  const double ratio = train_err / scale;
  const double single_ratio = single_err / single_scale;
  ctx.tokenizer = std::move(tok);
  Outcome out;
  out.pass = ratio < 0.10 && single_ratio < 0.02 && train_seconds <= 20 * 60;
  out.summary = fmt("MPJPE/scale %.4f (held-out %.4f)", ratio, held_err / scale) +
                fmt(" in %.0f s; single-sample overfit %.4f", train_seconds, single_ratio);
  out.details = {{"motions", motions.size()},
                 {"positional_scale", scale},
                 {"train_mpjpe", train_err},
                 {"held_out_mpjpe", held_err},
                 {"ratio", ratio},
                 {"train_seconds", train_seconds},
                 {"steps", log.step_loss.size()},
                 {"resets", log.resets},
                 {"final_loss", log.step_loss.back()},
                 {"single_sample_ratio", single_ratio}};
  return out;
}

// 7. End-to-end generation.

void ensure_tokenizer(Context& ctx) {
  if (ctx.tokenizer) return;
  const auto path = ctx.work / "tokenizer.dck";
  if (fs::exists(path)) {
    ctx.tokenizer = vq::Tokenizer::from_checkpoint(load_checkpoint(path, "tokenizer"));
    return;
  }
  ctx.tokenizer = vq::Tokenizer(ctx.config.vq, ctx.config.seed);
  vq::train_vqvae(*ctx.tokenizer, individual_motions(ctx.train), ctx.config.seed);
  save_checkpoint(ctx.tokenizer->to_checkpoint(), path);
}

// Motion features next to the text features of each sample's first text.
eval::Features joint_features(const eval::FeatureExtractor& ex, const text::TextEncoder& enc,
                              const std::vector<motion::InteractionSample>& samples) {
  std::vector<text::TextEmbedding> texts;
  for (const auto& s : samples) texts.push_back(enc.encode(s.texts.front()));
  const auto m = ex.motion_features(samples);
  const auto t = ex.text_features(texts);
  eval::Features out(m.rows(), m.cols() + t.cols());
  out << m, t;
  return out;
}

Outcome end_to_end(Context& ctx) {
  ensure_tokenizer(ctx);
  const auto start = std::chrono::steady_clock::now();
  interm::TransformerTrainLog log;
  ctx.transformer = fit_transformer(*ctx.tokenizer, ctx.train, *ctx.encoder, ctx.config.transformer, ctx.config.seed, &log);
  const double train_seconds = seconds_since(start);
  save_checkpoint(ctx.transformer->to_checkpoint(), ctx.work / "transformer.dck");

  ctx.extractor = eval::train_feature_extractor(ctx.train, *ctx.encoder, ctx.config.evaluation, ctx.config.seed);
  const auto& ex = *ctx.extractor;

  // One generation per held-out sample, prompted with its first text.
  const auto& g = ctx.config.generation;
  std::vector<motion::InteractionSample> generated;
  const auto gen_start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < ctx.held_out.size(); ++i) {
    const auto& ref = ctx.held_out[i];
    const gen::DecodeOptions opts{g.iterations, g.cfg_scale, g.temperature, ctx.config.seed + 1000 + i};
    auto [a, b] = gen::generate_interaction(*ctx.transformer, *ctx.tokenizer, ctx.encoder->encode(ref.texts.front()),
                                            g.frames, ctx.config.data.fps, opts);
    generated.push_back({"g" + ref.id, std::move(a), std::move(b), {ref.texts.front()}, ref.label});
  }
  const double gen_seconds = seconds_since(gen_start);

  // R-precision against a 3-way pool: the prompt plus one text of each
  // other class, drawn from the held-out set.
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ctx.held_out.size(); ++i) by_class[ctx.held_out[i].label].push_back(i);
  Rng rng(ctx.config.seed + 7);
  const auto gen_motion = ex.motion_features(generated);
  std::vector<eval::Features> pools;
  for (const auto& s : generated) {
    std::vector<text::TextEmbedding> pool = {ctx.encoder->encode(s.texts.front())};
    for (const auto& [label, ids] : by_class) {
      if (label == s.label) continue;
      const auto& pick = ctx.held_out[ids[rng.below(ids.size())]];
      pool.push_back(ctx.encoder->encode(pick.texts.front()));
    }
    pools.push_back(ex.text_features(pool));
  }
  const auto top = eval::r_precision_pools(gen_motion, pools);

  // FID on joint (motion, text) features; the baseline pairs the generated
  // motions with permuted prompts.
  auto shuffled = generated;
  const auto order = rng.sample_without_replacement(static_cast<int>(generated.size()), static_cast<int>(generated.size()));
  for (std::size_t i = 0; i < generated.size(); ++i) shuffled[i].texts = generated[static_cast<std::size_t>(order[i])].texts;
  const auto held = joint_features(ex, *ctx.encoder, ctx.held_out);
  const double fid_gen = eval::fid(held, joint_features(ex, *ctx.encoder, generated));
  const double fid_shuffled = eval::fid(held, joint_features(ex, *ctx.encoder, shuffled));
  const double fid_real = eval::fid(held, joint_features(ex, *ctx.encoder, ctx.train));

  Outcome out;
  out.pass = top.top1 > 0.5 && fid_gen < fid_shuffled && train_seconds <= 60 * 60;
  out.summary = fmt("3-way top-1 %.3f; FID gen %.3f vs label-shuffled %.3f", top.top1, fid_gen, fid_shuffled) +
                fmt("; transformer trained in %.0f s", train_seconds);
  out.details = {{"generated", generated.size()},
                 {"top1_3way", top.top1},
                 {"top2_3way", top.top2},
                 {"fid_generated", fid_gen},
                 {"fid_label_shuffled", fid_shuffled},
                 {"fid_train_vs_held_out", fid_real},
                 {"train_seconds", train_seconds},
                 {"generation_seconds", gen_seconds},
                 {"steps", log.step_loss.size()},
                 {"final_epoch_loss", log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()}};
  return out;
}

// 8. Reaction generation.

void ensure_transformer(Context& ctx) {
  ensure_tokenizer(ctx);
  if (ctx.transformer) return;
  const auto path = ctx.work / "transformer.dck";
  if (fs::exists(path)) {
    ctx.transformer = interm::Transformer::from_checkpoint(load_checkpoint(path, "transformer"));
    return;
  }
  ctx.transformer = fit_transformer(*ctx.tokenizer, ctx.train, *ctx.encoder, ctx.config.transformer, ctx.config.seed);
  save_checkpoint(ctx.transformer->to_checkpoint(), path);
}

// Mean mirrored-partner error over the held-out mirror_wave references at
// one guidance scale. Sets `frozen` false if any reference token moves.
double reaction_error(Context& ctx, double cfg_scale, bool& frozen, int& count) {
  const auto& tok = *ctx.tokenizer;
  const int iterations = ctx.config.generation.react_iterations;
  double total = 0.0;
  count = 0;
  for (std::size_t i = 0; i < ctx.held_out.size(); ++i) {
    const auto& s = ctx.held_out[i];
    if (s.label != "mirror_wave") continue;
    const auto ref_tokens = tok.tokenize(s.motion_a);
    gen::DecodeTrace trace;
    const gen::DecodeOptions opts{iterations, cfg_scale, ctx.config.generation.temperature, ctx.config.seed + 2000 + i};
    const auto b = gen::generate_reaction(*ctx.transformer, tok, s.motion_a, ctx.encoder->encode(s.texts.front()), opts, &trace);
    frozen = frozen && static_cast<int>(trace.tokens_after.size()) == iterations;
    for (const auto& tokens : trace.tokens_after) {
      frozen = frozen && std::equal(ref_tokens.indices.begin(), ref_tokens.indices.end(), tokens.begin());
    }
    total += eval::mpjpe(b, motion::mirror_x(s.motion_a));
    ++count;
  }
  return count > 0 ? total / count : std::numeric_limits<double>::infinity();
}

Outcome reaction(Context& ctx) {
  ensure_transformer(ctx);
  const auto& tok = *ctx.tokenizer;
  const double scale = ctx.config.generation.cfg_scale;
  bool frozen = true;
  int count = 0;
  const double react_err = reaction_error(ctx, scale, frozen, count);
  double tok_err = 0.0;
  for (const auto& s : ctx.held_out) {
    if (s.label == "mirror_wave") tok_err += eval::mpjpe(s.motion_b, tok.reconstruct(s.motion_b));
  }
  tok_err /= std::max(count, 1);

  // Diagnostic only: the same references without guidance.
  bool unguided_frozen = true;
  int unguided_count = 0;
  const double unguided_err = scale == 0.0 ? react_err : reaction_error(ctx, 0.0, unguided_frozen, unguided_count);

  Outcome out;
  out.pass = count > 0 && frozen && react_err < 2.0 * tok_err;
  out.summary = std::string("reference tokens ") + (frozen ? "frozen" : "CHANGED") + " over " +
                std::to_string(ctx.config.generation.react_iterations) + " iterations; " +
                fmt("mirrored error %.4f vs 2 x tokenizer error %.4f at guidance %.1f", react_err, 2.0 * tok_err, scale) +
                fmt(" (unguided %.4f); ", unguided_err) + std::to_string(count) + " held-out mirror_wave references";
  out.details = {{"references", count},
                 {"frozen", frozen},
                 {"cfg_scale", scale},
                 {"reaction_mpjpe", react_err},
                 {"tokenizer_mpjpe", tok_err},
                 {"diagnostic_unguided_mpjpe", unguided_err}};
  return out;
}

// 9. CLI determinism.

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    out[fs::relative(entry.path(), dir).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

int run_cli(const Context& ctx, std::vector<std::string> args) {
  if (ctx.cli_binary.empty()) return cli::run(args);
  std::string command = "\"" + ctx.cli_binary + "\"";
  for (const auto& a : args) command += " \"" + a + "\"";
  command += " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism(Context& ctx) {
  const auto root = ctx.work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  // Short-run configuration so the four commands finish quickly.
  RunConfig small;
  small.data = {{{"approach_retreat", 4}, {"mirror_wave", 4}, {"bow", 4}}, 16, 20.0f, 2};
  small.vq.skeleton = "synthetic8";
  small.vq.width = 16;
  small.vq.latent_dim = 8;
  small.vq.codebook_size = 32;
  small.vq.res_blocks = 1;
  small.vq.schedule.iterations = 8;
  small.vq.schedule.batch_size = 8;
  small.transformer.layers = 1;
  small.transformer.heads = 2;
  small.transformer.dim = 16;
  small.transformer.schedule.iterations = 4;
  small.transformer.schedule.batch_size = 8;
  small.generation.iterations = 6;
  small.generation.react_iterations = 4;
  small.generation.frames = 16;
  small.evaluation.steps = 10;
  const auto config = (root / "config.json").string();
  std::ofstream(config) << to_json(small).dump(2);

  const auto p = [&](const std::string& name) { return (root / name).string(); };
  bool setup = run_cli(ctx, {"synth-data", "--config", config, "--seed", "3", "--out", p("data")}) == 0 &&
               run_cli(ctx, {"train-vq", "--config", config, "--seed", "3", "--data", p("data"), "--out", p("vq")}) == 0 &&
               run_cli(ctx, {"train-transformer", "--config", config, "--seed", "3", "--data", p("data"), "--tokenizer",
                             p("vq/tokenizer.dck"), "--out", p("tf")}) == 0;
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"generate", {"generate", "--config", config, "--seed", "5", "--tokenizer", p("vq/tokenizer.dck"), "--transformer",
                    p("tf/transformer.dck"), "--text", "two people bow to each other", "--count", "2"}},
      {"react", {"react", "--config", config, "--seed", "5", "--tokenizer", p("vq/tokenizer.dck"), "--transformer",
                 p("tf/transformer.dck"), "--reference", p("data/s00004_a.imk1"), "--text", "wave back"}},
      {"train-vq", {"train-vq", "--config", config, "--seed", "5", "--data", p("data")}},
      {"evaluate", {"evaluate", "--config", config, "--seed", "5", "--generated", p("run_generate"), "--reference",
                    p("data"), "--extractor-data", p("data")}},
  };
  ordered_json details = ordered_json::object();
  bool all = setup;
  std::string summary;
  for (const auto& [name, args] : commands) {
    bool same = false;
    int code1 = -1;
    int code2 = -1;
    if (setup) {
      // Identical invocations, output directory cleared in between.
      auto full = args;
      full.insert(full.end(), {"--out", p("run_" + name)});
      code1 = run_cli(ctx, full);
      const auto first = read_tree(root / ("run_" + name));
      fs::remove_all(root / ("run_" + name));
      code2 = run_cli(ctx, full);
      same = code1 == 0 && code2 == 0 && !first.empty() && first == read_tree(root / ("run_" + name));
    }
    details[name] = {{"exit_codes", {code1, code2}}, {"identical", same}};
    all = all && same;
    summary += (summary.empty() ? "" : ", ") + name + (same ? " identical" : " DIFFERS");
  }
  Outcome out;
  out.pass = all;
  out.summary = setup ? summary : "setup commands failed";
  out.details = details;
  return out;
}

// 10. Metric oracles.

Outcome metric_oracles(Context&) {
  Rng rng(101);
  const int m = 10000;
  eval::Features a(m, 1);
  eval::Features b(m, 1);
  for (int i = 0; i < m; ++i) {
    a(i, 0) = rng.normal();
    b(i, 0) = 1.0 + 2.0 * rng.normal();
  }
  // (mu1 - mu2)^2 + (sigma1 - sigma2)^2 = 1 + 1.
  const double closed = 2.0;
  const double fid_value = eval::fid(a, b);
  const double fid_rel = std::abs(fid_value - closed) / closed;

  const int rows = 4000;
  eval::Features g(rows, 16);
  eval::Features t(rows, 16);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < 16; ++c) {
      g(i, c) = rng.normal();
      t(i, c) = rng.normal();
    }
  }
  const double top1 = eval::r_precision(g, t, 32, rng).top1;
  const double p = 1.0 / 32.0;
  const double half_width = 2.576 * std::sqrt(p * (1.0 - p) / rows);

  motion::MotionSequence zero(8, motion::Skeleton::synthetic8(), motion::Layout::PosVelRot6d, 20.0f);
  auto shifted = zero;
  for (int f = 0; f < 8; ++f) {
    for (int j = 0; j < 8; ++j) shifted.at(f, j, 0) = 0.1f;
  }
  const double offset = eval::mpjpe(zero, shifted);

  Outcome out;
  out.pass = fid_rel < 0.05 && std::abs(top1 - p) <= half_width && offset == static_cast<double>(0.1f);
  out.summary = fmt("1-D FID %.4f vs closed form 2 (%.2f%%)", fid_value, 100.0 * fid_rel) +
                fmt("; chance top-1 %.4f (1/32 +- %.4f)", top1, half_width) +
                (offset == static_cast<double>(0.1f) ? "; offset MPJPE exact" : "; offset MPJPE inexact");
  out.details = {{"fid", fid_value}, {"fid_relative_error", fid_rel}, {"chance_top1", top1}, {"ci_half_width", half_width}, {"offset_mpjpe", offset}};
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome(Context&)> run;
};

}  // namespace
}  // namespace duet

int main(int argc, char** argv) {
  using namespace duet;
  CLI::App app{"Desk-scale acceptance run"};
  std::string config_path;
  std::string work = (fs::temp_directory_path() / "duet_acceptance").string();
  std::string cli_binary;
  std::vector<int> only;
  app.add_option("--config", config_path, "Run configuration")->required();
  app.add_option("--work", work, "Working directory for checkpoints and reports");
  app.add_option("--cli", cli_binary, "duet executable for the determinism check");
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  Context ctx;
  ctx.config = load_run_config(config_path);
  ctx.work = work;
  ctx.cli_binary = cli_binary;
  fs::create_directories(ctx.work);
  ctx.train = motion::generate_synthetic_interactions(ctx.config.data, ctx.config.seed);
  auto held_spec = ctx.config.data;
  for (auto& c : held_spec.classes) c.count = 30;
  ctx.held_out = motion::generate_synthetic_interactions(held_spec, ctx.config.seed + 1);
  ctx.encoder = make_text_encoder(ctx.config);

  const std::vector<Criterion> criteria = {
      {1, "schedule exactness", 1.0, schedule_exactness},
      {2, "quantization oracle", 5.0, quantization_oracle},
      {3, "gradient checks", 120.0, gradient_checks},
      {4, "architectural invariants", 60.0, architectural_invariants},
      {5, "loss contract", 0.0, loss_contract},
      {6, "VQ desk-scale reconstruction", 0.0, vq_reconstruction},
      {7, "end-to-end generation", 0.0, end_to_end},
      {8, "reaction generation", 0.0, reaction},
      {9, "determinism", 0.0, cli_determinism},
      {10, "metric oracles", 0.0, metric_oracles},
  };
  ordered_json report = ordered_json::array();
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run(ctx);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.summary = std::string("error: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    const bool in_budget = c.budget_seconds <= 0.0 || elapsed <= c.budget_seconds;
    const bool pass = outcome.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, outcome.summary.c_str(),
                elapsed, in_budget ? "" : ", over budget");
    std::fflush(stdout);
    report.push_back({{"criterion", c.id}, {"name", c.name}, {"pass", pass}, {"seconds", elapsed},
                      {"summary", outcome.summary}, {"details", outcome.details}});
    std::ofstream(ctx.work / "acceptance.json") << report.dump(2) << "\n";
  }
  return failures == 0 ? 0 : 1;
}
