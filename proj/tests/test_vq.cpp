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

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "duet/checkpoint.hpp"
#include "duet/codebook.hpp"
#include "duet/error.hpp"
#include "duet/metrics.hpp"
#include "duet/rng.hpp"
#include "duet/synth.hpp"
#include "duet/vq.hpp"
#include "support/checks.hpp"

namespace duet::vq {
namespace {

Codebook random_codebook(int size, int dim, Rng& rng) {
  Codebook cb(size, dim);
  for (int k = 0; k < size; ++k) {
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (auto& v : e) v = rng.normal();
    cb.set_entry(k, e);
  }
  return cb;
}

int brute_force_nearest(const Codebook& cb, const float* cell) {
  int best = -1;
  double best_d = 0.0;
  for (int k = 0; k < cb.size(); ++k) {
    double d = 0.0;
    for (int c = 0; c < cb.dim(); ++c) d += (cell[c] - cb.entry(k)[c]) * (cell[c] - cb.entry(k)[c]);
    if (best < 0 || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

VqConfig small_config(const std::string& skeleton = "synthetic8") {
  VqConfig c;
  c.skeleton = skeleton;
  c.width = 16;
  c.latent_dim = 8;
  c.codebook_size = 32;
  c.res_blocks = 1;
  return c;
}

TEST(Quantize, ExactEntryGivesItsIndex) {
  Rng rng(1);
  const auto cb = random_codebook(16, 4, rng);
  auto latent = torch::empty({1, 1, 4});
  for (int c = 0; c < 4; ++c) latent[0][0][c] = static_cast<float>(cb.entry(5)[c]);
  const auto q = quantize(latent, cb, 0.02);
  EXPECT_EQ(q.indices.item<int64_t>(), 5);
  EXPECT_EQ(q.commitment.item<float>(), 0.0f);
}

TEST(Quantize, TwoEntryHandExample) {
  Codebook cb(2, 2);
  cb.set_entry(0, std::vector<double>{0.0, 0.0});
  cb.set_entry(1, std::vector<double>{1.0, 1.0});
  const auto latent = torch::tensor({0.4f, 0.4f, 0.6f, 0.6f}).view({2, 2});
  const auto q = quantize(latent, cb, 0.02);
  EXPECT_EQ(q.indices[0].item<int64_t>(), 0);
  EXPECT_EQ(q.indices[1].item<int64_t>(), 1);
}

TEST(Quantize, TiesGoToLowestIndex) {
  Codebook cb(3, 1);
  cb.set_entry(0, std::vector<double>{2.0});
  cb.set_entry(1, std::vector<double>{-1.0});
  cb.set_entry(2, std::vector<double>{1.0});
  EXPECT_EQ(cb.nearest(std::vector<float>{0.0f}), 1);
  EXPECT_EQ(cb.nearest(std::vector<float>{1.5f}), 0);
}

TEST(Quantize, MatchesExhaustiveSearch) {
  Rng rng(2);
  const auto cb = random_codebook(16, 8, rng);
  torch::manual_seed(2);
  const auto latent = torch::randn({4, 2, 8}).contiguous();
  const auto q = quantize(latent, cb, 0.02);
  const auto idx = q.indices.reshape({-1});
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(idx[i].item<int64_t>(), brute_force_nearest(cb, latent.data_ptr<float>() + i * 8));
  }
}

TEST(Quantize, RejectsEmptyAndNonFinite) {
  Codebook empty;
  EXPECT_THROW(quantize(torch::zeros({2, 0}), empty, 0.02), Error);
  Rng rng(3);
  const auto cb = random_codebook(4, 2, rng);
  auto latent = torch::zeros({1, 2});
  latent[0][1] = std::nanf("");
  EXPECT_THROW(quantize(latent, cb, 0.02), Error);
}

TEST(Quantize, StraightThroughAndCommitmentGradients) {
  Rng rng(4);
  const auto cb = random_codebook(8, 3, rng);
  auto latent = torch::randn({5, 3}, torch::kDouble).requires_grad_(true);
  const auto q = quantize(latent, cb, 0.02);
  const auto w = torch::randn({5, 3}, torch::kDouble);
  (q.quantized * w).sum().backward();
  EXPECT_TRUE(torch::equal(latent.grad(), w));
  EXPECT_FALSE(q.codes.requires_grad());

  latent.grad().zero_();
  q.commitment.backward();
  const auto expected = 2.0 * 0.02 * (latent.detach() - q.codes) / 15.0;
  EXPECT_TRUE(torch::allclose(latent.grad(), expected, 1e-12, 1e-15));
}

TEST(Quantize, FiniteDifferenceGradients) {
  const auto result = testing::vq_gradient_check(60, 5);
  EXPECT_TRUE(result.pass) << result.worst << " " << result.detail;
  EXPECT_GE(result.samples, 60);
}

TEST(Dequantize, LookupRoundTripAndBounds) {
  Rng rng(6);
  const auto cb = random_codebook(16, 4, rng);
  const TokenMap all_three{2, 2, {3, 3, 3, 3}};
  const auto grid = dequantize(all_three, cb);
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(grid[i / 2][i % 2][c].item<float>(), static_cast<float>(cb.entry(3)[c]));
  }
  const auto latent = torch::randn({2, 2, 4});
  const auto q = quantize(latent, cb, 0.02);
  TokenMap tokens{2, 2, {}};
  for (int i = 0; i < 4; ++i) tokens.indices.push_back(static_cast<int>(q.indices.reshape({-1})[i].item<int64_t>()));
  EXPECT_TRUE(torch::equal(dequantize(tokens, cb), q.codes));
  EXPECT_THROW(dequantize(TokenMap{1, 1, {16}}, cb), Error);
}

TEST(Stages, GridSizesPerSkeleton) {
  EXPECT_EQ(token_cols(8), 2);
  EXPECT_EQ(token_cols(22), 5);
  EXPECT_EQ(token_cols(56), 5);
  EXPECT_EQ(token_rows(64), 16);
  EXPECT_THROW(token_rows(62), Error);
  EXPECT_THROW(spatial_stages(10), Error);
}

class EncodeShape : public ::testing::TestWithParam<std::pair<std::string, int>> {};

TEST_P(EncodeShape, EncodeDecodeShapes) {
  const auto [name, cols] = GetParam();
  Tokenizer tok(small_config(name), 1);
  motion::MotionSequence m(64, tok.skeleton(), tok.layout(), 20.0f);
  Rng rng(7);
  for (auto& v : m.values()) v = static_cast<float>(rng.normal());
  const auto latent = tok.encode(m);
  EXPECT_EQ(latent.sizes(), (std::vector<int64_t>{16, cols, 8}));
  const auto out = tok.decode(latent, 20.0f);
  EXPECT_EQ(out.frames(), 64);
  EXPECT_EQ(out.joints(), m.joints());
  EXPECT_EQ(out.width(), 12);
  EXPECT_TRUE(torch::equal(tok.encode(m), latent));
  EXPECT_THROW(tok.decode(torch::zeros({16, cols + 1, 8}), 20.0f), Error);
}

INSTANTIATE_TEST_SUITE_P(Skeletons, EncodeShape,
                         ::testing::Values(std::pair<std::string, int>{"synthetic8", 2},
                                           std::pair<std::string, int>{"interhuman22", 5},
                                           std::pair<std::string, int>{"interx56", 5}));

TEST(Encode, RejectsBadInputs) {
  Tokenizer tok(small_config(), 1);
  motion::MotionSequence odd(62, tok.skeleton(), tok.layout(), 20.0f);
  EXPECT_THROW(tok.encode(odd), Error);
  motion::MotionSequence other(64, motion::Skeleton::interhuman22(), tok.layout(), 20.0f);
  EXPECT_THROW(tok.encode(other), Error);
}

TEST(Losses, VqLossCases) {
  torch::manual_seed(8);
  const auto m = torch::randn({2, 12, 8, 8}, torch::kDouble);
  const auto z = torch::randn({2, 4, 2, 6}, torch::kDouble);
  auto parts = vq_losses(m, m, z, z, 0.02);
  EXPECT_EQ(parts.reconstruction.item<double>(), 0.0);
  EXPECT_EQ(parts.commitment.item<double>(), 0.0);
  parts = vq_losses(m, m + 1.0, z, z, 0.02);
  EXPECT_NEAR(parts.reconstruction.item<double>(), 1.0, 1e-12);

  const auto r = torch::randn_like(m);
  const auto c = torch::randn_like(z);
  parts = vq_losses(m, r, z, c, 0.02);
  double l1 = 0.0;
  const double* pm = m.data_ptr<double>();
  const double* pr = r.data_ptr<double>();
  for (int64_t i = 0; i < m.numel(); ++i) l1 += std::abs(pm[i] - pr[i]);
  double l2 = 0.0;
  const double* pz = z.data_ptr<double>();
  const double* pc = c.data_ptr<double>();
  for (int64_t i = 0; i < z.numel(); ++i) l2 += (pz[i] - pc[i]) * (pz[i] - pc[i]);
  EXPECT_NEAR(parts.reconstruction.item<double>(), l1 / static_cast<double>(m.numel()), 1e-9);
  EXPECT_NEAR(parts.commitment.item<double>(), 0.02 * l2 / static_cast<double>(z.numel()), 1e-9);
}

TEST(Losses, GeometricTrivialCases) {
  const auto sk = motion::Skeleton::synthetic8();
  torch::manual_seed(9);
  const auto p = torch::randn({1, 6, 8, 3}, torch::kDouble);
  const auto feet = torch::ones({1, 6, static_cast<int64_t>(sk.feet.size())}, torch::kDouble);
  const auto same = geometric_losses(p, p, feet, sk);
  EXPECT_EQ(same.velocity.item<double>(), 0.0);
  EXPECT_EQ(same.bone_length.item<double>(), 0.0);
  const auto still = p.index({torch::indexing::Slice(), torch::indexing::Slice(0, 1)}).expand_as(p).contiguous();
  EXPECT_EQ(geometric_losses(p, still, feet, sk).foot_contact.item<double>(), 0.0);
  EXPECT_THROW(geometric_losses(p.slice(1, 0, 1), p.slice(1, 0, 1), feet.slice(1, 0, 1), sk), Error);
}

TEST(Losses, GeometricMatchesLoopOracle) {
  const auto sk = motion::Skeleton::synthetic8();
  const int n = 7;
  const int feet_count = static_cast<int>(sk.feet.size());
  torch::manual_seed(10);
  const auto p = torch::randn({1, n, 8, 3}, torch::kDouble);
  const auto r = torch::randn({1, n, 8, 3}, torch::kDouble);
  const auto labels = torch::randint(0, 2, {1, n, feet_count}).to(torch::kDouble);
  const auto parts = geometric_losses(p, r, labels, sk);
  auto P = p.accessor<double, 4>();
  auto R = r.accessor<double, 4>();
  auto L = labels.accessor<double, 3>();

  double vel = 0.0;
  double fc = 0.0;
  for (int f = 0; f + 1 < n; ++f) {
    for (int j = 0; j < 8; ++j) {
      for (int c = 0; c < 3; ++c) vel += std::abs((P[0][f + 1][j][c] - P[0][f][j][c]) - (R[0][f + 1][j][c] - R[0][f][j][c]));
    }
    for (int k = 0; k < feet_count; ++k) {
      const int j = sk.feet[static_cast<std::size_t>(k)];
      for (int c = 0; c < 3; ++c) fc += std::abs(L[0][f][k] * (R[0][f + 1][j][c] - R[0][f][j][c]));
    }
  }
  double bl = 0.0;
  int bones = 0;
  for (int f = 0; f < n; ++f) {
    for (int j = 0; j < 8; ++j) {
      const int parent = sk.parents[static_cast<std::size_t>(j)];
      if (parent < 0) continue;
      double lp = 0.0;
      double lr = 0.0;
      for (int c = 0; c < 3; ++c) {
        lp += std::pow(P[0][f][j][c] - P[0][f][parent][c], 2);
        lr += std::pow(R[0][f][j][c] - R[0][f][parent][c], 2);
      }
      bl += std::abs(std::sqrt(lp) - std::sqrt(lr));
      ++bones;
    }
  }
  EXPECT_NEAR(parts.velocity.item<double>(), vel / ((n - 1) * 8 * 3), 1e-9);
  EXPECT_NEAR(parts.foot_contact.item<double>(), fc / ((n - 1) * feet_count * 3), 1e-9);
  EXPECT_NEAR(parts.bone_length.item<double>(), bl / bones, 1e-9);
}

TEST(Losses, TotalWeights) {
  const LossWeights w;
  EXPECT_EQ(total_vq_loss(0.0, 0.0, 0.0, 0.0, w), 0.0);
  EXPECT_EQ(total_vq_loss(1.0, 0.0, 0.0, 0.0, w), 1.0);
  EXPECT_NEAR(total_vq_loss(0.5, 0.01, 0.002, 0.1, w), 3.0, 1e-12);
  EXPECT_LT(total_vq_loss(0.5, 0.01, 0.002, 0.1, w), total_vq_loss(0.5, 0.02, 0.002, 0.1, w));
  const auto interx = VqConfig::interx();
  EXPECT_EQ(interx.lambda_vel, 100.0);
  EXPECT_EQ(interx.lambda_fc, 100.0);
  EXPECT_EQ(interx.lambda_bl, 5.0);
}

TEST(Ema, ZeroDecayGivesBatchMeans) {
  Codebook cb(2, 2);
  Rng rng(11);
  const std::vector<float> cells = {1, 2, 3, 4, 10, 20};
  const std::vector<int> assign = {0, 0, 1};
  cb.ema_update(cells, assign, 0.0, 1000, 1.0, rng);
  EXPECT_DOUBLE_EQ(cb.entry(0)[0], 2.0);
  EXPECT_DOUBLE_EQ(cb.entry(0)[1], 3.0);
  EXPECT_DOUBLE_EQ(cb.entry(1)[0], 10.0);
  EXPECT_DOUBLE_EQ(cb.entry(1)[1], 20.0);
}

TEST(Ema, UnusedCodeIsResetAfterWindow) {
  Codebook cb(3, 1);
  Rng rng(12);
  const std::vector<float> cells = {0.5f, 0.7f};
  const std::vector<int> assign = {0, 1};
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(cb.ema_update(cells, assign, 0.9, 4, 1.0, rng).reset_ids.empty());
  const auto report = cb.ema_update(cells, assign, 0.9, 4, 1.0, rng);
  EXPECT_EQ(report.reset_ids, std::vector<int>{2});
  EXPECT_TRUE(cb.entry(2)[0] == 0.5 || cb.entry(2)[0] == static_cast<double>(0.7f));
}

TEST(Ema, MatchesScalarRecurrence) {
  const int size = 5;
  const int dim = 3;
  const double decay = 0.9;
  Codebook cb(size, dim);
  Rng rng(13);
  Rng data(14);
  std::vector<double> count(size, 0.0);
  std::vector<double> sum(size * dim, 0.0);
  for (int step = 0; step < 30; ++step) {
    std::vector<float> cells(8 * dim);
    std::vector<int> assign(8);
    for (auto& v : cells) v = static_cast<float>(data.normal());
    for (auto& a : assign) a = static_cast<int>(data.below(size));
    cb.ema_update(cells, assign, decay, 1000, 0.0, rng);
    for (int k = 0; k < size; ++k) {
      double hits = 0.0;
      std::vector<double> s(dim, 0.0);
      for (int i = 0; i < 8; ++i) {
        if (assign[static_cast<std::size_t>(i)] != k) continue;
        hits += 1.0;
        for (int c = 0; c < dim; ++c) s[static_cast<std::size_t>(c)] += cells[static_cast<std::size_t>(i * dim + c)];
      }
      count[static_cast<std::size_t>(k)] = decay * count[static_cast<std::size_t>(k)] + (1 - decay) * hits;
      for (int c = 0; c < dim; ++c) {
        auto& acc = sum[static_cast<std::size_t>(k * dim + c)];
        acc = decay * acc + (1 - decay) * s[static_cast<std::size_t>(c)];
      }
    }
  }
  for (int k = 0; k < size; ++k) {
    EXPECT_NEAR(cb.ema_count()[static_cast<std::size_t>(k)], count[static_cast<std::size_t>(k)], 1e-9);
    for (int c = 0; c < dim; ++c) {
      const double expected =
          sum[static_cast<std::size_t>(k * dim + c)] / std::max(count[static_cast<std::size_t>(k)], Codebook::kEpsilon);
      EXPECT_NEAR(cb.entry(k)[c], expected, 1e-9);
    }
  }
}

TEST(Schedule, WarmupAndDecay) {
  ScheduleConfig s;
  EXPECT_EQ(s.learning_rate_at(0, 1000), 0.0);
  EXPECT_DOUBLE_EQ(s.learning_rate_at(250, 1000), 2e-4);
  EXPECT_DOUBLE_EQ(s.learning_rate_at(800, 1000), 2e-5);
  EXPECT_NEAR(s.learning_rate_at(900, 1000), 2e-6, 1e-18);
}

std::vector<motion::MotionSequence> one_motion() {
  motion::SynthSpec spec{{{"mirror_wave", 1}, {"bow", 1}}, 32, 20.0f, 1};
  return {motion::generate_synthetic_interactions(spec, 3)[0].motion_a};
}

TEST(VqTraining, OverfitsOneSampleAndIsDeterministic) {
  auto config = small_config();
  config.schedule.iterations = 500;
  config.schedule.learning_rate = 2e-3;
  config.schedule.warmup_fraction = 0.05;
  config.schedule.milestones = {};
  config.lambda_vel = 1.0;
  config.lambda_fc = 5.0;
  config.lambda_bl = 0.05;
  const auto data = one_motion();
  Tokenizer a(config, 4);
  const auto log = train_vqvae(a, data, 4);
  ASSERT_EQ(log.step_loss.size(), 500u);
  EXPECT_LT(log.step_loss.back() * 10.0, log.step_loss[10]);
  Tokenizer b(config, 4);
  EXPECT_EQ(train_vqvae(b, data, 4).step_loss, log.step_loss);
  EXPECT_EQ(a.tokenize(data[0]), b.tokenize(data[0]));
}

TEST(VqTraining, IdenticalMotionsShareTokens) {
  Tokenizer tok(small_config(), 5);
  const auto m = one_motion()[0];
  EXPECT_EQ(tok.tokenize(m), tok.tokenize(motion::MotionSequence(m)));
}

TEST(VqTraining, RejectsEmptyAndDiverging) {
  Tokenizer tok(small_config(), 6);
  EXPECT_THROW(train_vqvae(tok, {}, 1), Error);
  auto config = small_config();
  config.schedule.iterations = 3;
  config.schedule.warmup_fraction = 0.0;
  config.schedule.learning_rate = 1e30;
  Tokenizer wild(config, 6);
  try {
    train_vqvae(wild, one_motion(), 1);
    SUCCEED();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Divergence);
  }
}

TEST(TokenizerCheckpoint, RoundTripPreservesBehaviour) {
  auto config = small_config();
  config.schedule.iterations = 5;
  Tokenizer tok(config, 7);
  const auto data = one_motion();
  train_vqvae(tok, data, 7);
  const auto path = std::filesystem::temp_directory_path() / "duet_test_tokenizer.dck";
  save_checkpoint(tok.to_checkpoint(), path);
  const auto loaded = Tokenizer::from_checkpoint(load_checkpoint(path, "tokenizer"));
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.seed(), 7u);
  EXPECT_TRUE(torch::equal(loaded.encode(data[0]), tok.encode(data[0])));
  EXPECT_EQ(loaded.fingerprint(), Tokenizer::from_checkpoint(loaded.to_checkpoint()).fingerprint());
  EXPECT_EQ(loaded.codebook().batches_since_reset(), tok.codebook().batches_since_reset());
}

}  // namespace
}  // namespace duet::vq
