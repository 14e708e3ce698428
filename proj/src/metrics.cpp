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

#include "duet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Eigenvalues>

#include "duet/error.hpp"

namespace duet::eval {
namespace {

void require_finite(const Features& f, const char* what) {
  require(f.allFinite(), ErrorCode::NonFinite, std::string(what) + " features contain non-finite values");
}

Eigen::MatrixXd covariance(const Features& f, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = f.rowwise() - mean;
  const double denom = f.rows() > 1 ? static_cast<double>(f.rows() - 1) : 1.0;
  return (centered.transpose() * centered) / denom;
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double fid(const Features& real, const Features& generated, double ridge) {
  require(real.cols() == generated.cols(), ErrorCode::DimensionMismatch, "feature widths differ");
  require(real.rows() >= 1 && generated.rows() >= 1, ErrorCode::InvalidArgument, "feature sets must be non-empty");
  require_finite(real, "real");
  require_finite(generated, "generated");
  const Eigen::RowVectorXd mu_r = real.colwise().mean();
  const Eigen::RowVectorXd mu_g = generated.colwise().mean();
  const auto identity = Eigen::MatrixXd::Identity(real.cols(), real.cols());
  const Eigen::MatrixXd sigma_r = covariance(real, mu_r) + ridge * identity;
  const Eigen::MatrixXd sigma_g = covariance(generated, mu_g) + ridge * identity;

  // Tr((S_r S_g)^{1/2}) = Tr((S_r^{1/2} S_g S_r^{1/2})^{1/2}) for psd inputs.
  const Eigen::MatrixXd root_r = symmetric_sqrt(sigma_r);
  const Eigen::MatrixXd inner = root_r * sigma_g * root_r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double cross = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (mu_r - mu_g).squaredNorm();
  return mean_term + sigma_r.trace() + sigma_g.trace() - 2.0 * cross;
}

int rank_of_match(const Eigen::VectorXd& query, const Features& candidates) {
  require(candidates.rows() >= 1 && candidates.cols() == query.size(), ErrorCode::DimensionMismatch,
          "candidate pool shape mismatch");
  const double target = (candidates.row(0).transpose() - query).norm();
  int rank = 1;
  for (Eigen::Index k = 1; k < candidates.rows(); ++k) {
    if ((candidates.row(k).transpose() - query).norm() < target) ++rank;
  }
  return rank;
}

namespace {
TopK accumulate(const std::vector<int>& ranks) {
  TopK out;
  for (int r : ranks) {
    out.top1 += r <= 1;
    out.top2 += r <= 2;
    out.top3 += r <= 3;
  }
  const double n = static_cast<double>(ranks.size());
  out.top1 /= n;
  out.top2 /= n;
  out.top3 /= n;
  return out;
}
}  // namespace

TopK r_precision(const Features& generated, const Features& texts, int pool_size, Rng& rng) {
  require(generated.rows() == texts.rows() && generated.cols() == texts.cols(), ErrorCode::DimensionMismatch,
          "generated and text features must pair row by row");
  require(pool_size >= 1 && pool_size <= texts.rows(), ErrorCode::InvalidArgument,
          "distractor pool larger than available texts");
  require_finite(generated, "generated");
  require_finite(texts, "text");
  const int count = static_cast<int>(texts.rows());
  std::vector<int> ranks;
  ranks.reserve(static_cast<std::size_t>(count));
  Features pool(pool_size, texts.cols());
  for (int i = 0; i < count; ++i) {
    pool.row(0) = texts.row(i);
    const auto picks = rng.sample_without_replacement(count - 1, pool_size - 1);
    for (int k = 0; k < pool_size - 1; ++k) {
      const int other = picks[k] < i ? picks[k] : picks[k] + 1;
      pool.row(k + 1) = texts.row(other);
    }
    ranks.push_back(rank_of_match(generated.row(i).transpose(), pool));
  }
  return accumulate(ranks);
}

TopK r_precision_pools(const Features& generated, const std::vector<Features>& pools) {
  require(static_cast<std::size_t>(generated.rows()) == pools.size(), ErrorCode::DimensionMismatch,
          "one candidate pool per generated row is required");
  std::vector<int> ranks;
  ranks.reserve(pools.size());
  for (std::size_t i = 0; i < pools.size(); ++i) {
    ranks.push_back(rank_of_match(generated.row(static_cast<Eigen::Index>(i)).transpose(), pools[i]));
  }
  return accumulate(ranks);
}

double mm_dist(const Features& generated, const Features& texts) {
  require(generated.rows() == texts.rows() && generated.cols() == texts.cols() && generated.rows() > 0,
          ErrorCode::DimensionMismatch, "generated and text features must pair row by row");
  return (generated - texts).rowwise().norm().mean();
}

double diversity(const Features& features, int pairs, Rng& rng) {
  const int count = static_cast<int>(features.rows());
  require(count >= 2, ErrorCode::InvalidArgument, "diversity needs at least two samples");
  const int used = std::min(pairs, count / 2);
  require(used >= 1, ErrorCode::InvalidArgument, "diversity needs at least one pair");
  const auto order = rng.sample_without_replacement(count, 2 * used);
  double total = 0.0;
  for (int k = 0; k < used; ++k) total += (features.row(order[k]) - features.row(order[used + k])).norm();
  return total / used;
}

double mmodality(const std::vector<Features>& groups) {
  require(!groups.empty(), ErrorCode::InvalidArgument, "mmodality needs at least one group");
  double total = 0.0;
  for (const auto& group : groups) {
    require(group.rows() >= 2, ErrorCode::InvalidArgument, "mmodality groups need at least two members");
    double sum = 0.0;
    int pairs = 0;
    for (Eigen::Index i = 0; i < group.rows(); ++i) {
      for (Eigen::Index k = i + 1; k < group.rows(); ++k) {
        sum += (group.row(i) - group.row(k)).norm();
        ++pairs;
      }
    }
    total += sum / pairs;
  }
  return total / static_cast<double>(groups.size());
}

double mpjpe(const motion::MotionSequence& a, const motion::MotionSequence& b) {
  require(a.frames() == b.frames() && a.joints() == b.joints(), ErrorCode::DimensionMismatch,
          "mpjpe needs motions of equal shape");
  const auto pa = a.positions();
  const auto pb = b.positions();
  double total = 0.0;
  for (int f = 0; f < a.frames(); ++f) {
    for (int j = 0; j < a.joints(); ++j) total += (pa.at(f, j) - pb.at(f, j)).norm();
  }
  return total / (static_cast<double>(a.frames()) * a.joints());
}

}  // namespace duet::eval
