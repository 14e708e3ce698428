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

#include <vector>

#include <Eigen/Core>

#include "duet/motion.hpp"
#include "duet/rng.hpp"

namespace duet::eval {

// One feature vector per row.
using Features = Eigen::MatrixXd;

// Frechet distance between Gaussian fits of two feature sets. Both
// covariances receive `ridge * I` before the symmetric square root.
double fid(const Features& real, const Features& generated, double ridge = 1e-6);

struct TopK {
  double top1 = 0.0;
  double top2 = 0.0;
  double top3 = 0.0;
};

// 1-based rank of candidates.row(0) by Euclidean distance to `query`.
// Equidistant candidates do not push the match down.
int rank_of_match(const Eigen::VectorXd& query, const Features& candidates);

// For every row i of `generated`, rank text row i against pool_size - 1
// distractor rows drawn without replacement from the other text rows.
TopK r_precision(const Features& generated, const Features& texts, int pool_size, Rng& rng);

// Explicit pools: pools[i].row(0) is the true text for generated row i.
TopK r_precision_pools(const Features& generated, const std::vector<Features>& pools);

double mm_dist(const Features& generated, const Features& texts);

// Mean distance over min(pairs, M/2) disjoint random pairs.
double diversity(const Features& features, int pairs, Rng& rng);

// Mean within-group pairwise distance, averaged over groups.
double mmodality(const std::vector<Features>& groups);

// Mean per-joint position error over frames and joints.
double mpjpe(const motion::MotionSequence& a, const motion::MotionSequence& b);

}  // namespace duet::eval
