// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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

#ifndef GLUCODG_MMD_HPP_
#define GLUCODG_MMD_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "glucodg/core.hpp"

namespace glucodg {

// Squared maximum mean discrepancy between two samples with a Gaussian
// kernel k(x, y) = exp(-|x - y|^2 / (2 sigma^2)). The biased V-statistic
//
//   MMD^2 = mean_ij k(x_i, x_j) + mean_ij k(y_i, y_j) - 2 mean_ij k(x_i, y_j)
//
// includes diagonal terms, so it is nonnegative up to rounding.

struct MmdConfig {
  enum class Bandwidth { kMedianHeuristic, kFixed };
  Bandwidth bandwidth = Bandwidth::kMedianHeuristic;
  double fixed_sigma = 1.0;
};

namespace detail {

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Median of the nonzero pairwise Euclidean distances over the pooled sample;
// falls back to 1 when every pair coincides. Even counts average the two
// central values.
inline double median_heuristic_sigma(
    const std::vector<std::span<const double>>& pooled) {
  std::vector<double> dists;
  dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      const double d2 = squared_distance(pooled[i], pooled[j]);
      if (d2 > 0.0) dists.push_back(std::sqrt(d2));
    }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med = (m % 2 == 1)
                         ? dists[m / 2]
                         : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return med > 0.0 ? med : 1.0;
}

}  // namespace detail

inline double mmd2(std::span<const FeatureVector> xs,
                   std::span<const FeatureVector> ys,
                   const MmdConfig& cfg = {}) {
  require(!xs.empty() && !ys.empty(), "EmptyInput",
          "both samples must be nonempty");
  const std::size_t dim = xs.front().values.size();
  const std::string& schema_id = xs.front().schema_id;
  std::vector<std::span<const double>> pooled;
  pooled.reserve(xs.size() + ys.size());
  for (const auto& v : xs) {
    require(v.schema_id == schema_id && v.values.size() == dim,
            "SchemaMismatch", "inconsistent feature vectors in first sample");
    pooled.emplace_back(v.values);
  }
  for (const auto& v : ys) {
    require(v.schema_id == schema_id && v.values.size() == dim,
            "SchemaMismatch", "inconsistent feature vectors in second sample");
    pooled.emplace_back(v.values);
  }

  const double sigma = cfg.bandwidth == MmdConfig::Bandwidth::kFixed
                           ? cfg.fixed_sigma
                           : detail::median_heuristic_sigma(pooled);
  require(sigma > 0.0, "InvalidConfig", "kernel bandwidth must be > 0");
  const double inv = 1.0 / (2.0 * sigma * sigma);

  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  const auto kernel_mean = [&](std::size_t a0, std::size_t an, std::size_t b0,
                               std::size_t bn) {
    double sum = 0.0;
    for (std::size_t i = a0; i < an; ++i)
      for (std::size_t j = b0; j < bn; ++j)
        sum += std::exp(-detail::squared_distance(pooled[i], pooled[j]) * inv);
    return sum / (static_cast<double>(an - a0) * static_cast<double>(bn - b0));
  };

  const double kxx = kernel_mean(0, nx, 0, nx);
  const double kyy = kernel_mean(nx, nx + ny, nx, nx + ny);
  const double kxy = kernel_mean(0, nx, nx, nx + ny);
  double result = kxx + kyy - 2.0 * kxy;
  // The V-statistic is nonnegative; anything below is rounding noise.
  if (result < 0.0) {
    require(result >= -1e-12, "NumericError", "mmd2 fell below -1e-12");
    result = 0.0;
  }
  return result;
}

}  // namespace glucodg

#endif  // GLUCODG_MMD_HPP_
