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
//
// Mix-up balancing. Subjects contribute unequal sample counts, which biases
// pooled training toward the heavily sampled ones. Each underfull domain is
// topped up with convex combinations of its own sample pairs,
//
//   x' = l * x_a + (1 - l) * x_b,   y' = l * y_a + (1 - l) * y_b,
//
// with l ~ Beta(alpha, alpha). Originals are always kept verbatim; mixing
// never crosses domains.

#ifndef GLUCODG_MIXUP_HPP_
#define GLUCODG_MIXUP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glucodg/core.hpp"
#include "glucodg/rng.hpp"

namespace glucodg {

struct MixupConfig {
  double alpha = 0.4;
  std::size_t target_count_per_domain = 0;
  RngSeed seed;
};

// One Beta(alpha, alpha) draw from an existing stream.
inline double sample_lambda(double alpha, Rng& rng) {
  require(alpha > 0.0, "InvalidAlpha",
          "mixing concentration must be > 0, got " + std::to_string(alpha));
  return rng.beta(alpha, alpha);
}

// Single seeded draw, for callers that want one value reproducibly.
inline double sample_lambda(double alpha, RngSeed seed) {
  Rng rng(seed);
  return sample_lambda(alpha, rng);
}

inline Sample mixup_pair(const Sample& a, const Sample& b, double lambda) {
  require(a.domain_id == b.domain_id, "DomainMismatch",
          "cannot mix samples from '" + a.domain_id + "' and '" + b.domain_id + "'");
  require(a.features.schema_id == b.features.schema_id &&
              a.features.values.size() == b.features.values.size(),
          "SchemaMismatch", "mixing partners disagree on feature layout");
  require(lambda >= 0.0 && lambda <= 1.0, "InvalidLambda",
          "mixing weight must lie in [0, 1], got " + std::to_string(lambda));
  Sample out;
  out.domain_id = a.domain_id;
  out.features.schema_id = a.features.schema_id;
  out.features.values.reserve(a.features.values.size());
  for (std::size_t i = 0; i < a.features.values.size(); ++i)
    out.features.values.push_back(lambda * a.features.values[i] +
                                  (1.0 - lambda) * b.features.values[i]);
  out.label = lambda * a.label + (1.0 - lambda) * b.label;
  out.timestamp.reset();  // a mixed sample has no single acquisition time
  return out;
}

// Grows every domain below the target up to exactly target_count_per_domain
// samples; domains already at or above the target pass through unchanged.
// Partners are drawn uniformly over distinct in-domain pairs. Each domain
// mixes from its own substream, so adding or removing one domain does not
// disturb the others.
inline std::vector<DomainDataset> balance_domains(
    std::span<const DomainDataset> datasets, const MixupConfig& cfg) {
  require(cfg.alpha > 0.0, "InvalidAlpha", "mixing concentration must be > 0");
  require(cfg.target_count_per_domain > 0, "InvalidConfig",
          "target_count_per_domain must be set");
  std::vector<DomainDataset> out;
  out.reserve(datasets.size());
  for (const auto& ds : datasets) {
    require(ds.samples.size() >= 2, "TooFewSamples",
            "domain '" + ds.domain_id + "' has " +
                std::to_string(ds.samples.size()) +
                " samples; mixing needs at least two");
    DomainDataset grown = ds;
    if (ds.samples.size() < cfg.target_count_per_domain) {
      Rng rng(derive_substream(cfg.seed, "mixup-" + ds.domain_id));
      const std::size_t n = ds.samples.size();
      grown.samples.reserve(cfg.target_count_per_domain);
      while (grown.samples.size() < cfg.target_count_per_domain) {
        const std::size_t i = rng.uniform_below(n);
        std::size_t j = rng.uniform_below(n - 1);
        if (j >= i) ++j;
        const double lambda = sample_lambda(cfg.alpha, rng);
        grown.samples.push_back(mixup_pair(ds.samples[i], ds.samples[j], lambda));
      }
    }
    out.push_back(std::move(grown));
  }
  return out;
}

}  // namespace glucodg

#endif  // GLUCODG_MIXUP_HPP_
