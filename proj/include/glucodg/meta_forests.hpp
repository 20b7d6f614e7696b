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
// Episodic ensemble of random forests for domain generalization. Each
// iteration holds one source domain out as a simulated deployment target,
// trains a small forest on subsamples of the rest, and records how badly it
// missed (MAE) plus how far its training pool sat from the held-out pool
// (squared maximum mean discrepancy). Forests that generalized to nearby
// domains cheaply get large softmax weights in the final prediction.

#ifndef GLUCODG_META_FORESTS_HPP_
#define GLUCODG_META_FORESTS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glucodg/core.hpp"
#include "glucodg/forest.hpp"
#include "glucodg/io.hpp"
#include "glucodg/mmd.hpp"
#include "glucodg/parallel.hpp"
#include "glucodg/rng.hpp"

namespace glucodg {

struct MetaConfig {
  double portion = 0.30;              // per-domain subsample fraction
  std::size_t iterations = 10;
  std::size_t trees_per_iteration = 20;
  ForestConfig base;                  // depth/leaf/mtry template per forest
  double weight_temperature = 1.0;
  RngSeed seed;
};

struct EnsembleMember {
  ForestModel forest;
  std::string meta_test_domain;
  double meta_error = 0.0;       // MAE on the held-out subsample
  double meta_distance = 0.0;    // squared MMD, meta-train pool vs held-out
  double weight = 0.0;
};

struct WeightedEnsemble {
  std::string schema_id;
  std::size_t n_features = 0;
  std::vector<EnsembleMember> members;
};

// Softmax over -(e_t / mean(e) + d_t / mean(d)) / temperature. A term whose
// mean is zero carries no signal and is dropped rather than divided by zero.
inline std::vector<double> ensemble_weights(std::span<const double> errors,
                                            std::span<const double> distances,
                                            double temperature = 1.0) {
  require(!errors.empty(), "EmptyInput", "no ensemble members");
  require(errors.size() == distances.size(), "LengthMismatch",
          "errors and distances differ in length");
  require(temperature > 0.0 && std::isfinite(temperature), "InvalidConfig",
          "temperature must be positive");
  double mean_e = 0.0, mean_d = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    require(std::isfinite(errors[i]) && errors[i] >= 0.0, "NonFiniteValue",
            "errors must be finite and nonnegative");
    require(std::isfinite(distances[i]) && distances[i] >= 0.0, "NonFiniteValue",
            "distances must be finite and nonnegative");
    mean_e += errors[i];
    mean_d += distances[i];
  }
  mean_e /= static_cast<double>(errors.size());
  mean_d /= static_cast<double>(distances.size());

  std::vector<double> score(errors.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    double s = 0.0;
    if (mean_e > 0.0) s += errors[i] / mean_e;
    if (mean_d > 0.0) s += distances[i] / mean_d;
    score[i] = -s / temperature;
    top = std::max(top, score[i]);
  }
  double total = 0.0;
  for (auto& s : score) {
    s = std::exp(s - top);
    total += s;
  }
  for (auto& s : score) s /= total;
  return score;
}

namespace detail {

inline std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k,
                                                  Rng& rng) {
  // Partial Fisher-Yates; the first k slots are the draw, in draw order.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

inline std::vector<FeatureVector> feature_rows(std::span<const Sample> samples) {
  std::vector<FeatureVector> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.features);
  return rows;
}

}  // namespace detail

inline void validate_meta_config(const MetaConfig& cfg) {
  require(cfg.portion > 0.0 && cfg.portion <= 1.0, "InvalidConfig",
          "portion must lie in (0, 1]");
  require(cfg.iterations >= 1, "InvalidConfig", "need at least one iteration");
  require(cfg.trees_per_iteration >= 1, "InvalidConfig",
          "need at least one tree per iteration");
  require(cfg.weight_temperature > 0.0, "InvalidConfig",
          "temperature must be positive");
}

inline WeightedEnsemble train_meta_forests(std::span<const DomainDataset> datasets,
                                           const MetaConfig& cfg,
                                           const MmdConfig& mmd_cfg = {},
                                           unsigned n_threads = 1) {
  validate_meta_config(cfg);
  require(datasets.size() >= 2, "TooFewDomains",
          "episodic training needs at least two source domains");
  for (const auto& ds : datasets) {
    require(!ds.samples.empty(), "EmptyDataset",
            "domain " + ds.domain_id + " is empty");
    require(ds.schema_id == datasets.front().schema_id, "SchemaMismatch",
            "all domains must share one schema");
    const auto k = static_cast<std::size_t>(
        std::floor(cfg.portion * static_cast<double>(ds.samples.size())));
    require(k >= 1, "PortionTooSmall",
            "portion " + format_double(cfg.portion) + " selects zero samples from domain " +
                ds.domain_id);
  }

  WeightedEnsemble ensemble;
  ensemble.schema_id = datasets.front().schema_id;
  ensemble.n_features = datasets.front().samples.front().features.values.size();
  ensemble.members.resize(cfg.iterations);

  parallel_for(cfg.iterations, n_threads, [&](std::size_t t) {
    const RngSeed it_seed = derive_substream(cfg.seed, "iter-" + std::to_string(t));
    Rng pick(derive_substream(it_seed, "pick"));
    const auto target = static_cast<std::size_t>(pick.uniform_below(datasets.size()));

    std::vector<Sample> meta_train;
    std::vector<Sample> meta_test;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto& ds = datasets[d];
      const auto k = static_cast<std::size_t>(
          std::floor(cfg.portion * static_cast<double>(ds.samples.size())));
      Rng sub(derive_substream(it_seed, "subsample-" + ds.domain_id));
      auto idx = detail::subsample_indices(ds.samples.size(), k, sub);
      auto& sink = d == target ? meta_test : meta_train;
      for (auto i : idx) sink.push_back(ds.samples[i]);
    }

    ForestConfig fcfg = cfg.base;
    fcfg.n_estimators = cfg.trees_per_iteration;
    fcfg.seed = derive_substream(it_seed, "forest");
    EnsembleMember member;
    member.meta_test_domain = datasets[target].domain_id;
    member.forest = fit_forest(meta_train, fcfg, 1);

    double abs_err = 0.0;
    for (const auto& s : meta_test)
      abs_err += std::abs(predict(member.forest, s.features) - s.label);
    member.meta_error = abs_err / static_cast<double>(meta_test.size());
    member.meta_distance = mmd2(detail::feature_rows(meta_train),
                                detail::feature_rows(meta_test), mmd_cfg);
    ensemble.members[t] = std::move(member);
  });

  std::vector<double> errors, distances;
  for (const auto& m : ensemble.members) {
    errors.push_back(m.meta_error);
    distances.push_back(m.meta_distance);
  }
  const auto weights = ensemble_weights(errors, distances, cfg.weight_temperature);
  for (std::size_t t = 0; t < weights.size(); ++t)
    ensemble.members[t].weight = weights[t];
  return ensemble;
}

inline double predict_weighted(const WeightedEnsemble& ensemble,
                               const FeatureVector& x) {
  require(!ensemble.members.empty(), "EmptyInput", "ensemble has no members");
  require(x.schema_id == ensemble.schema_id, "SchemaMismatch",
          "feature vector schema " + x.schema_id + " does not match ensemble " +
              ensemble.schema_id);
  double out = 0.0;
  for (const auto& m : ensemble.members)
    out += m.weight * predict(m.forest, x);
  return out;
}

inline Json ensemble_to_json(const WeightedEnsemble& ensemble) {
  Json members = Json::array();
  for (const auto& m : ensemble.members) {
    members.push_back(Json{{"meta_test_domain", m.meta_test_domain},
                           {"meta_error", m.meta_error},
                           {"meta_distance", m.meta_distance},
                           {"weight", m.weight},
                           {"forest", forest_to_json(m.forest)}});
  }
  return Json{{"type", "meta_forests"},
              {"schema_id", ensemble.schema_id},
              {"n_features", ensemble.n_features},
              {"members", std::move(members)}};
}

inline WeightedEnsemble ensemble_from_json(const Json& j) {
  require(j.is_object() && j.value("type", "") == "meta_forests", "ParseError",
          "not a serialized weighted ensemble");
  WeightedEnsemble ensemble;
  ensemble.schema_id = j.at("schema_id").get<std::string>();
  ensemble.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& mj : j.at("members")) {
    EnsembleMember m;
    m.meta_test_domain = mj.at("meta_test_domain").get<std::string>();
    m.meta_error = mj.at("meta_error").get<double>();
    m.meta_distance = mj.at("meta_distance").get<double>();
    m.weight = mj.at("weight").get<double>();
    m.forest = forest_from_json(mj.at("forest"));
    ensemble.members.push_back(std::move(m));
  }
  return ensemble;
}

}  // namespace glucodg

#endif  // GLUCODG_META_FORESTS_HPP_
