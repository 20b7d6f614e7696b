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
// Regression trees and bagged forests. Splits greedily minimize the summed
// squared label error of the two children; candidate thresholds are the
// midpoints between consecutive sorted unique feature values. Score ties
// break to the lowest feature index, then the lowest threshold, which makes
// the fit a pure function of (rows, config, seed) regardless of evaluation
// order. Every tree draws its bootstrap rows and per-node feature subsets
// from its own substream, so forests are bitwise reproducible for any thread
// count.

#ifndef GLUCODG_FOREST_HPP_
#define GLUCODG_FOREST_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "glucodg/core.hpp"
#include "glucodg/parallel.hpp"
#include "glucodg/rng.hpp"

namespace glucodg {

struct ForestConfig {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 10;
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = ceil(p / 3)
  bool bootstrap = true;
  RngSeed seed;
};

// Flat node storage; feature < 0 marks a leaf holding the mean label.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const TreeNode& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold
                                       ? n.left
                                       : n.right);
    }
    return nodes[i].value;
  }
};

struct ForestModel {
  ForestConfig config;
  std::string schema_id;
  std::size_t n_features = 0;
  std::vector<Tree> trees;
};

namespace detail {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // summed squared error of both children
};

// Wraps the training rows once; node recursion only shuffles an index array.
struct TreeBuilder {
  std::span<const Sample> samples;
  std::size_t n_features = 0;
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;
  Rng* rng = nullptr;
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> feature_pool;  // scratch for per-node draws

  double value_at(std::size_t row, std::size_t feature) const {
    return samples[row].features.values[feature];
  }

  double label_at(std::size_t row) const { return samples[row].label; }

  bool labels_constant(std::span<const std::size_t> rows) const {
    const double first = label_at(rows.front());
    for (std::size_t r : rows)
      if (label_at(r) != first) return false;
    return true;
  }

  double mean_label(std::span<const std::size_t> rows) const {
    double s = 0.0;
    for (std::size_t r : rows) s += label_at(r);
    return s / static_cast<double>(rows.size());
  }

  // Distinct features, drawn without replacement, returned ascending so the
  // tie-break below is independent of draw order.
  std::vector<std::size_t> draw_features() {
    std::vector<std::size_t>& pool = feature_pool;
    pool.resize(n_features);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry; ++i) {
      const std::size_t j = i + rng->uniform_below(n_features - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<long>(mtry));
    std::sort(out.begin(), out.end());
    return out;
  }

  SplitChoice best_split(std::vector<std::size_t>& rows) {
    const std::vector<std::size_t> features = draw_features();
    const std::size_t n = rows.size();
    SplitChoice best;
    std::vector<std::pair<double, double>> xy(n);  // (feature value, label)
    for (std::size_t f : features) {
      for (std::size_t i = 0; i < n; ++i)
        xy[i] = {value_at(rows[i], f), label_at(rows[i])};
      std::sort(xy.begin(), xy.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      // Prefix sums let each candidate threshold score in O(1).
      double left_sum = 0.0, left_sq = 0.0;
      double total_sum = 0.0, total_sq = 0.0;
      for (const auto& [x, y] : xy) {
        total_sum += y;
        total_sq += y * y;
      }
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += xy[i].second;
        left_sq += xy[i].second * xy[i].second;
        if (xy[i].first == xy[i + 1].first) continue;  // no boundary here
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double score =
            (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
            (right_sq - right_sum * right_sum / static_cast<double>(nr));
        const double threshold = 0.5 * (xy[i].first + xy[i + 1].first);
        const bool better =
            !best.found || score < best.score ||
            (score == best.score &&
             (f < best.feature || (f == best.feature && threshold < best.threshold)));
        if (better) {
          best.found = true;
          best.feature = f;
          best.threshold = threshold;
          best.score = score;
        }
      }
    }
    return best;
  }

  int build(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const bool splittable = depth < max_depth && rows.size() >= 2 * min_leaf &&
                            !labels_constant(rows);
    if (!splittable) {
      nodes[static_cast<std::size_t>(id)].value = mean_label(rows);
      return id;
    }
    const SplitChoice split = best_split(rows);
    if (!split.found) {  // all candidate features constant on these rows
      nodes[static_cast<std::size_t>(id)].value = mean_label(rows);
      return id;
    }
    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (std::size_t r : rows) {
      if (value_at(r, split.feature) <= split.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }
};

inline std::size_t resolve_mtry(std::size_t features_per_split, std::size_t p) {
  if (features_per_split == 0) return (p + 2) / 3;  // ceil(p / 3)
  require(features_per_split <= p, "InvalidConfig",
          "features_per_split " + std::to_string(features_per_split) +
              " exceeds feature count " + std::to_string(p));
  return features_per_split;
}

}  // namespace detail

// Fits one tree on the given rows (no bootstrap here; fit_forest resamples).
// Node randomness comes from `seed`, consumed in depth-first build order.
inline Tree fit_tree(std::span<const Sample> samples, const ForestConfig& cfg,
                     RngSeed seed) {
  require(!samples.empty(), "EmptyInput", "cannot fit a tree on no samples");
  const std::size_t p = samples.front().features.values.size();
  require(p > 0, "EmptyInput", "samples have no features");
  require(cfg.min_samples_leaf >= 1, "InvalidConfig", "min_samples_leaf must be >= 1");

  Rng rng(seed);
  detail::TreeBuilder builder;
  builder.samples = samples;
  builder.n_features = p;
  builder.max_depth = cfg.max_depth;
  builder.min_leaf = cfg.min_samples_leaf;
  builder.mtry = detail::resolve_mtry(cfg.features_per_split, p);
  builder.rng = &rng;

  std::vector<std::size_t> rows(samples.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  builder.build(rows, 0);
  Tree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

// Bagged forest: tree t trains on n-with-replacement resampled rows using the
// substream "tree-t". Trees are independent, so building them in parallel
// changes nothing.
inline ForestModel fit_forest(std::span<const Sample> samples,
                              const ForestConfig& cfg, unsigned threads = 1) {
  require(!samples.empty(), "EmptyInput", "cannot fit a forest on no samples");
  require(cfg.n_estimators >= 1, "InvalidConfig", "n_estimators must be >= 1");
  const std::size_t p = samples.front().features.values.size();
  detail::resolve_mtry(cfg.features_per_split, p);  // validate early

  ForestModel model;
  model.config = cfg;
  model.schema_id = samples.front().features.schema_id;
  model.n_features = p;
  model.trees.resize(cfg.n_estimators);

  parallel_for(cfg.n_estimators, threads, [&](std::size_t t) {
    const RngSeed tree_seed =
        derive_substream(cfg.seed, "tree-" + std::to_string(t));
    if (cfg.bootstrap) {
      Rng rng(tree_seed);
      std::vector<Sample> boot;
      boot.reserve(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i)
        boot.push_back(samples[rng.uniform_below(samples.size())]);
      // Node draws continue on the same stream after the bootstrap: fit_tree
      // gets a derived seed so both stages are pinned down separately.
      model.trees[t] = fit_tree(boot, cfg, derive_substream(tree_seed, "nodes"));
    } else {
      model.trees[t] = fit_tree(samples, cfg, derive_substream(tree_seed, "nodes"));
    }
  });
  return model;
}

inline double predict(const ForestModel& model, const FeatureVector& x) {
  require(x.schema_id == model.schema_id, "SchemaMismatch",
          "input schema '" + x.schema_id + "' vs model schema '" +
              model.schema_id + "'");
  require(x.values.size() == model.n_features, "SchemaMismatch",
          "input has " + std::to_string(x.values.size()) + " features, model " +
              std::to_string(model.n_features));
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(x.values);
  return sum / static_cast<double>(model.trees.size());
}

// ---------------------------------------------------------------------------
// Serialization. Nodes are stored as [feature, threshold, left, right, value]
// rows; doubles survive the round trip bit-exactly.

inline nlohmann::ordered_json forest_to_json(const ForestModel& model) {
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return nlohmann::ordered_json{
      {"type", "random_forest"},
      {"schema_id", model.schema_id},
      {"n_features", model.n_features},
      {"config",
       {{"n_estimators", model.config.n_estimators},
        {"max_depth", model.config.max_depth},
        {"min_samples_leaf", model.config.min_samples_leaf},
        {"features_per_split", model.config.features_per_split},
        {"bootstrap", model.config.bootstrap},
        {"seed", model.config.seed.value}}},
      {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const nlohmann::ordered_json& j) {
  require(j.value("type", "") == std::string("random_forest"), "ParseError",
          "not a serialized forest");
  ForestModel model;
  model.schema_id = j.at("schema_id").get<std::string>();
  model.n_features = j.at("n_features").get<std::size_t>();
  const auto& cfg = j.at("config");
  model.config.n_estimators = cfg.at("n_estimators").get<std::size_t>();
  model.config.max_depth = cfg.at("max_depth").get<std::size_t>();
  model.config.min_samples_leaf = cfg.at("min_samples_leaf").get<std::size_t>();
  model.config.features_per_split = cfg.at("features_per_split").get<std::size_t>();
  model.config.bootstrap = cfg.at("bootstrap").get<bool>();
  model.config.seed.value = cfg.at("seed").get<std::uint64_t>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj) {
      require(nj.is_array() && nj.size() == 5, "ParseError", "bad tree node");
      TreeNode n;
      n.feature = nj[0].get<int>();
      n.threshold = nj[1].get<double>();
      n.left = nj[2].get<int>();
      n.right = nj[3].get<int>();
      n.value = nj[4].get<double>();
      tree.nodes.push_back(n);
    }
    require(!tree.nodes.empty(), "ParseError", "empty tree");
    model.trees.push_back(std::move(tree));
  }
  require(!model.trees.empty(), "ParseError", "forest has no trees");
  return model;
}

}  // namespace glucodg

#endif  // GLUCODG_FOREST_HPP_
