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
// Experiment protocols over multi-domain datasets. "Generalized" pools every
// domain and repeats a seeded 70/30 shuffle split; "personalized" holds each
// domain out in turn (leave-one-domain-out) and, by default, refits feature
// normalization on the remaining sources so the held-out domain leaks nothing
// into training. The numbered catalog crosses the two protocols with
// all/selected/removed feature sets and plain versus meta-weighted forests.

#ifndef GLUCODG_EVALUATION_HPP_
#define GLUCODG_EVALUATION_HPP_

#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glucodg/core.hpp"
#include "glucodg/forest.hpp"
#include "glucodg/ingest.hpp"
#include "glucodg/io.hpp"
#include "glucodg/meta_forests.hpp"
#include "glucodg/metrics.hpp"
#include "glucodg/mixedlm.hpp"
#include "glucodg/parallel.hpp"
#include "glucodg/rng.hpp"

namespace glucodg {

enum class Series { kGeneralized, kPersonalized };
enum class FeatureSet { kAll, kSelected, kRemoved };
enum class ModelKind { kRandomForests, kMetaForests };

inline std::string to_string(Series s) {
  return s == Series::kGeneralized ? "generalized" : "personalized";
}
inline std::string to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::kAll: return "all";
    case FeatureSet::kSelected: return "selected";
    default: return "removed";
  }
}
inline std::string to_string(ModelKind m) {
  return m == ModelKind::kRandomForests ? "random_forests" : "meta_forests";
}

struct ExperimentSpec {
  int number = 0;          // 1..9 for the catalog, 0 for custom setups
  Series series = Series::kGeneralized;
  FeatureSet feature_set = FeatureSet::kAll;
  ModelKind model = ModelKind::kRandomForests;
  std::size_t repeats = 10;        // generalized protocol only
  double train_fraction = 0.7;
  ForestConfig forest;
  MetaConfig meta;
  MmdConfig mmd;
  bool refit_normalization_per_fold = true;  // leave-one-domain-out hygiene
  bool capture_models = false;
  unsigned threads = 1;
  RngSeed seed;
};

// Experiment catalog: 1-3 generalized random forests (all/selected/removed
// features), 4-6 the same feature sets under leave-one-domain-out, 7-9
// leave-one-domain-out with meta-weighted forests.
inline ExperimentSpec canonical_experiment(int number) {
  require(number >= 1 && number <= 9, "InvalidExperiment",
          "experiment number must be 1..9");
  ExperimentSpec spec;
  spec.number = number;
  spec.series = number <= 3 ? Series::kGeneralized : Series::kPersonalized;
  spec.model = number >= 7 ? ModelKind::kMetaForests : ModelKind::kRandomForests;
  switch ((number - 1) % 3) {
    case 0: spec.feature_set = FeatureSet::kAll; break;
    case 1: spec.feature_set = FeatureSet::kSelected; break;
    default: spec.feature_set = FeatureSet::kRemoved; break;
  }
  return spec;
}

// Feature subsets keep schema order. "Selected" is the mm-wave features the
// screen retained plus every NIR feature (the NIR channels are carried
// unconditionally); "removed" is the complementary mm-wave set plus NIR.
inline std::vector<std::size_t> resolve_feature_indices(
    const FeatureSchema& schema, FeatureSet set,
    const FeatureSelection* selection) {
  std::vector<std::size_t> keep;
  if (set == FeatureSet::kAll) {
    keep.resize(schema.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    return keep;
  }
  require(selection != nullptr, "InvalidConfig",
          "selected/removed feature sets need a screening result");
  const bool want_selected = set == FeatureSet::kSelected;
  for (const auto& effect : selection->effects) {
    if (effect.selected != want_selected) continue;
    keep.push_back(schema.index_of(effect.name));
  }
  require(!keep.empty(), "EmptyFeatureSet",
          std::string("no mm-wave features in the ") +
              (want_selected ? "selected" : "removed") + " set");
  for (auto i : schema.indices_of(FeatureKind::kNirTransmittance))
    keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  return keep;
}

struct FoldResult {
  std::string target;    // "rep-<r>" or the held-out domain id
  Metrics metrics;
  std::string model_json;  // empty unless capture_models
};

struct EvalReport {
  ExperimentSpec spec;
  std::vector<std::string> feature_names;
  std::vector<FoldResult> folds;
  Metrics mean;     // across folds; mean.n is the total evaluated rows
  Metrics spread;   // population standard deviation; spread.n is the fold count
  double train_seconds = 0.0;
  double test_seconds = 0.0;
};

namespace detail {

inline void finalize_aggregate(EvalReport& report) {
  const auto k = static_cast<double>(report.folds.size());
  Metrics mean{}, sd{};
  std::size_t rows = 0;
  for (const auto& f : report.folds) {
    mean.mae += f.metrics.mae;
    mean.rmse += f.metrics.rmse;
    mean.mape += f.metrics.mape;
    rows += f.metrics.n;
  }
  mean.mae /= k;
  mean.rmse /= k;
  mean.mape /= k;
  for (const auto& f : report.folds) {
    sd.mae += (f.metrics.mae - mean.mae) * (f.metrics.mae - mean.mae);
    sd.rmse += (f.metrics.rmse - mean.rmse) * (f.metrics.rmse - mean.rmse);
    sd.mape += (f.metrics.mape - mean.mape) * (f.metrics.mape - mean.mape);
  }
  sd.mae = std::sqrt(sd.mae / k);
  sd.rmse = std::sqrt(sd.rmse / k);
  sd.mape = std::sqrt(sd.mape / k);
  mean.n = rows;
  sd.n = report.folds.size();
  report.mean = mean;
  report.spread = sd;
}

struct StopWatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start).count();
    start = now;
    return s;
  }
};

inline std::vector<DomainDataset> subset_for(
    std::span<const DomainDataset> datasets, const FeatureSchema& schema,
    FeatureSet set, const FeatureSelection* selection, FeatureSchema& out_schema) {
  const auto keep = resolve_feature_indices(schema, set, selection);
  if (set == FeatureSet::kAll) {
    out_schema = schema;
    return {datasets.begin(), datasets.end()};
  }
  out_schema = subset_schema(schema, keep, to_string(set));
  return subset_datasets(datasets, keep, out_schema);
}

}  // namespace detail

inline std::size_t split_train_count(std::size_t n, double fraction) {
  require(n >= 2, "TooFewSamples", "need at least two pooled samples to split");
  require(fraction > 0.0 && fraction < 1.0, "InvalidConfig",
          "train fraction must lie in (0, 1)");
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

inline EvalReport run_generalized(std::span<const DomainDataset> datasets,
                                  const FeatureSchema& schema,
                                  const ExperimentSpec& spec,
                                  const FeatureSelection* selection = nullptr) {
  require(spec.repeats >= 1, "InvalidConfig", "need at least one repeat");
  require(spec.model == ModelKind::kRandomForests, "InvalidConfig",
          "the generalized protocol uses plain random forests");
  EvalReport report;
  report.spec = spec;
  FeatureSchema sub_schema;
  const auto sub = detail::subset_for(datasets, schema, spec.feature_set,
                                      selection, sub_schema);
  report.feature_names = sub_schema.names;
  const auto pooled = pool_samples(sub);
  const std::size_t n = pooled.size();
  const std::size_t n_train = split_train_count(n, spec.train_fraction);

  report.folds.resize(spec.repeats);
  std::vector<std::pair<double, double>> times(spec.repeats);
  parallel_for(spec.repeats, spec.threads, [&](std::size_t r) {
    const RngSeed rep_seed = derive_substream(spec.seed, "rep-" + std::to_string(r));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng shuffle(derive_substream(rep_seed, "shuffle"));
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(shuffle.uniform_below(i + 1));
      std::swap(idx[i], idx[j]);
    }
    std::vector<Sample> train, test;
    train.reserve(n_train);
    test.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i)
      (i < n_train ? train : test).push_back(pooled[idx[i]]);

    detail::StopWatch watch;
    ForestConfig fcfg = spec.forest;
    fcfg.seed = derive_substream(rep_seed, "forest");
    const ForestModel model = fit_forest(train, fcfg, 1);
    const double t_train = watch.lap();

    std::vector<double> y_ref, y_pred;
    y_ref.reserve(test.size());
    y_pred.reserve(test.size());
    for (const auto& s : test) {
      y_ref.push_back(s.label);
      y_pred.push_back(predict(model, s.features));
    }
    const double t_test = watch.lap();

    FoldResult fold;
    fold.target = "rep-" + std::to_string(r);
    fold.metrics = compute_metrics(y_ref, y_pred);
    if (spec.capture_models) fold.model_json = forest_to_json(model).dump();
    report.folds[r] = std::move(fold);
    times[r] = {t_train, t_test};
  });
  for (const auto& [tr, te] : times) {
    report.train_seconds += tr;
    report.test_seconds += te;
  }
  detail::finalize_aggregate(report);
  return report;
}

inline EvalReport run_lodo(std::span<const DomainDataset> datasets,
                           const FeatureSchema& schema,
                           const ExperimentSpec& spec,
                           const FeatureSelection* selection = nullptr) {
  require(datasets.size() >= 2, "TooFewDomains",
          "leave-one-domain-out needs at least two domains");
  EvalReport report;
  report.spec = spec;
  FeatureSchema sub_schema;
  const auto sub = detail::subset_for(datasets, schema, spec.feature_set,
                                      selection, sub_schema);
  report.feature_names = sub_schema.names;

  report.folds.resize(sub.size());
  std::vector<std::pair<double, double>> times(sub.size());
  parallel_for(sub.size(), spec.threads, [&](std::size_t f) {
    const DomainDataset& held_out = sub[f];
    const RngSeed fold_seed =
        derive_substream(spec.seed, "fold-" + held_out.domain_id);
    std::vector<DomainDataset> sources;
    sources.reserve(sub.size() - 1);
    for (std::size_t d = 0; d < sub.size(); ++d)
      if (d != f) sources.push_back(sub[d]);

    // Normalization is refit on the sources only, so nothing about the
    // held-out subject's distribution reaches training.
    DomainDataset target = held_out;
    if (spec.refit_normalization_per_fold) {
      const auto stats = fit_normalization(sources, sub_schema);
      std::vector<DomainDataset> normalized;
      normalized.reserve(sources.size());
      for (const auto& ds : sources)
        normalized.push_back(apply_normalization(stats, ds));
      target = apply_normalization(stats, held_out);
      sources = std::move(normalized);
    }

    detail::StopWatch watch;
    FoldResult fold;
    fold.target = held_out.domain_id;
    std::vector<double> y_ref, y_pred;
    y_ref.reserve(target.samples.size());
    y_pred.reserve(target.samples.size());
    double t_train = 0.0;
    if (spec.model == ModelKind::kMetaForests) {
      MetaConfig mcfg = spec.meta;
      mcfg.seed = derive_substream(fold_seed, "meta");
      const WeightedEnsemble model = train_meta_forests(sources, mcfg, spec.mmd, 1);
      t_train = watch.lap();
      for (const auto& s : target.samples) {
        y_ref.push_back(s.label);
        y_pred.push_back(predict_weighted(model, s.features));
      }
      if (spec.capture_models) fold.model_json = ensemble_to_json(model).dump();
    } else {
      ForestConfig fcfg = spec.forest;
      fcfg.seed = derive_substream(fold_seed, "forest");
      const ForestModel model = fit_forest(pool_samples(sources), fcfg, 1);
      t_train = watch.lap();
      for (const auto& s : target.samples) {
        y_ref.push_back(s.label);
        y_pred.push_back(predict(model, s.features));
      }
      if (spec.capture_models) fold.model_json = forest_to_json(model).dump();
    }
    const double t_test = watch.lap();
    fold.metrics = compute_metrics(y_ref, y_pred);
    report.folds[f] = std::move(fold);
    times[f] = {t_train, t_test};
  });
  for (const auto& [tr, te] : times) {
    report.train_seconds += tr;
    report.test_seconds += te;
  }
  detail::finalize_aggregate(report);
  return report;
}

inline EvalReport run_experiment(std::span<const DomainDataset> datasets,
                                 const FeatureSchema& schema,
                                 const ExperimentSpec& spec,
                                 const FeatureSelection* selection = nullptr) {
  return spec.series == Series::kGeneralized
             ? run_generalized(datasets, schema, spec, selection)
             : run_lodo(datasets, schema, spec, selection);
}

struct PortionResult {
  double portion = 0.0;
  EvalReport report;
};

// Same seed for every portion, so the subsample-size knob is the only thing
// that moves between runs.
inline std::vector<PortionResult> run_portion_ablation(
    std::span<const DomainDataset> datasets, const FeatureSchema& schema,
    std::span<const double> portions, const ExperimentSpec& spec,
    const FeatureSelection* selection = nullptr) {
  require(!portions.empty(), "EmptyInput", "no portions to ablate");
  require(spec.model == ModelKind::kMetaForests, "InvalidConfig",
          "the portion ablation applies to meta-weighted forests");
  std::vector<PortionResult> out;
  out.reserve(portions.size());
  for (const double p : portions) {
    ExperimentSpec s = spec;
    s.series = Series::kPersonalized;
    s.meta.portion = p;
    out.push_back({p, run_lodo(datasets, schema, s, selection)});
  }
  return out;
}

// --- report serialization ---------------------------------------------------

inline Json metrics_to_json(const Metrics& m) {
  return Json{{"mae", m.mae}, {"rmse", m.rmse}, {"mape", m.mape}, {"n", m.n}};
}

inline Json eval_report_to_json(const EvalReport& report) {
  Json folds = Json::array();
  for (const auto& f : report.folds)
    folds.push_back(Json{{"target", f.target},
                         {"mae", f.metrics.mae},
                         {"rmse", f.metrics.rmse},
                         {"mape", f.metrics.mape},
                         {"n", f.metrics.n}});
  const auto& s = report.spec;
  Json config{{"number", s.number},
              {"series", to_string(s.series)},
              {"feature_set", to_string(s.feature_set)},
              {"model", to_string(s.model)},
              {"repeats", s.repeats},
              {"train_fraction", s.train_fraction},
              {"refit_normalization_per_fold", s.refit_normalization_per_fold},
              {"seed", s.seed.value},
              {"forest",
               Json{{"n_estimators", s.forest.n_estimators},
                    {"max_depth", s.forest.max_depth},
                    {"min_samples_leaf", s.forest.min_samples_leaf},
                    {"features_per_split", s.forest.features_per_split},
                    {"bootstrap", s.forest.bootstrap}}},
              {"meta",
               Json{{"portion", s.meta.portion},
                    {"iterations", s.meta.iterations},
                    {"trees_per_iteration", s.meta.trees_per_iteration},
                    {"weight_temperature", s.meta.weight_temperature}}}};
  return Json{{"config", std::move(config)},
              {"feature_names", report.feature_names},
              {"folds", std::move(folds)},
              {"aggregate", Json{{"mean", metrics_to_json(report.mean)},
                                 {"sd", metrics_to_json(report.spread)}}}};
}

// Wall-clock numbers live in their own document so the main report stays
// byte-identical across reruns.
inline Json timing_to_json(const EvalReport& report) {
  return Json{{"train_seconds", report.train_seconds},
              {"test_seconds", report.test_seconds}};
}

inline std::string eval_table_csv(const EvalReport& report) {
  std::string csv;
  if (report.spec.series == Series::kGeneralized) {
    csv = "number,model,features,mae,rmse,mape\n";
    csv += std::to_string(report.spec.number) + "," + to_string(report.spec.model) +
           "," + to_string(report.spec.feature_set) + "," +
           format_double(report.mean.mae) + "," + format_double(report.mean.rmse) +
           "," + format_double(report.mean.mape) + "\n";
    return csv;
  }
  csv = "metric,average,sd";
  for (const auto& f : report.folds) csv += "," + f.target;
  csv += "\n";
  const auto row = [&](const std::string& name, double mean, double sd,
                       double Metrics::*field) {
    csv += name + "," + format_double(mean) + "," + format_double(sd);
    for (const auto& f : report.folds) csv += "," + format_double(f.metrics.*field);
    csv += "\n";
  };
  row("mae", report.mean.mae, report.spread.mae, &Metrics::mae);
  row("rmse", report.mean.rmse, report.spread.rmse, &Metrics::rmse);
  row("mape", report.mean.mape, report.spread.mape, &Metrics::mape);
  return csv;
}

inline Json ablation_to_json(std::span<const PortionResult> results) {
  Json arr = Json::array();
  for (const auto& r : results)
    arr.push_back(Json{{"portion", r.portion},
                       {"report", eval_report_to_json(r.report)}});
  return Json{{"ablation", std::move(arr)}};
}

inline Json selection_to_json(const FeatureSelection& sel) {
  Json effects = Json::array();
  for (const auto& e : sel.effects)
    effects.push_back(Json{{"name", e.name},
                           {"beta", e.beta},
                           {"se", e.se},
                           {"p", e.p},
                           {"ci_low", e.ci_low},
                           {"ci_high", e.ci_high},
                           {"selected", e.selected}});
  return Json{{"threshold", sel.threshold},
              {"univariate", sel.univariate},
              {"sigma2_resid", sel.sigma2_resid},
              {"sigma2_group", sel.sigma2_group},
              {"boundary", sel.boundary},
              {"selected", sel.selected},
              {"removed", sel.removed},
              {"effects", std::move(effects)}};
}

inline FeatureSelection selection_from_json(const Json& j) {
  FeatureSelection sel;
  sel.threshold = j.at("threshold").get<double>();
  sel.univariate = j.at("univariate").get<bool>();
  sel.sigma2_resid = j.at("sigma2_resid").get<double>();
  sel.sigma2_group = j.at("sigma2_group").get<double>();
  sel.boundary = j.at("boundary").get<bool>();
  sel.selected = j.at("selected").get<std::vector<std::string>>();
  sel.removed = j.at("removed").get<std::vector<std::string>>();
  for (const auto& ej : j.at("effects")) {
    FeatureEffect e;
    e.name = ej.at("name").get<std::string>();
    e.beta = ej.at("beta").get<double>();
    e.se = ej.at("se").get<double>();
    e.p = ej.at("p").get<double>();
    e.ci_low = ej.at("ci_low").get<double>();
    e.ci_high = ej.at("ci_high").get<double>();
    e.selected = ej.at("selected").get<bool>();
    sel.effects.push_back(std::move(e));
  }
  return sel;
}

inline std::string selection_table_csv(const FeatureSelection& sel) {
  std::string csv = "feature,beta,se,p,ci_low,ci_high,selected\n";
  for (const auto& e : sel.effects)
    csv += e.name + "," + format_double(e.beta) + "," + format_double(e.se) +
           "," + format_double(e.p) + "," + format_double(e.ci_low) + "," +
           format_double(e.ci_high) + "," + (e.selected ? "true" : "false") + "\n";
  return csv;
}

inline std::string pearson_table_csv(
    std::span<const std::pair<std::string, PearsonReport>> reports) {
  std::string csv = "feature,domain,pearson_r\n";
  for (const auto& [name, report] : reports) {
    for (const auto& [domain, r] : report.per_domain)
      csv += name + "," + domain + "," + format_double(r) + "\n";
    csv += name + ",pooled," + format_double(report.pooled) + "\n";
  }
  return csv;
}

inline std::string ablation_table_csv(std::span<const PortionResult> results) {
  std::string csv = "metric";
  char buf[32];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), ",p=%.2f", r.portion);
    csv += buf;
  }
  csv += "\n";
  const auto row = [&](const std::string& name, double Metrics::*field) {
    csv += name;
    for (const auto& r : results) csv += "," + format_double(r.report.mean.*field);
    csv += "\n";
  };
  row("mae", &Metrics::mae);
  row("rmse", &Metrics::rmse);
  row("mape", &Metrics::mape);
  return csv;
}

}  // namespace glucodg

#endif  // GLUCODG_EVALUATION_HPP_
