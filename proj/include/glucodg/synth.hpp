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
// Synthetic multi-subject sensor data with known ground truth. Features are
// unit-variance Gaussians around a per-domain mean shift, labels are a linear
// function of a few planted informative features plus a per-domain random
// intercept and noise, affinely mapped into a physiological glucose range.
// Because the truth is recorded, recovery tests can score feature selection
// and domain-generalization behavior against it.

#ifndef GLUCODG_SYNTH_HPP_
#define GLUCODG_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "glucodg/core.hpp"
#include "glucodg/ingest.hpp"
#include "glucodg/io.hpp"
#include "glucodg/rng.hpp"

namespace glucodg {

struct SynthConfig {
  std::size_t n_domains = 5;
  std::size_t samples_per_domain = 112;
  std::size_t n_mmwave = 21;
  std::size_t n_nir = 2;
  std::vector<std::size_t> informative_indices = {2, 6, 10, 14, 18};
  std::vector<double> effect_sizes = {0.9, -0.7, 0.8, -0.5, 0.6};
  double domain_intercept_sd = 1.0;  // subject-level label offset spread
  double domain_shift_sd = 0.5;      // subject-level feature mean spread
  double domain_effect_sd = 0.0;     // subject-level slope jitter around each effect
  double noise_sd = 1.0;
  double label_min = 37.8;           // physiological glucose bounds, mg/dL
  double label_max = 547.2;
  RngSeed seed;
};

struct GroundTruth {
  std::vector<std::size_t> informative_indices;
  std::vector<double> effect_sizes;             // shared means, raw label scale
  std::vector<std::pair<std::string, std::vector<double>>> domain_effects;
  std::vector<std::pair<std::string, double>> domain_intercepts;
  double label_scale = 1.0;                     // label = scale * raw + offset
  double label_offset = 0.0;
};

struct SynthResult {
  FeatureSchema schema;
  std::vector<DomainDataset> datasets;
  GroundTruth truth;
};

// 21 sweep frequencies from 36.50 GHz in 0.25 GHz steps, then the two NIR
// wavelengths. Extra columns keep stepping the same grids.
inline FeatureSchema make_sensor_schema(std::size_t n_mmwave = 21,
                                        std::size_t n_nir = 2) {
  require(n_mmwave >= 1 && n_nir >= 1, "InvalidConfig",
          "need at least one feature of each sensor kind");
  FeatureSchema schema;
  schema.id = "mmw" + std::to_string(n_mmwave) + "-nir" + std::to_string(n_nir) + "-v1";
  char buf[64];
  for (std::size_t i = 0; i < n_mmwave; ++i) {
    std::snprintf(buf, sizeof(buf), "s21_%.2fghz", 36.50 + 0.25 * static_cast<double>(i));
    schema.names.emplace_back(buf);
    schema.units.emplace_back("dB");
    schema.kinds.push_back(FeatureKind::kMmwaveS21);
  }
  const int wavelengths[] = {1370, 1640};
  for (std::size_t i = 0; i < n_nir; ++i) {
    const int nm = i < 2 ? wavelengths[i] : 1640 + 100 * static_cast<int>(i - 1);
    schema.names.push_back("nir_" + std::to_string(nm) + "nm");
    schema.units.emplace_back("%");
    schema.kinds.push_back(FeatureKind::kNirTransmittance);
  }
  validate_schema(schema);
  return schema;
}

inline void validate_synth_config(const SynthConfig& cfg) {
  require(cfg.n_domains >= 2, "InvalidConfig", "need at least two domains");
  require(cfg.samples_per_domain >= 2, "InvalidConfig",
          "need at least two samples per domain");
  require(cfg.informative_indices.size() == cfg.effect_sizes.size(),
          "InvalidConfig", "one effect size per informative index");
  const std::size_t p = cfg.n_mmwave + cfg.n_nir;
  std::vector<std::size_t> sorted = cfg.informative_indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    require(sorted[i] < p, "OutOfRange",
            "informative index " + std::to_string(sorted[i]) +
                " outside feature range");
    require(i == 0 || sorted[i] != sorted[i - 1], "InvalidConfig",
            "duplicate informative index");
  }
  require(cfg.domain_intercept_sd >= 0.0 && cfg.domain_shift_sd >= 0.0 &&
              cfg.domain_effect_sd >= 0.0 && cfg.noise_sd >= 0.0,
          "InvalidConfig", "spread parameters must be nonnegative");
  require(cfg.label_min > 0.0 && cfg.label_min < cfg.label_max, "InvalidConfig",
          "label range must satisfy 0 < min < max");
}

inline std::string synth_domain_id(std::size_t d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subject_%02zu", d + 1);
  return buf;
}

inline SynthResult generate(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  SynthResult result;
  result.schema = make_sensor_schema(cfg.n_mmwave, cfg.n_nir);
  const std::size_t p = result.schema.size();
  result.truth.informative_indices = cfg.informative_indices;
  result.truth.effect_sizes = cfg.effect_sizes;

  struct RawDomain {
    std::string id;
    std::vector<std::vector<double>> features;
    std::vector<double> raw_labels;
  };
  std::vector<RawDomain> raw(cfg.n_domains);
  double raw_lo = std::numeric_limits<double>::infinity();
  double raw_hi = -std::numeric_limits<double>::infinity();

  for (std::size_t d = 0; d < cfg.n_domains; ++d) {
    RawDomain& rd = raw[d];
    rd.id = synth_domain_id(d);
    Rng rng(derive_substream(cfg.seed, "domain-" + rd.id));
    std::vector<double> mu(p);
    for (auto& m : mu) m = rng.normal(0.0, cfg.domain_shift_sd);
    const double intercept = rng.normal(0.0, cfg.domain_intercept_sd);
    result.truth.domain_intercepts.emplace_back(rd.id, intercept);
    // Subjects respond with their own slopes scattered around the shared
    // effects, the way physiology varies from person to person.
    std::vector<double> effects = cfg.effect_sizes;
    for (auto& e : effects) e += rng.normal(0.0, cfg.domain_effect_sd);
    result.truth.domain_effects.emplace_back(rd.id, effects);
    rd.features.resize(cfg.samples_per_domain);
    rd.raw_labels.resize(cfg.samples_per_domain);
    for (std::size_t j = 0; j < cfg.samples_per_domain; ++j) {
      auto& x = rd.features[j];
      x.resize(p);
      for (std::size_t c = 0; c < p; ++c) x[c] = mu[c] + rng.normal();
      double label = intercept + rng.normal(0.0, cfg.noise_sd);
      for (std::size_t k = 0; k < cfg.informative_indices.size(); ++k)
        label += effects[k] * x[cfg.informative_indices[k]];
      rd.raw_labels[j] = label;
      raw_lo = std::min(raw_lo, label);
      raw_hi = std::max(raw_hi, label);
    }
  }

  // Affine map of the pooled raw labels onto the glucose range. Degenerate
  // (constant) labels collapse to the midpoint.
  if (raw_hi > raw_lo) {
    result.truth.label_scale = (cfg.label_max - cfg.label_min) / (raw_hi - raw_lo);
    result.truth.label_offset = cfg.label_min - result.truth.label_scale * raw_lo;
  } else {
    result.truth.label_scale = 0.0;
    result.truth.label_offset = 0.5 * (cfg.label_min + cfg.label_max);
  }

  for (auto& rd : raw) {
    // Present each subject's session as a rise-then-fall glucose excursion:
    // ascending order stats on the way up, descending on the way down. The
    // sample set is untouched; only the within-domain ordering (and thus the
    // timestamps) reflects it, which keeps sparse label readings
    // interpolable.
    const std::size_t k = rd.raw_labels.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (rd.raw_labels[a] != rd.raw_labels[b])
        return rd.raw_labels[a] < rd.raw_labels[b];
      return a < b;
    });
    std::vector<std::size_t> tent;
    tent.reserve(k);
    for (std::size_t i = 0; i < k; i += 2) tent.push_back(order[i]);
    for (std::size_t i = (k % 2 == 0) ? k - 1 : k - 2; i < k; i -= 2) {
      tent.push_back(order[i]);
      if (i < 2) break;
    }

    DomainDataset ds;
    ds.domain_id = rd.id;
    ds.schema_id = result.schema.id;
    ds.samples.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = tent[j];
      Sample s;
      s.domain_id = rd.id;
      s.features.schema_id = result.schema.id;
      s.features.values = std::move(rd.features[src]);
      const double mapped = result.truth.label_scale * rd.raw_labels[src] +
                            result.truth.label_offset;
      s.label = std::clamp(mapped, cfg.label_min, cfg.label_max);
      s.timestamp = 60.0 * static_cast<double>(j);
      ds.samples.push_back(std::move(s));
    }
    validate_dataset(ds, result.schema);
    result.datasets.push_back(std::move(ds));
  }
  return result;
}

inline Json ground_truth_to_json(const GroundTruth& truth) {
  Json intercepts = Json::object();
  for (const auto& [id, b] : truth.domain_intercepts) intercepts[id] = b;
  Json effects = Json::object();
  for (const auto& [id, e] : truth.domain_effects) effects[id] = e;
  return Json{{"informative_indices", truth.informative_indices},
              {"effect_sizes", truth.effect_sizes},
              {"domain_effects", std::move(effects)},
              {"domain_intercepts", std::move(intercepts)},
              {"label_scale", truth.label_scale},
              {"label_offset", truth.label_offset}};
}

// ---------------------------------------------------------------------------
// Raw-stream emission, so the full ingest pipeline has something real to chew
// on. Per-domain aligned counts follow a fixed descending fraction pattern of
// samples_per_domain (for the 5 x 112 default: 112+108+101+97+91 = 509
// aligned rows). The mm-wave stream carries three decoy sweeps per gap with
// the true sweep jittered off the reference clock but always strictly
// nearest; the glucose stream keeps every fourth reading plus the endpoints.

struct RawEmissionOptions {
  double missing_rate = 0.01;   // fraction of mm-wave/NIR cells left empty
  std::size_t decoys_per_gap = 3;
};

namespace detail {

inline std::size_t aligned_count_for(std::size_t d, std::size_t samples) {
  constexpr double kPattern[5] = {1.0, 0.964, 0.902, 0.866, 0.813};
  const double f = kPattern[d % 5];
  const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(samples)));
  return std::clamp<std::size_t>(k, 2, samples);
}

}  // namespace detail

inline Manifest write_synth_bundle(const std::filesystem::path& dir,
                                   const SynthResult& result,
                                   const SynthConfig& cfg,
                                   const RawEmissionOptions& opt = {}) {
  require(opt.missing_rate >= 0.0 && opt.missing_rate < 0.5, "InvalidConfig",
          "missing_rate must lie in [0, 0.5)");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "raw");
  fs::create_directories(dir / "aligned");
  save_schema(dir / "schema.json", result.schema);
  write_text_file(dir / "ground_truth.json",
                  ground_truth_to_json(result.truth).dump(2) + "\n");

  const auto mm_cols = result.schema.indices_of(FeatureKind::kMmwaveS21);
  const auto nir_cols = result.schema.indices_of(FeatureKind::kNirTransmittance);
  std::vector<std::string> mm_names, nir_names;
  for (auto c : mm_cols) mm_names.push_back(result.schema.names[c]);
  for (auto c : nir_cols) nir_names.push_back(result.schema.names[c]);
  const std::vector<std::string> glucose_names = {"glucose"};

  Manifest manifest;
  manifest.schema_file = "schema.json";

  for (std::size_t d = 0; d < result.datasets.size(); ++d) {
    const DomainDataset& ds = result.datasets[d];
    save_dataset_csv(dir / "aligned" / (ds.domain_id + ".csv"), ds, result.schema);

    const std::size_t k = detail::aligned_count_for(d, ds.samples.size());
    Rng rng(derive_substream(cfg.seed, "raw-" + ds.domain_id));
    const double gap = 60.0;

    RawStream nir{StreamKind::kNir, {}};
    RawStream mmw{StreamKind::kMmwave, {}};
    RawStream glu{StreamKind::kGlucose, {}};
    const auto maybe_missing = [&](double v) {
      return rng.uniform() < opt.missing_rate
                 ? std::numeric_limits<double>::quiet_NaN()
                 : v;
    };

    for (std::size_t j = 0; j < k; ++j) {
      const Sample& s = ds.samples[j];
      const double t = *s.timestamp;

      StreamRecord nrec;
      nrec.timestamp = t;
      for (auto c : nir_cols) nrec.values.push_back(maybe_missing(s.features.values[c]));
      nir.records.push_back(std::move(nrec));

      StreamRecord mrec;
      mrec.timestamp = t + rng.uniform(-0.2 * gap, 0.2 * gap);
      for (auto c : mm_cols) mrec.values.push_back(maybe_missing(s.features.values[c]));
      mmw.records.push_back(std::move(mrec));

      if (j + 1 < k) {
        // Decoy sweeps sit at least 0.3 * gap from either reference tick, so
        // the jittered true sweep (within 0.2 * gap) always wins alignment.
        const Sample& next = ds.samples[j + 1];
        for (std::size_t q = 0; q < opt.decoys_per_gap; ++q) {
          const double frac = 0.3 + 0.4 * (opt.decoys_per_gap <= 1
                                               ? 0.5
                                               : static_cast<double>(q) /
                                                     static_cast<double>(opt.decoys_per_gap - 1));
          StreamRecord drec;
          drec.timestamp = t + frac * gap;
          for (auto c : mm_cols) {
            const double blend = frac * next.features.values[c] +
                                 (1.0 - frac) * s.features.values[c];
            drec.values.push_back(blend + 0.1 * rng.normal());
          }
          mmw.records.push_back(std::move(drec));
        }
      }

      if (j % 4 == 0 || j + 1 == k) {
        StreamRecord grec;
        grec.timestamp = t;
        grec.values.push_back(s.label);
        glu.records.push_back(std::move(grec));
      }
    }

    const std::string base = "raw/" + ds.domain_id;
    save_raw_stream_csv(dir / (base + "_nir.csv"), nir, nir_names);
    save_raw_stream_csv(dir / (base + "_mmwave.csv"), mmw, mm_names);
    save_raw_stream_csv(dir / (base + "_glucose.csv"), glu, glucose_names);
    manifest.streams.push_back({base + "_mmwave.csv", StreamKind::kMmwave, ds.domain_id});
    manifest.streams.push_back({base + "_nir.csv", StreamKind::kNir, ds.domain_id});
    manifest.streams.push_back({base + "_glucose.csv", StreamKind::kGlucose, ds.domain_id});
  }

  save_manifest(dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace glucodg

#endif  // GLUCODG_SYNTH_HPP_
