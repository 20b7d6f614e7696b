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
// End-to-end data preparation: raw sensor streams in a manifest are aligned
// per subject, pooled z-score normalization is fit and applied, and small
// domains are balanced up to the largest one with convex sample mixing.

#ifndef GLUCODG_PIPELINE_HPP_
#define GLUCODG_PIPELINE_HPP_

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "glucodg/core.hpp"
#include "glucodg/ingest.hpp"
#include "glucodg/io.hpp"
#include "glucodg/mixup.hpp"

namespace glucodg {

struct PrepareOptions {
  bool normalize = true;
  bool augment = true;
  // 0 balances every domain up to the largest one.
  std::size_t target_per_domain = 0;
  double mixup_alpha = 0.4;
  RngSeed seed;
};

struct PreparedData {
  FeatureSchema schema;            // post-normalization (zero-variance drops)
  NormalizationStats stats;        // empty retained list when normalize=false
  std::vector<DomainDataset> datasets;
  std::vector<std::size_t> aligned_counts;  // per domain, before augmentation
};

// Groups manifest entries by domain in first-appearance order and aligns each
// subject's three streams onto the NIR clock.
inline std::vector<DomainDataset> align_bundle(const std::filesystem::path& dir,
                                               const Manifest& manifest,
                                               const FeatureSchema& schema) {
  struct Entry {
    const ManifestEntry* mmwave = nullptr;
    const ManifestEntry* nir = nullptr;
    const ManifestEntry* glucose = nullptr;
  };
  std::vector<std::string> order;
  std::map<std::string, Entry> by_domain;
  for (const auto& e : manifest.streams) {
    auto [it, inserted] = by_domain.try_emplace(e.domain_id);
    if (inserted) order.push_back(e.domain_id);
    const ManifestEntry** slot = e.kind == StreamKind::kMmwave ? &it->second.mmwave
                                 : e.kind == StreamKind::kNir  ? &it->second.nir
                                                               : &it->second.glucose;
    require(*slot == nullptr, "DuplicateStream",
            "domain " + e.domain_id + " lists two " + to_string(e.kind) + " streams");
    *slot = &e;
  }
  std::vector<DomainDataset> datasets;
  datasets.reserve(order.size());
  for (const auto& id : order) {
    const Entry& entry = by_domain.at(id);
    require(entry.mmwave && entry.nir && entry.glucose, "MissingStream",
            "domain " + id + " needs mm-wave, NIR, and glucose streams");
    const auto mmwave = load_raw_stream_csv(dir / entry.mmwave->file, StreamKind::kMmwave);
    const auto nir = load_raw_stream_csv(dir / entry.nir->file, StreamKind::kNir);
    const auto glucose = load_raw_stream_csv(dir / entry.glucose->file, StreamKind::kGlucose);
    datasets.push_back(build_aligned_dataset(mmwave, nir, glucose, id, schema));
  }
  return datasets;
}

inline PreparedData prepare_datasets(std::span<const DomainDataset> aligned,
                                     const FeatureSchema& schema,
                                     const PrepareOptions& opt = {}) {
  require(!aligned.empty(), "EmptyDataset", "no domains to prepare");
  PreparedData out;
  out.schema = schema;
  out.datasets.assign(aligned.begin(), aligned.end());
  for (const auto& ds : aligned) out.aligned_counts.push_back(ds.samples.size());

  if (opt.normalize) {
    out.stats = fit_normalization(out.datasets, schema);
    out.schema = normalized_schema(out.stats, schema);
    for (auto& ds : out.datasets) ds = apply_normalization(out.stats, ds);
  }

  if (opt.augment) {
    std::size_t target = opt.target_per_domain;
    if (target == 0)
      for (const auto& ds : out.datasets)
        target = std::max(target, ds.samples.size());
    MixupConfig mix;
    mix.alpha = opt.mixup_alpha;
    mix.target_count_per_domain = target;
    mix.seed = opt.seed;
    out.datasets = balance_domains(out.datasets, mix);
  }
  return out;
}

inline PreparedData prepare_bundle(const std::filesystem::path& dir,
                                   const PrepareOptions& opt = {}) {
  const Manifest manifest = load_manifest(dir / "manifest.json");
  const FeatureSchema schema = load_schema(dir / manifest.schema_file);
  const auto aligned = align_bundle(dir, manifest, schema);
  return prepare_datasets(aligned, schema, opt);
}

inline Json normalization_to_json(const NormalizationStats& stats) {
  return Json{{"schema_id", stats.schema_id},
              {"fitted_on", stats.fitted_on},
              {"mean", stats.mean},
              {"stddev", stats.stddev},
              {"retained", stats.retained},
              {"zero_variance", stats.zero_variance}};
}

inline NormalizationStats normalization_from_json(const Json& j) {
  NormalizationStats stats;
  stats.schema_id = j.at("schema_id").get<std::string>();
  stats.fitted_on = j.at("fitted_on").get<std::vector<std::string>>();
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.stddev = j.at("stddev").get<std::vector<double>>();
  stats.retained = j.at("retained").get<std::vector<std::size_t>>();
  stats.zero_variance = j.at("zero_variance").get<std::vector<std::size_t>>();
  return stats;
}

// Writes schema.json, data.csv, normalization.json into `dir`.
inline void save_prepared(const std::filesystem::path& dir, const PreparedData& prepared) {
  std::filesystem::create_directories(dir);
  save_schema(dir / "schema.json", prepared.schema);
  save_dataset_csv(dir / "data.csv", prepared.datasets, prepared.schema);
  write_text_file(dir / "normalization.json",
                  normalization_to_json(prepared.stats).dump(2) + "\n");
}

inline PreparedData load_prepared(const std::filesystem::path& dir) {
  PreparedData out;
  out.schema = load_schema(dir / "schema.json");
  out.datasets = load_dataset_csv(dir / "data.csv", out.schema);
  out.stats = normalization_from_json(
      Json::parse(read_text_file(dir / "normalization.json")));
  for (const auto& ds : out.datasets) out.aligned_counts.push_back(ds.samples.size());
  return out;
}

}  // namespace glucodg

#endif  // GLUCODG_PIPELINE_HPP_
