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

#ifndef GLUCODG_CORE_HPP_
#define GLUCODG_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace glucodg {

// All recoverable failures are thrown as Error with a stable machine-readable
// code ("SchemaMismatch", "OutOfRange", ...) so callers and tests can match on
// the code instead of parsing prose.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
  throw Error(std::move(code), message);
}

inline void require(bool ok, const char* code, const std::string& message) {
  if (!ok) fail(code, message);
}

enum class FeatureKind {
  kMmwaveS21,          // mm-wave S21 transmission coefficient, one per frequency
  kNirTransmittance,   // near-infrared transmittance, one per wavelength
};

inline std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMmwaveS21: return "mmwave_s21";
    case FeatureKind::kNirTransmittance: return "nir_transmittance";
  }
  fail("InvalidKind", "unknown feature kind");
}

inline FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "mmwave_s21") return FeatureKind::kMmwaveS21;
  if (s == "nir_transmittance") return FeatureKind::kNirTransmittance;
  fail("InvalidKind", "unknown feature kind '" + std::string(s) + "'");
}

// Binds feature positions to names, units and sensor kinds. The id travels
// with every FeatureVector so that models refuse inputs from a different
// feature layout.
struct FeatureSchema {
  std::string id;
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<FeatureKind> kinds;

  std::size_t size() const { return names.size(); }

  std::vector<std::size_t> indices_of(FeatureKind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < kinds.size(); ++i)
      if (kinds[i] == kind) out.push_back(i);
    return out;
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    fail("UnknownFeature", "no feature named '" + std::string(name) + "'");
  }
};

inline void validate_schema(const FeatureSchema& schema) {
  require(!schema.id.empty(), "InvalidSchema", "schema id must be nonempty");
  require(schema.names.size() == schema.units.size() &&
              schema.names.size() == schema.kinds.size(),
          "InvalidSchema", "names/units/kinds must have equal length");
  require(!schema.names.empty(), "InvalidSchema", "schema has no features");
  std::unordered_set<std::string> seen;
  for (const auto& n : schema.names) {
    require(!n.empty(), "InvalidSchema", "feature name must be nonempty");
    require(n.find(',') == std::string::npos, "InvalidSchema",
            "feature name must not contain a comma: '" + n + "'");
    require(seen.insert(n).second, "InvalidSchema",
            "duplicate feature name '" + n + "'");
  }
}

struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;
};

struct Sample {
  FeatureVector features;
  double label = 0.0;                  // glucose concentration, mg/dL; > 0
  std::optional<double> timestamp;     // seconds; absent for synthetic mixes
  std::string domain_id;               // subject the sample came from
};

struct DomainDataset {
  std::string domain_id;
  std::string schema_id;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

inline void validate_dataset(const DomainDataset& ds,
                             const FeatureSchema& schema) {
  require(!ds.samples.empty(), "EmptyDataset",
          "domain '" + ds.domain_id + "' has no samples");
  require(ds.schema_id == schema.id, "SchemaMismatch",
          "dataset schema '" + ds.schema_id + "' vs '" + schema.id + "'");
  for (const auto& s : ds.samples) {
    require(s.domain_id == ds.domain_id, "DomainMismatch",
            "sample from '" + s.domain_id + "' inside domain '" +
                ds.domain_id + "'");
    require(s.features.schema_id == schema.id, "SchemaMismatch",
            "sample schema '" + s.features.schema_id + "'");
    require(s.features.values.size() == schema.size(), "SchemaMismatch",
            "feature count " + std::to_string(s.features.values.size()) +
                " vs schema " + std::to_string(schema.size()));
    for (double v : s.features.values)
      require(std::isfinite(v), "NonFiniteValue", "non-finite feature value");
    require(std::isfinite(s.label) && s.label > 0.0, "NonPositiveLabel",
            "label must be finite and > 0, got " + std::to_string(s.label));
  }
}

// Keep a subset of feature columns, producing a schema whose id records the
// derivation so stale FeatureVectors cannot silently flow into a model fit on
// different columns.
inline FeatureSchema subset_schema(const FeatureSchema& schema,
                                   std::span<const std::size_t> keep,
                                   const std::string& tag) {
  FeatureSchema out;
  out.id = schema.id + "#" + tag;
  for (std::size_t idx : keep) {
    require(idx < schema.size(), "OutOfRange",
            "feature index " + std::to_string(idx) + " out of range");
    out.names.push_back(schema.names[idx]);
    out.units.push_back(schema.units[idx]);
    out.kinds.push_back(schema.kinds[idx]);
  }
  validate_schema(out);
  return out;
}

inline std::vector<DomainDataset> subset_datasets(
    std::span<const DomainDataset> datasets, std::span<const std::size_t> keep,
    const FeatureSchema& new_schema) {
  std::vector<DomainDataset> out;
  out.reserve(datasets.size());
  for (const auto& ds : datasets) {
    DomainDataset nds;
    nds.domain_id = ds.domain_id;
    nds.schema_id = new_schema.id;
    nds.samples.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
      Sample ns;
      ns.features.schema_id = new_schema.id;
      ns.features.values.reserve(keep.size());
      for (std::size_t idx : keep) ns.features.values.push_back(s.features.values[idx]);
      ns.label = s.label;
      ns.timestamp = s.timestamp;
      ns.domain_id = s.domain_id;
      nds.samples.push_back(std::move(ns));
    }
    out.push_back(std::move(nds));
  }
  return out;
}

inline std::vector<Sample> pool_samples(std::span<const DomainDataset> datasets) {
  std::vector<Sample> out;
  std::size_t total = 0;
  for (const auto& ds : datasets) total += ds.samples.size();
  out.reserve(total);
  for (const auto& ds : datasets)
    out.insert(out.end(), ds.samples.begin(), ds.samples.end());
  return out;
}

}  // namespace glucodg

#endif  // GLUCODG_CORE_HPP_
