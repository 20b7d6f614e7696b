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
// Sensor-stream preprocessing: the three raw streams (mm-wave sweeps, NIR
// transmittance, glucose reference readings) arrive at different rates and
// with gaps. This module turns them into one aligned, imputed, normalized
// table per subject: mm-wave records are snapped to the NIR clock, missing
// cells become column means, and the sparse glucose readings are linearly
// interpolated onto the NIR timestamps.

#ifndef GLUCODG_INGEST_HPP_
#define GLUCODG_INGEST_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "glucodg/core.hpp"

namespace glucodg {

enum class StreamKind { kMmwave, kNir, kGlucose };

inline std::string to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::kMmwave: return "mmwave";
    case StreamKind::kNir: return "nir";
    case StreamKind::kGlucose: return "glucose";
  }
  fail("InvalidKind", "unknown stream kind");
}

inline StreamKind stream_kind_from_string(std::string_view s) {
  if (s == "mmwave") return StreamKind::kMmwave;
  if (s == "nir") return StreamKind::kNir;
  if (s == "glucose") return StreamKind::kGlucose;
  fail("InvalidKind", "unknown stream kind '" + std::string(s) + "'");
}

// Missing cells are stored as NaN until impute_means runs.
struct StreamRecord {
  double timestamp = 0.0;
  std::vector<double> values;
};

struct RawStream {
  StreamKind kind = StreamKind::kMmwave;
  std::vector<StreamRecord> records;

  std::size_t width() const {
    return records.empty() ? 0 : records.front().values.size();
  }
};

inline void validate_stream(const RawStream& stream) {
  double prev = -std::numeric_limits<double>::infinity();
  const std::size_t w = stream.width();
  for (const auto& rec : stream.records) {
    require(std::isfinite(rec.timestamp), "NonFiniteValue",
            "stream timestamp must be finite");
    require(rec.timestamp > prev, "UnsortedStream",
            "timestamps must be strictly increasing");
    require(rec.values.size() == w, "SchemaMismatch",
            "ragged stream: record width " + std::to_string(rec.values.size()) +
                " vs " + std::to_string(w));
    prev = rec.timestamp;
  }
}

// Replaces every missing cell with the mean of the present values in its
// column. A column with no present values at all cannot be imputed.
inline RawStream impute_means(const RawStream& stream) {
  validate_stream(stream);
  RawStream out = stream;
  const std::size_t w = stream.width();
  for (std::size_t c = 0; c < w; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& rec : stream.records) {
      if (!std::isnan(rec.values[c])) {
        sum += rec.values[c];
        ++count;
      }
    }
    if (count == stream.records.size()) continue;  // nothing missing here
    require(count > 0, "AllMissingColumn",
            "column " + std::to_string(c) + " has no present values");
    const double mean = sum / static_cast<double>(count);
    for (auto& rec : out.records)
      if (std::isnan(rec.values[c])) rec.values[c] = mean;
  }
  return out;
}

// For every reference timestamp, keeps the single record of `other` with the
// smallest absolute time offset (ties go to the earlier record). The output
// carries the reference timestamps, so aligning an already-aligned stream is
// the identity.
inline RawStream align_nearest(const RawStream& reference,
                               const RawStream& other) {
  validate_stream(reference);
  validate_stream(other);
  require(!reference.records.empty(), "EmptyStream", "empty reference stream");
  require(!other.records.empty(), "EmptyStream", "empty stream to align");
  RawStream out;
  out.kind = other.kind;
  out.records.reserve(reference.records.size());
  std::size_t j = 0;
  for (const auto& ref : reference.records) {
    // Both streams ascend, so the best match index never moves backwards.
    while (j + 1 < other.records.size() &&
           std::abs(other.records[j + 1].timestamp - ref.timestamp) <
               std::abs(other.records[j].timestamp - ref.timestamp)) {
      ++j;
    }
    StreamRecord rec;
    rec.timestamp = ref.timestamp;
    rec.values = other.records[j].values;
    out.records.push_back(std::move(rec));
  }
  return out;
}

// Linear interpolation of the glucose readings at the query times:
//
//   G(t) = G_i + (t - T_i) * (G_{i+1} - G_i) / (T_{i+1} - T_i)
//
// The slope keeps its sign, so decreasing glucose segments interpolate
// downwards; queries at record times reproduce the recorded value exactly.
inline std::vector<double> interpolate_labels(const RawStream& glucose,
                                              std::span<const double> query_times) {
  validate_stream(glucose);
  require(glucose.width() == 1, "SchemaMismatch",
          "glucose stream must have exactly one value column");
  require(glucose.records.size() >= 2, "TooFewSamples",
          "need at least two glucose readings to interpolate");
  const auto& recs = glucose.records;
  std::vector<double> out;
  out.reserve(query_times.size());
  for (double t : query_times) {
    require(t >= recs.front().timestamp && t <= recs.back().timestamp,
            "OutOfRange",
            "query time " + std::to_string(t) + " outside glucose span [" +
                std::to_string(recs.front().timestamp) + ", " +
                std::to_string(recs.back().timestamp) + "]");
    // Last segment whose start is <= t.
    std::size_t i =
        static_cast<std::size_t>(
            std::upper_bound(recs.begin(), recs.end(), t,
                             [](double q, const StreamRecord& r) {
                               return q < r.timestamp;
                             }) -
            recs.begin());
    if (i > 0) --i;
    if (i + 1 >= recs.size()) i = recs.size() - 2;
    const double t0 = recs[i].timestamp;
    const double t1 = recs[i + 1].timestamp;
    require(t1 != t0, "DegenerateInterval",
            "glucose readings share timestamp " + std::to_string(t0));
    if (t == t0) {
      out.push_back(recs[i].values[0]);
    } else if (t == t1) {
      out.push_back(recs[i + 1].values[0]);
    } else {
      const double g0 = recs[i].values[0];
      const double g1 = recs[i + 1].values[0];
      out.push_back(g0 + (t - t0) * (g1 - g0) / (t1 - t0));
    }
  }
  return out;
}

// Per-feature z-score parameters. Population convention (divide by n).
// Features with no spread cannot be scaled and are dropped on apply; their
// indices are kept here so runs can report what was removed.
struct NormalizationStats {
  std::string schema_id;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> retained;        // indices with usable spread
  std::vector<std::size_t> zero_variance;   // flagged, dropped on apply
  std::vector<std::string> fitted_on;       // domain ids the stats came from

  bool drops_features() const { return !zero_variance.empty(); }
};

inline NormalizationStats fit_normalization(std::span<const DomainDataset> datasets,
                                            const FeatureSchema& schema) {
  validate_schema(schema);
  std::size_t total = 0;
  for (const auto& ds : datasets) {
    validate_dataset(ds, schema);
    total += ds.samples.size();
  }
  require(total >= 2, "TooFewSamples",
          "normalization needs at least two pooled samples, got " +
              std::to_string(total));
  const std::size_t p = schema.size();
  NormalizationStats stats;
  stats.schema_id = schema.id;
  stats.mean.assign(p, 0.0);
  stats.stddev.assign(p, 0.0);
  for (const auto& ds : datasets) stats.fitted_on.push_back(ds.domain_id);

  for (const auto& ds : datasets)
    for (const auto& s : ds.samples)
      for (std::size_t c = 0; c < p; ++c) stats.mean[c] += s.features.values[c];
  for (std::size_t c = 0; c < p; ++c) stats.mean[c] /= static_cast<double>(total);

  for (const auto& ds : datasets)
    for (const auto& s : ds.samples)
      for (std::size_t c = 0; c < p; ++c) {
        const double d = s.features.values[c] - stats.mean[c];
        stats.stddev[c] += d * d;
      }
  for (std::size_t c = 0; c < p; ++c)
    stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(total));

  for (std::size_t c = 0; c < p; ++c) {
    // Constant columns can land at a few ulps instead of exactly zero; treat
    // spread that is negligible against the column magnitude as zero.
    const double floor = 1e-12 * std::max(1.0, std::abs(stats.mean[c]));
    if (stats.stddev[c] <= floor)
      stats.zero_variance.push_back(c);
    else
      stats.retained.push_back(c);
  }
  require(!stats.retained.empty(), "ZeroVariance",
          "every feature column is constant");
  return stats;
}

inline FeatureSchema normalized_schema(const NormalizationStats& stats,
                                       const FeatureSchema& schema) {
  require(schema.id == stats.schema_id, "SchemaMismatch",
          "stats fitted on '" + stats.schema_id + "', got '" + schema.id + "'");
  if (!stats.drops_features()) return schema;
  return subset_schema(schema, stats.retained, "z");
}

// Applies (x - mean) / stddev per retained feature. Labels and timestamps are
// untouched. When columns were flagged zero-variance the output follows the
// reduced schema from normalized_schema().
inline DomainDataset apply_normalization(const NormalizationStats& stats,
                                         const DomainDataset& dataset) {
  require(dataset.schema_id == stats.schema_id, "SchemaMismatch",
          "stats fitted on '" + stats.schema_id + "', dataset has '" +
              dataset.schema_id + "'");
  const std::string out_schema_id =
      stats.drops_features() ? stats.schema_id + "#z" : stats.schema_id;
  DomainDataset out;
  out.domain_id = dataset.domain_id;
  out.schema_id = out_schema_id;
  out.samples.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    require(s.features.values.size() == stats.mean.size(), "SchemaMismatch",
            "feature count mismatch during normalization");
    Sample ns;
    ns.features.schema_id = out_schema_id;
    ns.features.values.reserve(stats.retained.size());
    for (std::size_t c : stats.retained)
      ns.features.values.push_back((s.features.values[c] - stats.mean[c]) /
                                   stats.stddev[c]);
    ns.label = s.label;
    ns.timestamp = s.timestamp;
    ns.domain_id = s.domain_id;
    out.samples.push_back(std::move(ns));
  }
  return out;
}

// Undoes apply_normalization. Only defined when no columns were dropped
// (dropped constants are not recoverable).
inline DomainDataset invert_normalization(const NormalizationStats& stats,
                                          const DomainDataset& dataset) {
  require(!stats.drops_features(), "ZeroVariance",
          "cannot invert: zero-variance columns were dropped");
  require(dataset.schema_id == stats.schema_id, "SchemaMismatch",
          "stats fitted on '" + stats.schema_id + "', dataset has '" +
              dataset.schema_id + "'");
  DomainDataset out = dataset;
  for (auto& s : out.samples)
    for (std::size_t c = 0; c < stats.retained.size(); ++c) {
      const std::size_t idx = stats.retained[c];
      s.features.values[c] = s.features.values[c] * stats.stddev[idx] + stats.mean[idx];
    }
  return out;
}

// One aligned row per NIR record: snapped mm-wave features, the NIR features
// themselves, and the glucose label interpolated at the NIR timestamp.
// Imputation runs after alignment so column means reflect the records that
// actually survive.
inline DomainDataset build_aligned_dataset(const RawStream& mmwave,
                                           const RawStream& nir,
                                           const RawStream& glucose,
                                           const std::string& domain_id,
                                           const FeatureSchema& schema) {
  validate_schema(schema);
  require(mmwave.kind == StreamKind::kMmwave && nir.kind == StreamKind::kNir &&
              glucose.kind == StreamKind::kGlucose,
          "InvalidKind", "streams passed in the wrong order");
  require(!mmwave.records.empty(), "EmptyStream", "mm-wave stream is empty");
  require(!nir.records.empty(), "EmptyStream", "NIR stream is empty");
  require(!glucose.records.empty(), "EmptyStream", "glucose stream is empty");
  require(schema.size() == mmwave.width() + nir.width(), "SchemaMismatch",
          "schema expects " + std::to_string(schema.size()) +
              " features, streams provide " +
              std::to_string(mmwave.width() + nir.width()));

  const RawStream mm_aligned = impute_means(align_nearest(nir, mmwave));
  const RawStream nir_imputed = impute_means(nir);
  const RawStream glu_imputed = impute_means(glucose);

  std::vector<double> times;
  times.reserve(nir.records.size());
  for (const auto& rec : nir.records) times.push_back(rec.timestamp);
  const std::vector<double> labels = interpolate_labels(glu_imputed, times);

  DomainDataset out;
  out.domain_id = domain_id;
  out.schema_id = schema.id;
  out.samples.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    Sample s;
    s.features.schema_id = schema.id;
    s.features.values = mm_aligned.records[i].values;
    s.features.values.insert(s.features.values.end(),
                             nir_imputed.records[i].values.begin(),
                             nir_imputed.records[i].values.end());
    require(std::isfinite(labels[i]) && labels[i] > 0.0, "NonPositiveLabel",
            "interpolated label " + std::to_string(labels[i]) +
                " is not a positive glucose value");
    s.label = labels[i];
    s.timestamp = times[i];
    s.domain_id = domain_id;
    out.samples.push_back(std::move(s));
  }
  validate_dataset(out, schema);
  return out;
}

}  // namespace glucodg

#endif  // GLUCODG_INGEST_HPP_
