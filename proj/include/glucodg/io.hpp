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
// File formats. Everything on disk is plain CSV or JSON:
//   sample CSV     domain_id,timestamp,label,<feature columns per schema>
//   raw stream CSV timestamp,<value columns>        (empty cell = missing)
//   schema JSON    feature names, units and sensor kinds
//   manifest JSON  maps raw stream files to {kind, domain_id}
// Doubles are written with the shortest representation that parses back to
// the identical bits, so save/load round-trips are exact byte-for-byte.

#ifndef GLUCODG_IO_HPP_
#define GLUCODG_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "glucodg/core.hpp"
#include "glucodg/ingest.hpp"

namespace glucodg {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(),
          "ParseError", "bad numeric cell '" + std::string(s) + "'");
  return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "FileError", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "FileError", "cannot write " + path.string());
  out << content;
  require(out.good(), "FileError", "short write to " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
    cells.back().pop_back();
  return cells;
}

inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) rows.push_back(split_csv_line(text.substr(start, end - start)));
    start = end + 1;
  }
  require(!rows.empty(), "ParseError", "empty CSV file " + path.string());
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Schema

inline Json schema_to_json(const FeatureSchema& schema) {
  validate_schema(schema);
  Json features = Json::array();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    features.push_back({{"name", schema.names[i]},
                        {"unit", schema.units[i]},
                        {"kind", to_string(schema.kinds[i])}});
  }
  return Json{{"id", schema.id}, {"features", std::move(features)}};
}

inline FeatureSchema schema_from_json(const Json& j) {
  FeatureSchema schema;
  require(j.contains("id") && j.contains("features"), "ParseError",
          "schema JSON needs 'id' and 'features'");
  schema.id = j.at("id").get<std::string>();
  for (const auto& f : j.at("features")) {
    schema.names.push_back(f.at("name").get<std::string>());
    schema.units.push_back(f.at("unit").get<std::string>());
    schema.kinds.push_back(feature_kind_from_string(f.at("kind").get<std::string>()));
  }
  validate_schema(schema);
  return schema;
}

inline void save_schema(const std::filesystem::path& path,
                        const FeatureSchema& schema) {
  write_text_file(path, schema_to_json(schema).dump(2) + "\n");
}

inline FeatureSchema load_schema(const std::filesystem::path& path) {
  return schema_from_json(Json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// Sample datasets

inline void save_dataset_csv(const std::filesystem::path& path,
                             std::span<const DomainDataset> datasets,
                             const FeatureSchema& schema) {
  std::ostringstream out;
  out << "domain_id,timestamp,label";
  for (const auto& n : schema.names) out << ',' << n;
  out << '\n';
  for (const auto& ds : datasets) {
    validate_dataset(ds, schema);
    for (const auto& s : ds.samples) {
      out << s.domain_id << ',';
      if (s.timestamp) out << format_double(*s.timestamp);
      out << ',' << format_double(s.label);
      for (double v : s.features.values) out << ',' << format_double(v);
      out << '\n';
    }
  }
  write_text_file(path, out.str());
}

inline void save_dataset_csv(const std::filesystem::path& path,
                             const DomainDataset& dataset,
                             const FeatureSchema& schema) {
  save_dataset_csv(path, std::span<const DomainDataset>(&dataset, 1), schema);
}

// Rows are grouped into one DomainDataset per domain_id, in order of first
// appearance. Timestamps may be empty (absent); labels and features may not.
inline std::vector<DomainDataset> load_dataset_csv(
    const std::filesystem::path& path, const FeatureSchema& schema) {
  validate_schema(schema);
  const auto rows = detail::read_csv(path);
  const auto& header = rows.front();
  require(header.size() == 3 + schema.size(), "SchemaMismatch",
          path.string() + ": header has " + std::to_string(header.size()) +
              " columns, schema expects " + std::to_string(3 + schema.size()));
  require(header[0] == "domain_id" && header[1] == "timestamp" &&
              header[2] == "label",
          "ParseError", path.string() + ": bad header prefix");
  for (std::size_t c = 0; c < schema.size(); ++c)
    require(header[3 + c] == schema.names[c], "SchemaMismatch",
            path.string() + ": column '" + header[3 + c] +
                "' does not match schema feature '" + schema.names[c] + "'");

  std::vector<DomainDataset> datasets;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    require(cells.size() == header.size(), "ParseError",
            path.string() + ": row " + std::to_string(r) + " has " +
                std::to_string(cells.size()) + " cells");
    Sample s;
    s.domain_id = cells[0];
    require(!s.domain_id.empty(), "ParseError", "empty domain_id cell");
    if (!cells[1].empty()) s.timestamp = parse_double(cells[1]);
    require(!cells[2].empty(), "ParseError", "missing label cell");
    s.label = parse_double(cells[2]);
    s.features.schema_id = schema.id;
    s.features.values.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      require(!cells[3 + c].empty(), "ParseError",
              "missing feature cell in sample row (feature '" +
                  schema.names[c] + "'); sample tables must be complete");
      s.features.values.push_back(parse_double(cells[3 + c]));
    }
    auto it = std::find_if(datasets.begin(), datasets.end(),
                           [&](const DomainDataset& d) {
                             return d.domain_id == s.domain_id;
                           });
    if (it == datasets.end()) {
      datasets.push_back(DomainDataset{s.domain_id, schema.id, {}});
      it = datasets.end() - 1;
    }
    it->samples.push_back(std::move(s));
  }
  for (const auto& ds : datasets) validate_dataset(ds, schema);
  return datasets;
}

// ---------------------------------------------------------------------------
// Raw streams

inline void save_raw_stream_csv(const std::filesystem::path& path,
                                const RawStream& stream,
                                std::span<const std::string> column_names) {
  validate_stream(stream);
  require(column_names.size() == stream.width() || stream.records.empty(),
          "SchemaMismatch", "column name count does not match stream width");
  std::ostringstream out;
  out << "timestamp";
  for (const auto& n : column_names) out << ',' << n;
  out << '\n';
  for (const auto& rec : stream.records) {
    out << format_double(rec.timestamp);
    for (double v : rec.values) {
      out << ',';
      if (!std::isnan(v)) out << format_double(v);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline RawStream load_raw_stream_csv(const std::filesystem::path& path,
                                     StreamKind kind) {
  const auto rows = detail::read_csv(path);
  const auto& header = rows.front();
  require(!header.empty() && header[0] == "timestamp", "ParseError",
          path.string() + ": first column must be 'timestamp'");
  RawStream stream;
  stream.kind = kind;
  stream.records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    require(cells.size() == header.size(), "ParseError",
            path.string() + ": row " + std::to_string(r) + " has " +
                std::to_string(cells.size()) + " cells, header has " +
                std::to_string(header.size()));
    StreamRecord rec;
    require(!cells[0].empty(), "ParseError", "missing timestamp cell");
    rec.timestamp = parse_double(cells[0]);
    rec.values.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c)
      rec.values.push_back(cells[c].empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : parse_double(cells[c]));
    stream.records.push_back(std::move(rec));
  }
  validate_stream(stream);
  return stream;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string file;  // relative to the manifest's directory
  StreamKind kind = StreamKind::kMmwave;
  std::string domain_id;
};

struct Manifest {
  std::string schema_file;
  std::vector<ManifestEntry> streams;
};

inline Json manifest_to_json(const Manifest& manifest) {
  Json streams = Json::array();
  for (const auto& e : manifest.streams)
    streams.push_back({{"file", e.file},
                       {"kind", to_string(e.kind)},
                       {"domain_id", e.domain_id}});
  return Json{{"schema_file", manifest.schema_file},
              {"streams", std::move(streams)}};
}

inline Manifest manifest_from_json(const Json& j) {
  Manifest m;
  require(j.contains("schema_file") && j.contains("streams"), "ParseError",
          "manifest JSON needs 'schema_file' and 'streams'");
  m.schema_file = j.at("schema_file").get<std::string>();
  for (const auto& e : j.at("streams")) {
    ManifestEntry entry;
    entry.file = e.at("file").get<std::string>();
    entry.kind = stream_kind_from_string(e.at("kind").get<std::string>());
    entry.domain_id = e.at("domain_id").get<std::string>();
    require(!entry.domain_id.empty(), "ParseError", "empty domain_id in manifest");
    m.streams.push_back(std::move(entry));
  }
  return m;
}

inline void save_manifest(const std::filesystem::path& path,
                          const Manifest& manifest) {
  write_text_file(path, manifest_to_json(manifest).dump(2) + "\n");
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(Json::parse(read_text_file(path)));
}

}  // namespace glucodg

#endif  // GLUCODG_IO_HPP_
