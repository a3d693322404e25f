// Copyright 2026 The picket Authors
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

#include "picket/corpus_filter.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "picket/manifest.hpp"
#include "picket/rng.hpp"

namespace picket {

using nlohmann::ordered_json;

void validate_captioned_row(const CaptionedImageRow& row) {
  if (row.id.empty()) {
    throw Error(Errc::parse_error, "corpus row with empty id");
  }
  if (row.scores.empty()) {
    throw Error(Errc::parse_error,
                "corpus row '" + row.id + "' carries no category scores");
  }
  for (const auto& [category, p] : row.scores) {
    if (category.empty()) {
      throw Error(Errc::parse_error,
                  "corpus row '" + row.id + "' has an empty category name");
    }
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(Errc::out_of_range, "corpus row '" + row.id +
                                          "' category '" + category +
                                          "' probability outside [0, 1]");
    }
  }
}

void validate_filter_config(const FilterConfig& cfg) {
  if (!std::isfinite(cfg.threshold) || cfg.threshold < 0.0 ||
      cfg.threshold >= 1.0) {
    throw Error(Errc::threshold_out_of_range,
                "filter threshold must lie in [0, 1)");
  }
  if (cfg.sample_size == 0) {
    throw Error(Errc::out_of_range, "sample_size must be at least 1");
  }
}

bool row_retained(const CaptionedImageRow& row, const FilterConfig& cfg) {
  validate_captioned_row(row);
  for (const auto& [category, p] : row.scores) {
    if (cfg.inclusive ? p >= cfg.threshold : p > cfg.threshold) return true;
  }
  return false;
}

std::vector<CaptionedImageRow> filter_rows(
    const std::vector<CaptionedImageRow>& rows, const FilterConfig& cfg) {
  validate_filter_config(cfg);
  std::vector<CaptionedImageRow> retained;
  for (const auto& row : rows) {
    if (row_retained(row, cfg)) retained.push_back(row);
  }
  return retained;
}

std::vector<CaptionedImageRow> sample_rows(
    const std::vector<CaptionedImageRow>& rows, const FilterConfig& cfg) {
  validate_filter_config(cfg);
  if (rows.size() < cfg.sample_size) {
    throw Error(Errc::not_enough_rows,
                "have " + std::to_string(rows.size()) + " rows, need " +
                    std::to_string(cfg.sample_size));
  }
  std::mt19937_64 rng(cfg.seed);
  auto indices =
      sample_indices_without_replacement(rng, rows.size(), cfg.sample_size);
  std::vector<CaptionedImageRow> sample;
  sample.reserve(indices.size());
  for (std::size_t index : indices) sample.push_back(rows[index]);
  return sample;
}

std::string to_json_line(const CaptionedImageRow& row) {
  ordered_json j;
  j["id"] = row.id;
  j["uri"] = row.uri;
  j["caption"] = row.caption;
  j["scores"] = ordered_json::object();
  for (const auto& [category, p] : row.scores) j["scores"][category] = p;
  return j.dump();
}

namespace {

CaptionedImageRow row_from_json(const ordered_json& j) {
  if (!j.is_object()) {
    throw Error(Errc::parse_error, "corpus row must be a JSON object");
  }
  CaptionedImageRow row;
  try {
    row.id = j.at("id").get<std::string>();
    if (j.contains("uri")) row.uri = j["uri"].get<std::string>();
    if (j.contains("caption")) row.caption = j["caption"].get<std::string>();
    for (const auto& [category, p] : j.at("scores").items()) {
      if (!p.is_number()) {
        throw Error(Errc::parse_error, "corpus row '" + row.id +
                                           "' score for '" + category +
                                           "' must be a number");
      }
      row.scores[category] = p.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus row: ") + e.what());
  }
  validate_captioned_row(row);
  return row;
}

}  // namespace

CaptionedImageRow captioned_row_from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus row: ") + e.what());
  }
  return row_from_json(j);
}

std::vector<CaptionedImageRow> read_caption_manifest(std::istream& in) {
  std::vector<CaptionedImageRow> rows;
  for_each_record(in, [&](std::size_t line, const ordered_json& record) {
    try {
      rows.push_back(row_from_json(record));
    } catch (const Error& e) {
      throw Error(e.code(),
                  "line " + std::to_string(line) + ": " + e.what());
    }
  });
  return rows;
}

std::string write_caption_manifest(
    const std::vector<CaptionedImageRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += to_json_line(row);
    out += '\n';
  }
  return out;
}

std::vector<CaptionedImageRow> filter_and_sample_stream(
    std::istream& in, const FilterConfig& cfg, StreamSampleStats* stats) {
  validate_filter_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<CaptionedImageRow> reservoir;
  reservoir.reserve(cfg.sample_size);
  StreamSampleStats local;

  for_each_record(in, [&](std::size_t line, const ordered_json& record) {
    ++local.scanned;
    CaptionedImageRow row;
    try {
      row = row_from_json(record);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what());
    }
    if (!row_retained(row, cfg)) return;
    ++local.retained;
    if (reservoir.size() < cfg.sample_size) {
      reservoir.push_back(std::move(row));
      return;
    }
    // Algorithm R: the n-th retained row replaces a random slot with
    // probability sample_size/n.
    std::size_t slot = uniform_index(rng, local.retained);
    if (slot < cfg.sample_size) reservoir[slot] = std::move(row);
  });

  if (reservoir.size() < cfg.sample_size) {
    throw Error(Errc::not_enough_rows,
                "retained " + std::to_string(reservoir.size()) +
                    " rows, need " + std::to_string(cfg.sample_size));
  }
  if (stats != nullptr) *stats = local;
  return reservoir;
}

}  // namespace picket
