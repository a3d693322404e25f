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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "picket/error.hpp"

namespace picket {

// One corpus image with caption-derived per-category violation probabilities.
// The upstream caption classifier is out of scope; scores arrive precomputed.
struct CaptionedImageRow {
  std::string id;
  std::string uri;
  std::string caption;
  std::map<std::string, double> scores;  // category -> probability
};

void validate_captioned_row(const CaptionedImageRow& row);

struct FilterConfig {
  double threshold = 0.1;
  std::size_t sample_size = 120000;
  std::uint64_t seed = 0;
  // Retention uses strict "score > threshold"; inclusive flips it to ">=".
  bool inclusive = false;
};

void validate_filter_config(const FilterConfig& cfg);

// True when the row's max category probability exceeds the threshold, i.e.
// at least one category flags the image as interesting for training data.
bool row_retained(const CaptionedImageRow& row, const FilterConfig& cfg);

// Keeps exactly the rows satisfying row_retained, input order preserved.
// Idempotent: filtering a filtered set is the identity.
std::vector<CaptionedImageRow> filter_rows(
    const std::vector<CaptionedImageRow>& rows, const FilterConfig& cfg);

// Uniform sample without replacement of exactly cfg.sample_size rows, in
// draw order. Bit-reproducible for a fixed seed. NotEnoughRows when the
// input is smaller than the request.
std::vector<CaptionedImageRow> sample_rows(
    const std::vector<CaptionedImageRow>& rows, const FilterConfig& cfg);

// Manifest rows: {"id": ..., "uri": ..., "caption": ..., "scores": {...}}.
std::string to_json_line(const CaptionedImageRow& row);
CaptionedImageRow captioned_row_from_json_line(const std::string& line);

std::vector<CaptionedImageRow> read_caption_manifest(std::istream& in);
std::string write_caption_manifest(const std::vector<CaptionedImageRow>& rows);

struct StreamSampleStats {
  std::size_t scanned = 0;   // manifest rows read
  std::size_t retained = 0;  // rows passing the filter
};

// Single-pass filter + reservoir sample for manifests too large for memory.
// Deterministic for a fixed seed, but the reservoir draw order differs from
// sample_rows; the two variants agree on distribution, not on bytes.
std::vector<CaptionedImageRow> filter_and_sample_stream(
    std::istream& in, const FilterConfig& cfg,
    StreamSampleStats* stats = nullptr);

}  // namespace picket
