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

#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picket/error.hpp"

namespace picket {

// Manifests are line-delimited JSON: one record per line, blank lines
// ignored. Line numbers in errors are 1-based.

// Parses every line, handing (line_number, parsed record) to `consume`.
void for_each_record(std::istream& in,
                     const std::function<void(std::size_t,
                                              const nlohmann::ordered_json&)>&
                         consume);

std::vector<nlohmann::ordered_json> read_records(
    const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes content to `path` via a temp file in the same directory followed by
// an atomic rename, so a failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

void write_records_atomic(const std::filesystem::path& path,
                          const std::vector<nlohmann::ordered_json>& records);

}  // namespace picket
