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

#include "picket/manifest.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

namespace picket {

namespace fs = std::filesystem;

void for_each_record(std::istream& in,
                     const std::function<void(std::size_t,
                                              const nlohmann::ordered_json&)>&
                         consume) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::ordered_json record;
    try {
      record = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, "manifest line " +
                                         std::to_string(line_number) +
                                         ": " + e.what());
    }
    consume(line_number, record);
  }
}

std::vector<nlohmann::ordered_json> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  std::vector<nlohmann::ordered_json> records;
  for_each_record(in, [&](std::size_t, const nlohmann::ordered_json& record) {
    records.push_back(record);
  });
  return records;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  std::random_device rd;
  fs::path tmp =
      dir / (path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(Errc::io_error, "cannot create " + tmp.string());
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(Errc::io_error, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::io_error,
                "cannot rename into place: " + path.string());
  }
}

void write_records_atomic(const fs::path& path,
                          const std::vector<nlohmann::ordered_json>& records) {
  std::string content;
  for (const nlohmann::ordered_json& record : records) {
    content += record.dump();
    content += '\n';
  }
  write_file_atomic(path, content);
}

}  // namespace picket
