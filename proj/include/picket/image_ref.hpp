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
#include <string>
#include <string_view>

namespace picket {

std::string sha256_hex(std::string_view data);

enum class ImageSourceKind {
  local_path,
  remote_url,
  inline_bytes,
};

// A resolved image: raw bytes (when available) plus their SHA-256 digest.
// Two refs with equal digest are the same image.
struct ImageRef {
  ImageSourceKind kind = ImageSourceKind::inline_bytes;
  std::string location;  // path or URL; empty for inline bytes
  std::string bytes;     // raw bytes; may be empty for digest-only refs
  std::string digest;    // 64 lowercase hex nybbles

  static ImageRef from_bytes(std::string bytes);
  static ImageRef from_file(const std::filesystem::path& path);
  // Unfetched remote reference; `expected_digest`, when nonempty, is checked
  // against the fetched bytes by whoever resolves the URL.
  static ImageRef from_url(std::string url, std::string expected_digest = "");
  // Pre-resolved reference carrying only the digest. Enough for table-driven
  // backends; wire backends that need pixels will reject it.
  static ImageRef from_digest(std::string digest);
};

bool is_hex_digest(std::string_view digest);

}  // namespace picket
