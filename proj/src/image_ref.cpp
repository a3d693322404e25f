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

#include "picket/image_ref.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>

#include "picket/error.hpp"
#include "picket/manifest.hpp"

namespace picket {

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(Errc::io_error, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * md_len);
  for (unsigned int i = 0; i < md_len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0x0f]);
  }
  return hex;
}

bool is_hex_digest(std::string_view digest) {
  return digest.size() == 64 &&
         std::all_of(digest.begin(), digest.end(), [](unsigned char c) {
           return std::isxdigit(c) != 0 && (std::isdigit(c) || std::islower(c));
         });
}

ImageRef ImageRef::from_bytes(std::string bytes) {
  ImageRef ref;
  ref.kind = ImageSourceKind::inline_bytes;
  ref.digest = sha256_hex(bytes);
  ref.bytes = std::move(bytes);
  return ref;
}

ImageRef ImageRef::from_file(const std::filesystem::path& path) {
  ImageRef ref;
  ref.kind = ImageSourceKind::local_path;
  ref.location = path.string();
  ref.bytes = read_file(path);
  ref.digest = sha256_hex(ref.bytes);
  return ref;
}

ImageRef ImageRef::from_url(std::string url, std::string expected_digest) {
  if (!expected_digest.empty() && !is_hex_digest(expected_digest)) {
    throw Error(Errc::invalid_request,
                "expected digest must be 64 lowercase hex characters");
  }
  ImageRef ref;
  ref.kind = ImageSourceKind::remote_url;
  ref.location = std::move(url);
  ref.digest = std::move(expected_digest);
  return ref;
}

ImageRef ImageRef::from_digest(std::string digest) {
  if (!is_hex_digest(digest)) {
    throw Error(Errc::invalid_request,
                "digest must be 64 lowercase hex characters");
  }
  ImageRef ref;
  ref.kind = ImageSourceKind::inline_bytes;
  ref.digest = std::move(digest);
  return ref;
}

}  // namespace picket
