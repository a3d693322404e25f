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

#include "picket/base64.hpp"

#include <array>
#include <cstdint>

#include "picket/error.hpp"

namespace picket {
namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<std::int8_t, 256> decode_table() {
  std::array<std::int8_t, 256> table{};
  table.fill(-1);
  for (int i = 0; i < 64; ++i) {
    table[static_cast<unsigned char>(kAlphabet[i])] =
        static_cast<std::int8_t>(i);
  }
  return table;
}

}  // namespace

std::string base64_encode(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    const std::uint32_t block =
        (static_cast<unsigned char>(data[i]) << 16) |
        (static_cast<unsigned char>(data[i + 1]) << 8) |
        static_cast<unsigned char>(data[i + 2]);
    out.push_back(kAlphabet[(block >> 18) & 0x3f]);
    out.push_back(kAlphabet[(block >> 12) & 0x3f]);
    out.push_back(kAlphabet[(block >> 6) & 0x3f]);
    out.push_back(kAlphabet[block & 0x3f]);
    i += 3;
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t block = static_cast<unsigned char>(data[i]) << 16;
    out.push_back(kAlphabet[(block >> 18) & 0x3f]);
    out.push_back(kAlphabet[(block >> 12) & 0x3f]);
    out.append("==");
  } else if (rest == 2) {
    const std::uint32_t block =
        (static_cast<unsigned char>(data[i]) << 16) |
        (static_cast<unsigned char>(data[i + 1]) << 8);
    out.push_back(kAlphabet[(block >> 18) & 0x3f]);
    out.push_back(kAlphabet[(block >> 12) & 0x3f]);
    out.push_back(kAlphabet[(block >> 6) & 0x3f]);
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view encoded) {
  static const std::array<std::int8_t, 256> table = decode_table();
  if (encoded.size() % 4 != 0) {
    throw Error(Errc::invalid_request,
                "base64 payload length must be a multiple of 4");
  }
  std::string out;
  out.reserve(encoded.size() / 4 * 3);
  for (std::size_t i = 0; i < encoded.size(); i += 4) {
    std::uint32_t block = 0;
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = encoded[i + j];
      if (c == '=') {
        if (i + 4 != encoded.size() || j < 2 ||
            (j == 2 && encoded[i + 3] != '=')) {
          throw Error(Errc::invalid_request, "misplaced base64 padding");
        }
        ++pad;
        block <<= 6;
        continue;
      }
      const std::int8_t value = table[static_cast<unsigned char>(c)];
      if (value < 0 || pad > 0) {
        throw Error(Errc::invalid_request, "invalid base64 character");
      }
      block = (block << 6) | static_cast<std::uint32_t>(value);
    }
    out.push_back(static_cast<char>((block >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<char>((block >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(block & 0xff));
  }
  return out;
}

}  // namespace picket
