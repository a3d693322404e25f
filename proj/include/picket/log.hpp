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

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace picket {

enum class LogLevel { off = 0, error = 1, info = 2, debug = 3 };

inline std::atomic<LogLevel>& log_level() {
  static std::atomic<LogLevel> level{LogLevel::error};
  return level;
}

inline void log_line(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(log_level().load())) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const char* tag = level == LogLevel::error   ? "E"
                    : level == LogLevel::info  ? "I"
                                               : "D";
  std::clog << tag << " picket: " << message << '\n';
}

}  // namespace picket
