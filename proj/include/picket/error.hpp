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

#include <stdexcept>
#include <string>

namespace picket {

enum class Errc {
  // policy
  parse_error,
  duplicate_id,
  invalid_policy,
  unknown_style,
  // scoring
  non_finite_input,
  degenerate_denominator,
  out_of_range,
  // backend
  backend_unavailable,
  capability_missing,
  malformed_response,
  timeout,
  unparseable_output,
  empty_policy_set,
  // taxonomy
  empty_dimension,
  duplicate_sibling,
  empty_dimensions,
  k_too_large,
  unknown_slot,
  rewrite_backend_failure,
  insufficient_specs,
  // corpus filter
  not_enough_rows,
  // badg
  threshold_out_of_range,
  missing_provenance,
  // eval
  empty_input,
  undefined_metric,
  no_positives,
  no_negatives,
  degenerate_labels,
  // service / io
  invalid_request,
  unknown_policy,
  io_error,
};

const char* errc_name(Errc code);

// Transient backend faults worth another attempt; everything else is final.
bool errc_retryable(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }

 private:
  Errc code_;
};

}  // namespace picket
