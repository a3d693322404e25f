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

#include "picket/error.hpp"

namespace picket {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::parse_error: return "ParseError";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::invalid_policy: return "InvalidPolicy";
    case Errc::unknown_style: return "UnknownStyle";
    case Errc::non_finite_input: return "NonFiniteInput";
    case Errc::degenerate_denominator: return "DegenerateDenominator";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::backend_unavailable: return "BackendUnavailable";
    case Errc::capability_missing: return "CapabilityMissing";
    case Errc::malformed_response: return "MalformedResponse";
    case Errc::timeout: return "Timeout";
    case Errc::unparseable_output: return "UnparseableOutput";
    case Errc::empty_policy_set: return "EmptyPolicySet";
    case Errc::empty_dimension: return "EmptyDimension";
    case Errc::duplicate_sibling: return "DuplicateSibling";
    case Errc::empty_dimensions: return "EmptyDimensions";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::unknown_slot: return "UnknownSlot";
    case Errc::rewrite_backend_failure: return "RewriteBackendFailure";
    case Errc::insufficient_specs: return "InsufficientSpecs";
    case Errc::not_enough_rows: return "NotEnoughRows";
    case Errc::threshold_out_of_range: return "ThresholdOutOfRange";
    case Errc::missing_provenance: return "MissingProvenance";
    case Errc::empty_input: return "EmptyInput";
    case Errc::undefined_metric: return "UndefinedMetric";
    case Errc::no_positives: return "NoPositives";
    case Errc::no_negatives: return "NoNegatives";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::invalid_request: return "InvalidRequest";
    case Errc::unknown_policy: return "UnknownPolicy";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

bool errc_retryable(Errc code) {
  return code == Errc::backend_unavailable || code == Errc::timeout;
}

}  // namespace picket
