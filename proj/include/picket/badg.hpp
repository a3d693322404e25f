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

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "picket/error.hpp"
#include "picket/taxonomy.hpp"

namespace picket {

// Disagreement mining: select samples where a student classifier's score
// contradicts an auto-rater judge's label, then re-emit their originating
// prompts for another generation round. The judge is an input manifest, not
// a live call, so mining is deterministic and replayable.

struct StudentScore {
  std::string sample_id;
  std::string policy_id;
  double probability = 0.0;  // in [0, 1]
};

struct JudgeLabel {
  std::string sample_id;
  std::string policy_id;
  bool positive = false;  // judge says the sample violates the policy
};

// (sample, policy) key; all outputs are sorted by it.
using SamplePolicyKey = std::pair<std::string, std::string>;

struct Disagreement {
  std::string sample_id;
  std::string policy_id;
  double student_score = 0.0;
};

struct DisagreementSet {
  // Judge negative, student score >= fp_threshold.
  std::vector<Disagreement> false_positives;
  // Judge positive, student score < fn_threshold.
  std::vector<Disagreement> false_negatives;
  double fp_threshold = 0.5;
  double fn_threshold = 0.5;
  // Join remainders, reported rather than silently dropped.
  std::vector<SamplePolicyKey> missing_label;  // scored but never judged
  std::vector<SamplePolicyKey> missing_score;  // judged but never scored
};

struct MiningOptions {
  // When set, only rows with |score - 0.5| < borderline_delta qualify,
  // narrowing the harvest to genuinely borderline cases.
  std::optional<double> borderline_delta;
};

// Joins scores and labels on (sample, policy) and applies the two threshold
// predicates. The FP and FN sets are disjoint by construction (their label
// conditions are). Duplicate (sample, policy) keys in either input are an
// error: the join must be well-defined.
DisagreementSet mine_disagreements(const std::vector<StudentScore>& scores,
                                   const std::vector<JudgeLabel>& labels,
                                   double fp_threshold, double fn_threshold,
                                   const MiningOptions& options = {});

struct AdversarialEmitResult {
  std::vector<GenerationRow> rows;
  // Disagreements whose sample id maps to no known generation row; reported,
  // never emitted.
  std::vector<SamplePolicyKey> missing_provenance;
};

// Maps each disagreement back to its originating generation row (keyed by
// sample id) and re-emits the row annotated with kind=FP/FN and the student
// score that earned it a second round.
AdversarialEmitResult emit_adversarial_specs(
    const DisagreementSet& disagreements,
    const std::map<std::string, GenerationRow>& query_lookup);

// Manifest rows:
//   scores: {"id": ..., "policy": ..., "probability": 0.87}
//   labels: {"id": ..., "policy": ..., "label": "positive"|"negative"}
std::vector<StudentScore> read_student_scores(std::istream& in);
std::vector<JudgeLabel> read_judge_labels(std::istream& in);

}  // namespace picket
