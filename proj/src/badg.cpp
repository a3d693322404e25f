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

#include "picket/badg.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "picket/manifest.hpp"

namespace picket {
namespace {

using nlohmann::ordered_json;

void check_threshold(double value, const char* which) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw Error(Errc::threshold_out_of_range,
                std::string(which) + " must lie in [0, 1]");
  }
}

void check_probability(const StudentScore& score) {
  if (!std::isfinite(score.probability) || score.probability < 0.0 ||
      score.probability > 1.0) {
    throw Error(Errc::out_of_range,
                "score for sample '" + score.sample_id + "' policy '" +
                    score.policy_id + "' outside [0, 1]");
  }
}

}  // namespace

DisagreementSet mine_disagreements(const std::vector<StudentScore>& scores,
                                   const std::vector<JudgeLabel>& labels,
                                   double fp_threshold, double fn_threshold,
                                   const MiningOptions& options) {
  check_threshold(fp_threshold, "fp_threshold");
  check_threshold(fn_threshold, "fn_threshold");
  if (options.borderline_delta.has_value() &&
      (!std::isfinite(*options.borderline_delta) ||
       *options.borderline_delta <= 0.0)) {
    throw Error(Errc::threshold_out_of_range,
                "borderline_delta must be positive");
  }

  std::map<SamplePolicyKey, double> score_by_key;
  for (const auto& score : scores) {
    check_probability(score);
    SamplePolicyKey key{score.sample_id, score.policy_id};
    if (!score_by_key.emplace(key, score.probability).second) {
      throw Error(Errc::duplicate_id, "duplicate score for sample '" +
                                          score.sample_id + "' policy '" +
                                          score.policy_id + "'");
    }
  }
  std::map<SamplePolicyKey, bool> label_by_key;
  for (const auto& label : labels) {
    SamplePolicyKey key{label.sample_id, label.policy_id};
    if (!label_by_key.emplace(key, label.positive).second) {
      throw Error(Errc::duplicate_id, "duplicate label for sample '" +
                                          label.sample_id + "' policy '" +
                                          label.policy_id + "'");
    }
  }

  DisagreementSet out;
  out.fp_threshold = fp_threshold;
  out.fn_threshold = fn_threshold;

  // std::map iteration gives the sorted, deterministic output order.
  for (const auto& [key, probability] : score_by_key) {
    auto it = label_by_key.find(key);
    if (it == label_by_key.end()) {
      out.missing_label.push_back(key);
      continue;
    }
    if (options.borderline_delta.has_value() &&
        std::abs(probability - 0.5) >= *options.borderline_delta) {
      continue;
    }
    const bool judge_positive = it->second;
    if (!judge_positive && probability >= fp_threshold) {
      out.false_positives.push_back({key.first, key.second, probability});
    } else if (judge_positive && probability < fn_threshold) {
      out.false_negatives.push_back({key.first, key.second, probability});
    }
  }
  for (const auto& [key, positive] : label_by_key) {
    (void)positive;
    if (score_by_key.find(key) == score_by_key.end()) {
      out.missing_score.push_back(key);
    }
  }
  return out;
}

namespace {

void emit_kind(const std::vector<Disagreement>& disagreements,
               const char* kind,
               const std::map<std::string, GenerationRow>& query_lookup,
               AdversarialEmitResult* out) {
  for (const auto& d : disagreements) {
    auto it = query_lookup.find(d.sample_id);
    if (it == query_lookup.end()) {
      out->missing_provenance.emplace_back(d.sample_id, d.policy_id);
      continue;
    }
    GenerationRow row = it->second;
    row.kind = kind;
    row.student_score = d.student_score;
    out->rows.push_back(std::move(row));
  }
}

}  // namespace

AdversarialEmitResult emit_adversarial_specs(
    const DisagreementSet& disagreements,
    const std::map<std::string, GenerationRow>& query_lookup) {
  AdversarialEmitResult out;
  emit_kind(disagreements.false_positives, "FP", query_lookup, &out);
  emit_kind(disagreements.false_negatives, "FN", query_lookup, &out);
  std::sort(out.missing_provenance.begin(), out.missing_provenance.end());
  return out;
}

std::vector<StudentScore> read_student_scores(std::istream& in) {
  std::vector<StudentScore> scores;
  for_each_record(in, [&](std::size_t line, const ordered_json& record) {
    StudentScore score;
    try {
      score.sample_id = record.at("id").get<std::string>();
      score.policy_id = record.at("policy").get<std::string>();
      score.probability = record.at("probability").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, "score manifest line " +
                                         std::to_string(line) + ": " +
                                         e.what());
    }
    check_probability(score);
    scores.push_back(std::move(score));
  });
  return scores;
}

std::vector<JudgeLabel> read_judge_labels(std::istream& in) {
  std::vector<JudgeLabel> labels;
  for_each_record(in, [&](std::size_t line, const ordered_json& record) {
    JudgeLabel label;
    try {
      label.sample_id = record.at("id").get<std::string>();
      label.policy_id = record.at("policy").get<std::string>();
      const auto& value = record.at("label");
      if (value.is_boolean()) {
        label.positive = value.get<bool>();
      } else if (value.is_string()) {
        const std::string text = value.get<std::string>();
        if (text == "positive") {
          label.positive = true;
        } else if (text == "negative") {
          label.positive = false;
        } else {
          throw Error(Errc::parse_error,
                      "label manifest line " + std::to_string(line) +
                          ": label must be \"positive\" or \"negative\"");
        }
      } else {
        throw Error(Errc::parse_error,
                    "label manifest line " + std::to_string(line) +
                        ": label must be a string or boolean");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, "label manifest line " +
                                         std::to_string(line) + ": " +
                                         e.what());
    }
    labels.push_back(std::move(label));
  });
  return labels;
}

}  // namespace picket
