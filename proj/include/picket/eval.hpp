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
#include <optional>
#include <string>
#include <vector>

#include "picket/error.hpp"

namespace picket {

struct LabeledScore {
  std::string id;
  bool positive = false;  // gold label
  double score = 0.0;     // in [0, 1]; hard predictions arrive as 0 or 1
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Prediction = score >= threshold. The four counts partition the input.
ConfusionCounts confusion(const std::vector<LabeledScore>& labeled,
                          double threshold);

// Metrics are fractions in [0, 1]; a zero denominator leaves the metric
// unset rather than coercing it to 0, which matters when positive counts
// are tiny.
struct Prf1 {
  std::optional<double> precision;  // tp / (tp + fp)
  std::optional<double> recall;     // tp / (tp + fn)
  std::optional<double> f1;         // 2PR / (P + R)
};

Prf1 prf1(const ConfusionCounts& counts);

// Average precision with tie grouping: rank by score descending, samples of
// equal score enter as one block, AP = mean over positives of precision at
// the block boundary where the positive entered. Rank-based, so strictly
// increasing score transforms leave it unchanged. Throws NoPositives.
double pr_auc(const std::vector<LabeledScore>& labeled);

double fpr(const ConfusionCounts& counts);            // throws NoNegatives
double one_minus_fpr(const ConfusionCounts& counts);  // throws NoNegatives

struct SweepResult {
  double threshold = 0.0;
  double best_f1 = 0.0;  // fraction in [0, 1]
};

// Maximizes F1 over the finite candidate set {0, 1} plus midpoints between
// consecutive distinct scores; ties break toward the higher threshold.
// Candidates whose F1 is undefined are skipped. Needs at least one positive
// and one negative (DegenerateLabels otherwise).
SweepResult sweep_optimal_threshold(const std::vector<LabeledScore>& labeled);

// Rates as percentages in [0, 100]; unset where undefined.
struct MetricsReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> pr_auc;
  std::optional<double> fpr;
  std::optional<double> one_minus_fpr;
  double threshold = 0.5;
  ConfusionCounts counts;
};

MetricsReport compute_report(const std::vector<LabeledScore>& labeled,
                             double threshold);

struct ReportCell {
  std::string policy;
  std::string model;
  MetricsReport report;
};

// Fixed-width table, one row per policy and one column per model (both in
// first-appearance order), cells "P/R/F1" in percent with one decimal.
// Absent cells and undefined components render as em-dash-free "-".
std::string render_report_text(const std::vector<ReportCell>& cells);

// Same table as structured records.
std::string render_report_json(const std::vector<ReportCell>& cells);

// Manifest rows carry a gold label plus either a soft score or a hard
// prediction (mapped to score 1.0 / 0.0):
//   {"id": ..., "policy": ..., "label": "positive", "score": 0.83}
//   {"id": ..., "policy": ..., "label": "negative", "prediction": false}
// `policy_filter` empty selects every row.
std::vector<LabeledScore> read_eval_manifest(std::istream& in,
                                             const std::string& policy_filter);

}  // namespace picket
