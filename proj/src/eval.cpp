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

#include "picket/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "picket/manifest.hpp"

namespace picket {
namespace {

using nlohmann::ordered_json;

void check_scores(const std::vector<LabeledScore>& labeled) {
  if (labeled.empty()) {
    throw Error(Errc::empty_input, "no labeled scores");
  }
  for (const auto& row : labeled) {
    if (!std::isfinite(row.score) || row.score < 0.0 || row.score > 1.0) {
      throw Error(Errc::out_of_range,
                  "score for '" + row.id + "' outside [0, 1]");
    }
  }
}

double f1_of(double precision, double recall) {
  return 2.0 * precision * recall / (precision + recall);
}

// F1 at a threshold, or unset where precision or recall has a zero
// denominator or P + R == 0.
std::optional<double> f1_at(const std::vector<LabeledScore>& labeled,
                            double threshold) {
  ConfusionCounts counts = confusion(labeled, threshold);
  Prf1 metrics = prf1(counts);
  return metrics.f1;
}

std::string format_pct(const std::optional<double>& pct) {
  if (!pct.has_value()) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << *pct;
  return out.str();
}

std::string cell_text(const MetricsReport& report) {
  return format_pct(report.precision) + "/" + format_pct(report.recall) +
         "/" + format_pct(report.f1);
}

}  // namespace

ConfusionCounts confusion(const std::vector<LabeledScore>& labeled,
                          double threshold) {
  check_scores(labeled);
  if (!std::isfinite(threshold) || threshold < 0.0 || threshold > 1.0) {
    throw Error(Errc::out_of_range, "threshold outside [0, 1]");
  }
  ConfusionCounts counts;
  for (const auto& row : labeled) {
    const bool predicted = row.score >= threshold;
    if (predicted && row.positive) ++counts.tp;
    if (predicted && !row.positive) ++counts.fp;
    if (!predicted && !row.positive) ++counts.tn;
    if (!predicted && row.positive) ++counts.fn;
  }
  return counts;
}

Prf1 prf1(const ConfusionCounts& counts) {
  Prf1 out;
  if (counts.tp + counts.fp > 0) {
    out.precision =
        static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
  }
  if (counts.tp + counts.fn > 0) {
    out.recall =
        static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
  }
  if (out.precision.has_value() && out.recall.has_value() &&
      *out.precision + *out.recall > 0.0) {
    out.f1 = f1_of(*out.precision, *out.recall);
  }
  return out;
}

double pr_auc(const std::vector<LabeledScore>& labeled) {
  check_scores(labeled);
  std::size_t total_positives = 0;
  for (const auto& row : labeled) total_positives += row.positive ? 1 : 0;
  if (total_positives == 0) {
    throw Error(Errc::no_positives, "average precision needs a positive");
  }

  std::vector<const LabeledScore*> ranked;
  ranked.reserve(labeled.size());
  for (const auto& row : labeled) ranked.push_back(&row);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const LabeledScore* a, const LabeledScore* b) {
                     return a->score > b->score;
                   });

  double sum = 0.0;
  std::size_t cum_total = 0;
  std::size_t cum_positives = 0;
  std::size_t i = 0;
  while (i < ranked.size()) {
    // One block per distinct score: ties enter the ranking together.
    std::size_t j = i;
    std::size_t block_positives = 0;
    while (j < ranked.size() && ranked[j]->score == ranked[i]->score) {
      block_positives += ranked[j]->positive ? 1 : 0;
      ++j;
    }
    cum_total += j - i;
    cum_positives += block_positives;
    const double precision_here =
        static_cast<double>(cum_positives) / static_cast<double>(cum_total);
    sum += static_cast<double>(block_positives) * precision_here;
    i = j;
  }
  return sum / static_cast<double>(total_positives);
}

double fpr(const ConfusionCounts& counts) {
  if (counts.fp + counts.tn == 0) {
    throw Error(Errc::no_negatives, "false positive rate needs a negative");
  }
  return static_cast<double>(counts.fp) /
         static_cast<double>(counts.fp + counts.tn);
}

double one_minus_fpr(const ConfusionCounts& counts) { return 1.0 - fpr(counts); }

SweepResult sweep_optimal_threshold(const std::vector<LabeledScore>& labeled) {
  check_scores(labeled);
  bool any_positive = false;
  bool any_negative = false;
  for (const auto& row : labeled) (row.positive ? any_positive : any_negative) = true;
  if (!any_positive || !any_negative) {
    throw Error(Errc::degenerate_labels,
                "threshold sweep needs both label classes");
  }

  std::vector<double> scores;
  scores.reserve(labeled.size());
  for (const auto& row : labeled) scores.push_back(row.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  std::vector<double> candidates;
  candidates.push_back(0.0);
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) {
    candidates.push_back(std::midpoint(scores[i], scores[i + 1]));
  }
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());

  std::optional<SweepResult> best;
  for (double threshold : candidates) {
    std::optional<double> f1 = f1_at(labeled, threshold);
    if (!f1.has_value()) continue;
    // Ascending candidate order plus >= breaks ties toward the higher
    // threshold.
    if (!best.has_value() || *f1 >= best->best_f1) {
      best = SweepResult{threshold, *f1};
    }
  }
  if (!best.has_value()) {
    throw Error(Errc::degenerate_labels,
                "no candidate threshold yields a defined F1");
  }
  return *best;
}

MetricsReport compute_report(const std::vector<LabeledScore>& labeled,
                             double threshold) {
  MetricsReport report;
  report.threshold = threshold;
  report.counts = confusion(labeled, threshold);
  Prf1 metrics = prf1(report.counts);
  if (metrics.precision) report.precision = *metrics.precision * 100.0;
  if (metrics.recall) report.recall = *metrics.recall * 100.0;
  if (metrics.f1) report.f1 = *metrics.f1 * 100.0;
  try {
    report.pr_auc = pr_auc(labeled) * 100.0;
  } catch (const Error&) {
    // No positives: leave unset.
  }
  try {
    report.fpr = fpr(report.counts) * 100.0;
    report.one_minus_fpr = one_minus_fpr(report.counts) * 100.0;
  } catch (const Error&) {
    // No negatives: leave unset.
  }
  return report;
}

std::string render_report_text(const std::vector<ReportCell>& cells) {
  if (cells.empty()) {
    throw Error(Errc::empty_input, "report has no cells");
  }
  std::vector<std::string> policies;
  std::vector<std::string> models;
  for (const auto& cell : cells) {
    if (std::find(policies.begin(), policies.end(), cell.policy) ==
        policies.end()) {
      policies.push_back(cell.policy);
    }
    if (std::find(models.begin(), models.end(), cell.model) == models.end()) {
      models.push_back(cell.model);
    }
  }

  auto cell_for = [&](const std::string& policy,
                      const std::string& model) -> std::string {
    for (const auto& cell : cells) {
      if (cell.policy == policy && cell.model == model) {
        return cell_text(cell.report);
      }
    }
    return "-";
  };

  // Column widths: header vs. widest cell.
  std::vector<std::size_t> widths(models.size() + 1, 0);
  widths[0] = std::string("policy").size();
  for (const auto& policy : policies) widths[0] = std::max(widths[0], policy.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    widths[m + 1] = models[m].size();
    for (const auto& policy : policies) {
      widths[m + 1] = std::max(widths[m + 1], cell_for(policy, models[m]).size());
    }
  }

  std::ostringstream out;
  auto emit_row = [&](const std::string& head,
                      const std::function<std::string(std::size_t)>& col) {
    out << std::left << std::setw(static_cast<int>(widths[0])) << head;
    for (std::size_t m = 0; m < models.size(); ++m) {
      out << "  " << std::setw(static_cast<int>(widths[m + 1])) << col(m);
    }
    out << '\n';
  };
  emit_row("policy", [&](std::size_t m) { return models[m]; });
  emit_row("", [&](std::size_t m) {
    return std::string(widths[m + 1], '-');
  });
  for (const auto& policy : policies) {
    emit_row(policy, [&](std::size_t m) { return cell_for(policy, models[m]); });
  }
  return out.str();
}

std::string render_report_json(const std::vector<ReportCell>& cells) {
  if (cells.empty()) {
    throw Error(Errc::empty_input, "report has no cells");
  }
  ordered_json rows = ordered_json::array();
  for (const auto& cell : cells) {
    ordered_json j;
    j["policy"] = cell.policy;
    j["model"] = cell.model;
    auto set = [&](const char* key, const std::optional<double>& value) {
      if (value.has_value()) {
        j[key] = *value;
      } else {
        j[key] = nullptr;
      }
    };
    set("precision", cell.report.precision);
    set("recall", cell.report.recall);
    set("f1", cell.report.f1);
    set("pr_auc", cell.report.pr_auc);
    set("fpr", cell.report.fpr);
    set("one_minus_fpr", cell.report.one_minus_fpr);
    j["threshold"] = cell.report.threshold;
    j["counts"] = {{"tp", cell.report.counts.tp},
                   {"fp", cell.report.counts.fp},
                   {"tn", cell.report.counts.tn},
                   {"fn", cell.report.counts.fn}};
    rows.push_back(std::move(j));
  }
  return ordered_json{{"cells", std::move(rows)}}.dump(2);
}

std::vector<LabeledScore> read_eval_manifest(
    std::istream& in, const std::string& policy_filter) {
  std::vector<LabeledScore> rows;
  for_each_record(in, [&](std::size_t line, const ordered_json& record) {
    std::string policy;
    LabeledScore row;
    try {
      row.id = record.at("id").get<std::string>();
      policy = record.at("policy").get<std::string>();
      const auto& label = record.at("label");
      if (label.is_boolean()) {
        row.positive = label.get<bool>();
      } else if (label.is_string() && (label == "positive" || label == "negative")) {
        row.positive = label == "positive";
      } else {
        throw Error(Errc::parse_error,
                    "eval manifest line " + std::to_string(line) +
                        ": label must be \"positive\" or \"negative\"");
      }
      if (record.contains("score")) {
        row.score = record["score"].get<double>();
      } else if (record.contains("prediction")) {
        const auto& pred = record["prediction"];
        bool value;
        if (pred.is_boolean()) {
          value = pred.get<bool>();
        } else if (pred.is_string() &&
                   (pred == "positive" || pred == "negative")) {
          value = pred == "positive";
        } else {
          throw Error(Errc::parse_error,
                      "eval manifest line " + std::to_string(line) +
                          ": prediction must be a boolean or "
                          "\"positive\"/\"negative\"");
        }
        row.score = value ? 1.0 : 0.0;
      } else {
        throw Error(Errc::parse_error,
                    "eval manifest line " + std::to_string(line) +
                        ": row needs a score or a prediction");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, "eval manifest line " +
                                         std::to_string(line) + ": " +
                                         e.what());
    }
    if (policy_filter.empty() || policy == policy_filter) {
      rows.push_back(std::move(row));
    }
  });
  return rows;
}

}  // namespace picket
