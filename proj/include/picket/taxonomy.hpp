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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "picket/error.hpp"

namespace picket {

// One attribute tree (topic, demographic, context, locale, style, ...).
// Leaves are the values combined into image-generation queries; inner nodes
// only group them (a two-layer topic tree contributes its layer-2 nodes).
struct TaxonomyNode {
  std::string label;
  std::vector<TaxonomyNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct TaxonomyDimension {
  std::string name;
  std::vector<TaxonomyNode> roots;
};

// Full root-to-leaf label path within a dimension, segments joined by '/'.
// Labels therefore must not contain '/' (enforced at load).
std::vector<std::string> leaf_paths(const TaxonomyDimension& dimension);

void validate_dimension(const TaxonomyDimension& dimension);

// Parses a taxonomy document (JSON, see README). Reports per-dimension leaf
// counts via `leaf_counts` when non-null.
std::vector<TaxonomyDimension> load_taxonomy(
    const std::string& document,
    std::vector<std::size_t>* leaf_counts = nullptr);

enum class ComboStrategy {
  exhaustive,
  uniform_random,
  stratified_by_first_dimension,
};

ComboStrategy combo_strategy_from_string(std::string_view name);
const char* to_string(ComboStrategy strategy);

// One leaf path per declared dimension, in declaration order.
struct QueryCombo {
  std::string policy_id;
  std::vector<std::pair<std::string, std::string>> leaves;  // (dim, path)

  const std::string* leaf_path(std::string_view dimension) const;
};

// exhaustive: the whole cross product, dimensions in declaration order with
//   each dimension's leaf paths in lexicographic order, first dimension
//   slowest. k is ignored.
// uniform_random: k distinct combos drawn uniformly (draws repeat until
//   unseen), in draw order. KTooLarge if k exceeds the cross-product size.
// stratified_by_first_dimension: every leaf of the first dimension appears
//   either floor(k/L) or ceil(k/L) times; remaining dimensions drawn
//   uniformly.
// All sampled strategies are bit-reproducible for a fixed seed.
std::vector<QueryCombo> enumerate_combos(
    const std::vector<TaxonomyDimension>& dimensions, ComboStrategy strategy,
    std::size_t k, std::uint64_t seed, const std::string& policy_id = "");

// Optional prompt polisher (e.g. an LLM turning the slotted draft into
// fluent prose). Failures fall back to the draft, flagged on the spec.
using TextRewriter = std::function<std::string(const std::string&)>;

struct QuerySpec {
  QueryCombo combo;
  std::string prompt;         // final prompt (rewritten when rewriter ran)
  std::string slotted_draft;  // raw substitution result, always kept
  std::uint64_t seed = 0;
  ComboStrategy strategy = ComboStrategy::exhaustive;
  bool rewritten = false;
  bool rewrite_failed = false;
};

// Substitutes {dimension} slots in the template with the combo's leaf labels
// (the last path segment). Throws UnknownSlot for slots naming no dimension.
QuerySpec assemble_prompt(const QueryCombo& combo,
                          const std::string& prompt_template,
                          const TextRewriter& rewriter = nullptr,
                          std::uint64_t seed = 0,
                          ComboStrategy strategy = ComboStrategy::exhaustive);

struct AspectSpec {
  std::string aspect_ratio;  // e.g. "16:9"
  int width = 0;
  int height = 0;
};

// Aspect ratios and resolutions rotated across generated rows.
const std::vector<AspectSpec>& default_aspects();

// One line of a generation manifest, ready for any text-to-image service.
struct GenerationRow {
  std::string id;
  std::string policy_id;
  std::string prompt;
  std::uint64_t seed = 0;
  std::string aspect_ratio;
  std::string resolution;  // "WIDTHxHEIGHT"
  std::vector<std::pair<std::string, std::string>> combo;  // (dim, path)
  // Adversarial-mining annotations; empty/absent on plain generation rows.
  std::string kind;  // "", "FP" or "FN"
  std::optional<double> student_score;
};

inline constexpr std::size_t kDefaultTargetPerPolicy = 10000;

// Takes the first `target_per_policy` specs of each policy (in input order)
// and assigns aspect/resolution round-robin per policy. InsufficientSpecs if
// any policy has fewer specs than the target.
std::vector<GenerationRow> emit_generation_manifest(
    const std::vector<QuerySpec>& specs,
    std::size_t target_per_policy = kDefaultTargetPerPolicy,
    const std::vector<AspectSpec>& aspects = default_aspects());

// JSONL (one object per line) round-trip. Key order is stable so identical
// inputs yield byte-identical manifests.
std::string to_json_line(const GenerationRow& row);
GenerationRow generation_row_from_json_line(const std::string& line);

std::string write_generation_manifest(const std::vector<GenerationRow>& rows);
std::vector<GenerationRow> read_generation_manifest(const std::string& text);

}  // namespace picket
