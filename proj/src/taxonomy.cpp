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

#include "picket/taxonomy.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "picket/rng.hpp"

namespace picket {
namespace {

using nlohmann::ordered_json;

void collect_leaf_paths(const TaxonomyNode& node, const std::string& prefix,
                        std::vector<std::string>* out) {
  std::string path = prefix.empty() ? node.label : prefix + "/" + node.label;
  if (node.is_leaf()) {
    out->push_back(std::move(path));
    return;
  }
  for (const auto& child : node.children) {
    collect_leaf_paths(child, path, out);
  }
}

void validate_node(const TaxonomyNode& node, const std::string& dimension) {
  if (node.label.empty()) {
    throw Error(Errc::parse_error,
                "empty label in dimension '" + dimension + "'");
  }
  if (node.label.find('/') != std::string::npos) {
    throw Error(Errc::parse_error, "label '" + node.label + "' in dimension '" +
                                       dimension + "' contains '/'");
  }
  std::unordered_set<std::string> seen;
  for (const auto& child : node.children) {
    if (!seen.insert(child.label).second) {
      throw Error(Errc::duplicate_sibling,
                  "duplicate sibling '" + child.label + "' under '" +
                      node.label + "' in dimension '" + dimension + "'");
    }
    validate_node(child, dimension);
  }
}

TaxonomyNode parse_node(const ordered_json& value, const std::string& dimension) {
  TaxonomyNode node;
  if (value.is_string()) {
    node.label = value.get<std::string>();
    return node;
  }
  if (!value.is_object()) {
    throw Error(Errc::parse_error,
                "taxonomy node in dimension '" + dimension +
                    "' must be a string or an object");
  }
  if (!value.contains("label") || !value["label"].is_string()) {
    throw Error(Errc::parse_error, "taxonomy node in dimension '" + dimension +
                                       "' is missing a string 'label'");
  }
  node.label = value["label"].get<std::string>();
  if (value.contains("children")) {
    if (!value["children"].is_array()) {
      throw Error(Errc::parse_error, "'children' of '" + node.label +
                                         "' in dimension '" + dimension +
                                         "' must be an array");
    }
    for (const auto& child : value["children"]) {
      node.children.push_back(parse_node(child, dimension));
    }
  }
  return node;
}

// Sorted leaf paths define the canonical per-dimension order used by every
// strategy, so enumeration does not depend on document layout.
std::vector<std::vector<std::string>> sorted_leaves(
    const std::vector<TaxonomyDimension>& dimensions) {
  if (dimensions.empty()) {
    throw Error(Errc::empty_dimensions, "no dimensions to combine");
  }
  std::vector<std::vector<std::string>> leaves;
  leaves.reserve(dimensions.size());
  for (const auto& dimension : dimensions) {
    validate_dimension(dimension);
    auto paths = leaf_paths(dimension);
    std::sort(paths.begin(), paths.end());
    leaves.push_back(std::move(paths));
  }
  return leaves;
}

QueryCombo combo_at(const std::vector<TaxonomyDimension>& dimensions,
                    const std::vector<std::vector<std::string>>& leaves,
                    const std::vector<std::size_t>& index,
                    const std::string& policy_id) {
  QueryCombo combo;
  combo.policy_id = policy_id;
  combo.leaves.reserve(dimensions.size());
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    combo.leaves.emplace_back(dimensions[d].name, leaves[d][index[d]]);
  }
  return combo;
}

std::string leaf_label(const std::string& path) {
  auto pos = path.rfind('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::vector<std::string> leaf_paths(const TaxonomyDimension& dimension) {
  std::vector<std::string> out;
  for (const auto& root : dimension.roots) {
    collect_leaf_paths(root, "", &out);
  }
  return out;
}

void validate_dimension(const TaxonomyDimension& dimension) {
  if (dimension.name.empty()) {
    throw Error(Errc::parse_error, "dimension with empty name");
  }
  if (dimension.roots.empty()) {
    throw Error(Errc::empty_dimension,
                "dimension '" + dimension.name + "' has no values");
  }
  std::unordered_set<std::string> seen;
  for (const auto& root : dimension.roots) {
    if (!seen.insert(root.label).second) {
      throw Error(Errc::duplicate_sibling,
                  "duplicate root '" + root.label + "' in dimension '" +
                      dimension.name + "'");
    }
    validate_node(root, dimension.name);
  }
}

std::vector<TaxonomyDimension> load_taxonomy(
    const std::string& document, std::vector<std::size_t>* leaf_counts) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("taxonomy: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dimensions") ||
      !doc["dimensions"].is_array()) {
    throw Error(Errc::parse_error,
                "taxonomy document must be {\"dimensions\": [...]}");
  }
  std::vector<TaxonomyDimension> dimensions;
  std::unordered_set<std::string> names;
  for (const auto& entry : doc["dimensions"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string()) {
      throw Error(Errc::parse_error, "dimension is missing a string 'name'");
    }
    TaxonomyDimension dimension;
    dimension.name = entry["name"].get<std::string>();
    if (!names.insert(dimension.name).second) {
      throw Error(Errc::duplicate_sibling,
                  "duplicate dimension '" + dimension.name + "'");
    }
    if (!entry.contains("children") || !entry["children"].is_array()) {
      throw Error(Errc::parse_error, "dimension '" + dimension.name +
                                         "' is missing a 'children' array");
    }
    for (const auto& child : entry["children"]) {
      dimension.roots.push_back(parse_node(child, dimension.name));
    }
    validate_dimension(dimension);
    dimensions.push_back(std::move(dimension));
  }
  if (dimensions.empty()) {
    throw Error(Errc::empty_dimensions, "taxonomy declares no dimensions");
  }
  if (leaf_counts != nullptr) {
    leaf_counts->clear();
    for (const auto& dimension : dimensions) {
      leaf_counts->push_back(leaf_paths(dimension).size());
    }
  }
  return dimensions;
}

ComboStrategy combo_strategy_from_string(std::string_view name) {
  if (name == "exhaustive") return ComboStrategy::exhaustive;
  if (name == "uniform_random") return ComboStrategy::uniform_random;
  if (name == "stratified_by_first_dimension") {
    return ComboStrategy::stratified_by_first_dimension;
  }
  throw Error(Errc::parse_error,
              "unknown combination strategy '" + std::string(name) + "'");
}

const char* to_string(ComboStrategy strategy) {
  switch (strategy) {
    case ComboStrategy::exhaustive:
      return "exhaustive";
    case ComboStrategy::uniform_random:
      return "uniform_random";
    case ComboStrategy::stratified_by_first_dimension:
      return "stratified_by_first_dimension";
  }
  return "unknown";
}

const std::string* QueryCombo::leaf_path(std::string_view dimension) const {
  for (const auto& [dim, path] : leaves) {
    if (dim == dimension) return &path;
  }
  return nullptr;
}

std::vector<QueryCombo> enumerate_combos(
    const std::vector<TaxonomyDimension>& dimensions, ComboStrategy strategy,
    std::size_t k, std::uint64_t seed, const std::string& policy_id) {
  auto leaves = sorted_leaves(dimensions);
  const std::size_t n = dimensions.size();

  // The cross product size; saturates rather than overflows. Sampling
  // strategies only compare k against it.
  std::size_t product = 1;
  bool saturated = false;
  for (const auto& dim_leaves : leaves) {
    if (product > std::numeric_limits<std::size_t>::max() / dim_leaves.size()) {
      saturated = true;
      product = std::numeric_limits<std::size_t>::max();
      break;
    }
    product *= dim_leaves.size();
  }

  std::vector<QueryCombo> combos;

  switch (strategy) {
    case ComboStrategy::exhaustive: {
      if (saturated) {
        throw Error(Errc::k_too_large, "cross product too large to enumerate");
      }
      combos.reserve(product);
      std::vector<std::size_t> index(n, 0);
      while (true) {
        combos.push_back(combo_at(dimensions, leaves, index, policy_id));
        // Odometer: last dimension fastest.
        std::size_t d = n;
        while (d > 0) {
          --d;
          if (++index[d] < leaves[d].size()) break;
          index[d] = 0;
          if (d == 0) return combos;
        }
      }
    }

    case ComboStrategy::uniform_random: {
      if (!saturated && k > product) {
        throw Error(Errc::k_too_large,
                    "requested " + std::to_string(k) + " distinct combos from "
                    "a cross product of " + std::to_string(product));
      }
      std::mt19937_64 rng(seed);
      std::set<std::vector<std::size_t>> seen;
      combos.reserve(k);
      std::vector<std::size_t> index(n);
      while (combos.size() < k) {
        for (std::size_t d = 0; d < n; ++d) {
          index[d] = uniform_index(rng, leaves[d].size());
        }
        if (!seen.insert(index).second) continue;
        combos.push_back(combo_at(dimensions, leaves, index, policy_id));
      }
      return combos;
    }

    case ComboStrategy::stratified_by_first_dimension: {
      const std::size_t strata = leaves[0].size();
      // Rest of the product (dimensions beyond the first).
      std::size_t rest = saturated ? std::numeric_limits<std::size_t>::max()
                                   : product / strata;
      const std::size_t base = k / strata;
      const std::size_t extra = k % strata;  // first `extra` strata get +1
      if (base + 1 > rest && extra > 0) {
        throw Error(Errc::k_too_large,
                    "per-stratum quota exceeds distinct combos per stratum");
      }
      if (base > rest) {
        throw Error(Errc::k_too_large,
                    "per-stratum quota exceeds distinct combos per stratum");
      }
      std::mt19937_64 rng(seed);
      combos.reserve(k);
      std::vector<std::size_t> index(n);
      for (std::size_t s = 0; s < strata; ++s) {
        const std::size_t quota = base + (s < extra ? 1 : 0);
        std::set<std::vector<std::size_t>> seen;
        std::size_t drawn = 0;
        while (drawn < quota) {
          index[0] = s;
          for (std::size_t d = 1; d < n; ++d) {
            index[d] = uniform_index(rng, leaves[d].size());
          }
          if (!seen.insert(index).second) continue;
          combos.push_back(combo_at(dimensions, leaves, index, policy_id));
          ++drawn;
        }
      }
      return combos;
    }
  }
  throw Error(Errc::parse_error, "unreachable combination strategy");
}

QuerySpec assemble_prompt(const QueryCombo& combo,
                          const std::string& prompt_template,
                          const TextRewriter& rewriter, std::uint64_t seed,
                          ComboStrategy strategy) {
  QuerySpec spec;
  spec.combo = combo;
  spec.seed = seed;
  spec.strategy = strategy;

  std::string draft;
  draft.reserve(prompt_template.size());
  std::size_t pos = 0;
  while (pos < prompt_template.size()) {
    auto open = prompt_template.find('{', pos);
    if (open == std::string::npos) {
      draft.append(prompt_template, pos, std::string::npos);
      break;
    }
    draft.append(prompt_template, pos, open - pos);
    auto close = prompt_template.find('}', open + 1);
    if (close == std::string::npos) {
      throw Error(Errc::unknown_slot, "unterminated '{' in prompt template");
    }
    std::string slot = prompt_template.substr(open + 1, close - open - 1);
    const std::string* path = combo.leaf_path(slot);
    if (path == nullptr) {
      throw Error(Errc::unknown_slot,
                  "template slot '{" + slot + "}' names no dimension");
    }
    draft += leaf_label(*path);
    pos = close + 1;
  }
  spec.slotted_draft = draft;

  if (rewriter) {
    try {
      spec.prompt = rewriter(draft);
      spec.rewritten = true;
    } catch (const std::exception&) {
      spec.prompt = draft;
      spec.rewrite_failed = true;
    }
  } else {
    spec.prompt = draft;
  }
  return spec;
}

const std::vector<AspectSpec>& default_aspects() {
  static const std::vector<AspectSpec> kAspects = {
      {"1:1", 1024, 1024}, {"16:9", 1344, 768}, {"9:16", 768, 1344},
      {"4:3", 1152, 896},  {"3:4", 896, 1152},
  };
  return kAspects;
}

std::vector<GenerationRow> emit_generation_manifest(
    const std::vector<QuerySpec>& specs, std::size_t target_per_policy,
    const std::vector<AspectSpec>& aspects) {
  if (aspects.empty()) {
    throw Error(Errc::empty_input, "no aspect specs to rotate through");
  }
  // Group policies in first-appearance order; rows within a policy keep the
  // spec order handed in.
  std::vector<std::string> order;
  std::unordered_set<std::string> seen_policies;
  std::unordered_map<std::string, std::vector<const QuerySpec*>> grouped;
  for (const auto& spec : specs) {
    const auto& policy = spec.combo.policy_id;
    if (seen_policies.insert(policy).second) order.push_back(policy);
    grouped[policy].push_back(&spec);
  }
  if (order.empty()) {
    throw Error(Errc::insufficient_specs, "no query specs provided");
  }

  std::vector<GenerationRow> rows;
  for (const auto& policy : order) {
    const auto& bucket = grouped[policy];
    if (bucket.size() < target_per_policy) {
      throw Error(Errc::insufficient_specs,
                  "policy '" + policy + "' has " +
                      std::to_string(bucket.size()) + " specs, need " +
                      std::to_string(target_per_policy));
    }
    for (std::size_t i = 0; i < target_per_policy; ++i) {
      const QuerySpec& spec = *bucket[i];
      const AspectSpec& aspect = aspects[i % aspects.size()];
      GenerationRow row;
      row.id = policy + ":" + std::to_string(i);
      row.policy_id = policy;
      row.prompt = spec.prompt;
      row.seed = spec.seed;
      row.aspect_ratio = aspect.aspect_ratio;
      row.resolution = std::to_string(aspect.width) + "x" +
                       std::to_string(aspect.height);
      row.combo = spec.combo.leaves;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string to_json_line(const GenerationRow& row) {
  ordered_json j;
  j["id"] = row.id;
  j["policy"] = row.policy_id;
  j["prompt"] = row.prompt;
  j["seed"] = row.seed;
  j["aspect_ratio"] = row.aspect_ratio;
  j["resolution"] = row.resolution;
  ordered_json combo = ordered_json::array();
  for (const auto& [dim, path] : row.combo) {
    combo.push_back(ordered_json{{"dimension", dim}, {"path", path}});
  }
  j["combo"] = std::move(combo);
  if (!row.kind.empty()) j["kind"] = row.kind;
  if (row.student_score.has_value()) j["student_score"] = *row.student_score;
  return j.dump();
}

GenerationRow generation_row_from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("generation row: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(Errc::parse_error, "generation row must be a JSON object");
  }
  GenerationRow row;
  try {
    row.id = j.at("id").get<std::string>();
    row.policy_id = j.at("policy").get<std::string>();
    row.prompt = j.at("prompt").get<std::string>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.aspect_ratio = j.at("aspect_ratio").get<std::string>();
    row.resolution = j.at("resolution").get<std::string>();
    for (const auto& entry : j.at("combo")) {
      row.combo.emplace_back(entry.at("dimension").get<std::string>(),
                             entry.at("path").get<std::string>());
    }
    if (j.contains("kind")) row.kind = j["kind"].get<std::string>();
    if (j.contains("student_score")) {
      row.student_score = j["student_score"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("generation row: ") + e.what());
  }
  return row;
}

std::string write_generation_manifest(const std::vector<GenerationRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += to_json_line(row);
    out += '\n';
  }
  return out;
}

std::vector<GenerationRow> read_generation_manifest(const std::string& text) {
  std::vector<GenerationRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      rows.push_back(generation_row_from_json_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace picket
