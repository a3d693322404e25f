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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "picket/badg.hpp"
#include "picket/corpus_filter.hpp"
#include "picket/error.hpp"
#include "picket/eval.hpp"
#include "picket/image_ref.hpp"
#include "picket/log.hpp"
#include "picket/manifest.hpp"
#include "picket/moderate.hpp"
#include "picket/service.hpp"
#include "picket/taxonomy.hpp"

namespace {

using nlohmann::ordered_json;
using namespace picket;

// Shared backend/registry flags for commands that talk to a backend.
struct BackendFlags {
  std::string backend_url;
  std::string auth_env_var;
  int timeout_ms = 10000;
  std::string mock_manifest;
  std::string policy_file;
  bool no_builtins = false;
  std::string style = "shieldgemma2";
  bool no_cache = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend-url", backend_url,
                    "scoring server base URL, e.g. http://scorer:8000");
    cmd->add_option("--auth-env", auth_env_var,
                    "env var holding the backend bearer token");
    cmd->add_option("--timeout-ms", timeout_ms, "backend request timeout");
    cmd->add_option("--mock-manifest", mock_manifest,
                    "table-driven mock backend (JSONL) instead of a server");
    cmd->add_option("--policy-file", policy_file, "custom policy file (JSON)");
    cmd->add_flag("--no-builtins", no_builtins,
                  "register only the policy file's policies");
    cmd->add_option("--style", style, "prompt style")
        ->check(CLI::IsMember({"shieldgemma2", "llavaguard"}));
    cmd->add_flag("--no-cache", no_cache, "disable prepared-image reuse");
  }

  ServiceConfig to_config() const {
    ServiceConfig config;
    if (!mock_manifest.empty()) {
      config.mock_manifest = mock_manifest;
    } else if (!backend_url.empty()) {
      HttpBackendConfig http;
      http.base_url = backend_url;
      http.auth_env_var = auth_env_var;
      http.timeout_ms = timeout_ms;
      config.http_backend = std::move(http);
    } else {
      throw Error(Errc::backend_unavailable,
                  "no backend configured: pass --backend-url or "
                  "--mock-manifest");
    }
    config.policy_file = policy_file;
    config.include_builtins = !no_builtins;
    config.style = prompt_style_from_string(style);
    config.use_prefix_cache = !no_cache;
    return config;
  }
};

int run_moderate(const std::string& image_path, const std::string& digest,
                 std::vector<std::string> policy_ids, double threshold,
                 double temperature, double alpha, const std::string& mode,
                 const BackendFlags& backend_flags) {
  ServiceConfig config = backend_flags.to_config();
  PolicyRegistry registry = make_registry(config);
  std::shared_ptr<Backend> backend = make_backend(config, registry);

  ImageRef image;
  if (!image_path.empty()) {
    image = ImageRef::from_file(image_path);
  } else if (!digest.empty()) {
    if (!is_hex_digest(digest)) {
      throw Error(Errc::invalid_request,
                  "--digest must be 64 lowercase hex characters");
    }
    image = ImageRef::from_digest(digest);
  } else {
    throw Error(Errc::invalid_request, "pass --image or --digest");
  }

  ModerationRequest request;
  request.policy_ids =
      policy_ids.empty() ? registry.ids() : std::move(policy_ids);
  request.scoring.temperature = temperature;
  request.scoring.alpha = alpha;
  request.default_threshold = threshold;
  request.mode = moderate_mode_from_string(mode);

  EngineOptions engine_options;
  engine_options.style = config.style;
  engine_options.use_prefix_cache = config.use_prefix_cache;
  ModerationEngine engine(std::move(backend), std::move(registry),
                          engine_options);

  bool any_failed = false;
  for (const ModerationOutcome& outcome :
       engine.moderate_multi(image, request)) {
    ordered_json record;
    record["policy"] = outcome.policy_id;
    if (outcome.error.has_value()) {
      any_failed = true;
      record["error"] = *outcome.error;
      record["error_code"] = outcome.error_code.value_or("");
    } else {
      record["probability"] = outcome.verdict->probability;
      if (request.mode != ModerateMode::score) {
        record["threshold"] = outcome.verdict->threshold;
        record["violative"] = outcome.verdict->violative;
      }
      if (request.mode == ModerateMode::rationale) {
        if (outcome.rationale.has_value()) {
          record["rationale"] = {{"violative", outcome.rationale->yes},
                                 {"text", outcome.rationale->rationale}};
        } else {
          record["rationale_error"] =
              outcome.rationale_error.value_or("rationale unavailable");
        }
      }
    }
    std::cout << record.dump() << "\n";
  }
  return any_failed ? 1 : 0;
}

int run_eval(const std::string& manifest_path, const std::string& policy,
             double threshold, bool sweep, const std::string& report_path,
             const std::string& model) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + manifest_path);
  }
  std::vector<LabeledScore> rows = read_eval_manifest(in, policy);
  if (rows.empty()) {
    throw Error(Errc::empty_input,
                "no rows" + (policy.empty() ? std::string()
                                            : " for policy '" + policy + "'"));
  }

  if (sweep) {
    threshold = sweep_optimal_threshold(rows).threshold;
  }
  MetricsReport report = compute_report(rows, threshold);

  ReportCell cell;
  cell.policy = policy.empty() ? "all" : policy;
  cell.model = model;
  cell.report = report;

  std::cout << render_report_text({cell});
  ordered_json summary;
  summary["threshold"] = report.threshold;
  summary["swept"] = sweep;
  summary["rows"] = rows.size();
  std::cout << summary.dump() << "\n";

  if (!report_path.empty()) {
    write_file_atomic(report_path, render_report_json({cell}) + "\n");
  }
  return 0;
}

int run_gen_queries(const std::string& taxonomy_path,
                    const std::string& strategy_name, std::size_t k,
                    std::uint64_t seed, const std::string& policy,
                    std::string template_text,
                    const std::string& template_file,
                    std::size_t target_per_policy,
                    const std::string& out_path) {
  if (template_text.empty() == template_file.empty()) {
    throw Error(Errc::invalid_request,
                "pass exactly one of --template or --template-file");
  }
  if (!template_file.empty()) {
    template_text = read_file(template_file);
    // A trailing newline in a template file is an artifact, not content.
    while (!template_text.empty() &&
           (template_text.back() == '\n' || template_text.back() == '\r')) {
      template_text.pop_back();
    }
  }

  std::vector<TaxonomyDimension> dimensions =
      load_taxonomy(read_file(taxonomy_path));
  ComboStrategy strategy = combo_strategy_from_string(strategy_name);
  if (strategy != ComboStrategy::exhaustive && k == 0) {
    throw Error(Errc::invalid_request,
                "--k is required for sampled strategies");
  }

  std::vector<QueryCombo> combos =
      enumerate_combos(dimensions, strategy, k, seed, policy);
  std::vector<QuerySpec> specs;
  specs.reserve(combos.size());
  for (std::size_t i = 0; i < combos.size(); ++i) {
    // Per-row generation seed: reproducible and distinct across rows.
    specs.push_back(assemble_prompt(combos[i], template_text, nullptr,
                                    seed + i, strategy));
  }

  const std::size_t target =
      target_per_policy == 0 ? specs.size() : target_per_policy;
  std::vector<GenerationRow> rows = emit_generation_manifest(specs, target);
  write_file_atomic(out_path, write_generation_manifest(rows));

  ordered_json summary;
  summary["combos"] = combos.size();
  summary["rows"] = rows.size();
  summary["strategy"] = strategy_name;
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_filter_captions(const std::string& manifest_path, double threshold,
                        bool inclusive, std::size_t sample_size,
                        std::uint64_t seed, bool streaming,
                        const std::string& out_path) {
  FilterConfig config;
  config.threshold = threshold;
  config.inclusive = inclusive;
  config.seed = seed;
  config.sample_size = sample_size == 0 ? 1 : sample_size;
  validate_filter_config(config);

  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + manifest_path);
  }

  std::vector<CaptionedImageRow> out_rows;
  ordered_json summary;
  if (streaming) {
    if (sample_size == 0) {
      throw Error(Errc::invalid_request,
                  "--streaming needs --sample-size");
    }
    StreamSampleStats stats;
    out_rows = filter_and_sample_stream(in, config, &stats);
    summary["scanned"] = stats.scanned;
    summary["retained"] = stats.retained;
  } else {
    std::vector<CaptionedImageRow> rows = read_caption_manifest(in);
    summary["scanned"] = rows.size();
    out_rows = filter_rows(rows, config);
    summary["retained"] = out_rows.size();
    if (sample_size > 0) {
      out_rows = sample_rows(out_rows, config);
    }
  }
  summary["written"] = out_rows.size();

  write_file_atomic(out_path, write_caption_manifest(out_rows));
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_mine_badg(const std::string& scores_path,
                  const std::string& labels_path, double fp_threshold,
                  double fn_threshold, double borderline_delta,
                  const std::string& provenance_path,
                  const std::string& out_path) {
  std::ifstream scores_in(scores_path);
  if (!scores_in) {
    throw Error(Errc::io_error, "cannot open " + scores_path);
  }
  std::ifstream labels_in(labels_path);
  if (!labels_in) {
    throw Error(Errc::io_error, "cannot open " + labels_path);
  }

  MiningOptions options;
  if (borderline_delta > 0.0) options.borderline_delta = borderline_delta;

  DisagreementSet mined =
      mine_disagreements(read_student_scores(scores_in),
                         read_judge_labels(labels_in), fp_threshold,
                         fn_threshold, options);

  ordered_json summary;
  summary["false_positives"] = mined.false_positives.size();
  summary["false_negatives"] = mined.false_negatives.size();
  summary["missing_label"] = mined.missing_label.size();
  summary["missing_score"] = mined.missing_score.size();

  if (!out_path.empty()) {
    if (provenance_path.empty()) {
      throw Error(Errc::missing_provenance,
                  "--out needs --provenance to map samples to prompts");
    }
    std::map<std::string, GenerationRow> lookup;
    for (GenerationRow& row :
         read_generation_manifest(read_file(provenance_path))) {
      std::string id = row.id;
      lookup.emplace(std::move(id), std::move(row));
    }
    AdversarialEmitResult emitted = emit_adversarial_specs(mined, lookup);
    write_file_atomic(out_path, write_generation_manifest(emitted.rows));
    summary["emitted"] = emitted.rows.size();
    summary["missing_provenance"] = emitted.missing_provenance.size();
  }

  std::cout << summary.dump() << "\n";
  return 0;
}

int run_serve(const std::string& config_path, std::string listen) {
  ServiceConfig config = load_service_config(read_file(config_path));
  if (listen.empty()) {
    if (const char* env = std::getenv(kListenEnvVar)) listen = env;
  }
  if (listen.empty()) listen = config.listen;

  std::unique_ptr<ModerationService> service = make_service(config);
  service->run(listen);
  return 0;
}

int run_policies(const std::string& policy_file, bool no_builtins) {
  ServiceConfig config;
  config.policy_file = policy_file;
  config.include_builtins = !no_builtins;
  PolicyRegistry registry = make_registry(config);

  ordered_json out;
  out["policies"] = ordered_json::array();
  for (const Policy& policy : registry.policies()) {
    out["policies"].push_back({{"id", policy.id},
                               {"title", policy.title},
                               {"definition", policy.definition}});
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"picket: policy-aware image moderation toolkit"};
  app.require_subcommand(1);

  std::string log_level_name = "error";
  app.add_option("--log-level", log_level_name, "off|error|info|debug")
      ->check(CLI::IsMember({"off", "error", "info", "debug"}));

  // moderate
  auto* moderate_cmd =
      app.add_subcommand("moderate", "score an image against policies");
  std::string image_path;
  std::string digest;
  std::vector<std::string> policy_ids;
  double threshold = 0.5;
  double temperature = 1.0;
  double alpha = 0.0;
  std::string mode = "verdict";
  BackendFlags moderate_backend;
  moderate_cmd->add_option("--image", image_path, "image file");
  moderate_cmd->add_option("--digest", digest,
                           "pre-resolved image digest (64 hex)");
  moderate_cmd->add_option("--policy", policy_ids,
                           "policy ids (default: all registered)")
      ->delimiter(',');
  moderate_cmd->add_option("--threshold", threshold, "decision threshold");
  moderate_cmd->add_option("--temperature", temperature, "score temperature");
  moderate_cmd->add_option("--alpha", alpha, "score smoothing");
  moderate_cmd->add_option("--mode", mode, "score|verdict|rationale")
      ->check(CLI::IsMember({"score", "verdict", "rationale"}));
  moderate_backend.add_to(moderate_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compute metrics for a manifest");
  std::string eval_manifest;
  std::string eval_policy;
  double eval_threshold = 0.5;
  bool eval_sweep = false;
  std::string eval_report;
  std::string eval_model = "model";
  eval_cmd->add_option("--manifest", eval_manifest, "labeled-score manifest")
      ->required();
  eval_cmd->add_option("--policy", eval_policy, "restrict to one policy id");
  auto* thr_opt =
      eval_cmd->add_option("--threshold", eval_threshold, "decision threshold");
  eval_cmd->add_flag("--sweep", eval_sweep, "pick the F1-optimal threshold")
      ->excludes(thr_opt);
  eval_cmd->add_option("--report", eval_report, "write the JSON report here");
  eval_cmd->add_option("--model", eval_model, "model name for the report");

  // gen-queries
  auto* gen_cmd =
      app.add_subcommand("gen-queries", "emit an image-generation manifest");
  std::string taxonomy_path;
  std::string strategy_name = "exhaustive";
  std::size_t gen_k = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_policy = "default";
  std::string template_text;
  std::string template_file;
  std::size_t target_per_policy = 0;
  std::string gen_out;
  gen_cmd->add_option("--taxonomy", taxonomy_path, "taxonomy file (JSON)")
      ->required();
  gen_cmd->add_option("--strategy", strategy_name,
                      "exhaustive|uniform_random|"
                      "stratified_by_first_dimension")
      ->check(CLI::IsMember({"exhaustive", "uniform_random",
                             "stratified_by_first_dimension"}));
  gen_cmd->add_option("--k", gen_k, "combos to draw (sampled strategies)");
  gen_cmd->add_option("--seed", gen_seed, "sampling and generation seed");
  gen_cmd->add_option("--policy", gen_policy, "policy id to tag rows with");
  gen_cmd->add_option("--template", template_text,
                      "prompt template with {dimension} slots");
  gen_cmd->add_option("--template-file", template_file,
                      "file holding the prompt template");
  gen_cmd->add_option("--target-per-policy", target_per_policy,
                      "rows per policy (default: all specs)");
  gen_cmd->add_option("--out", gen_out, "output manifest")->required();

  // filter-captions
  auto* filter_cmd = app.add_subcommand(
      "filter-captions", "select corpus rows by caption safety scores");
  std::string filter_manifest;
  double filter_threshold = 0.1;
  bool filter_inclusive = false;
  std::size_t filter_sample_size = 0;
  std::uint64_t filter_seed = 0;
  bool filter_streaming = false;
  std::string filter_out;
  filter_cmd->add_option("--manifest", filter_manifest, "caption manifest")
      ->required();
  filter_cmd->add_option("--threshold", filter_threshold,
                         "retain rows whose max category score exceeds this");
  filter_cmd->add_flag("--inclusive", filter_inclusive,
                       "retain on >= instead of strict >");
  filter_cmd->add_option("--sample-size", filter_sample_size,
                         "rows to sample after filtering (0 = keep all)");
  filter_cmd->add_option("--seed", filter_seed, "sampling seed");
  filter_cmd->add_flag("--streaming", filter_streaming,
                       "single-pass reservoir sampling");
  filter_cmd->add_option("--out", filter_out, "output manifest")->required();

  // mine-badg
  auto* mine_cmd = app.add_subcommand(
      "mine-badg", "mine student/judge disagreements for regeneration");
  std::string scores_path;
  std::string labels_path;
  double fp_threshold = 0.5;
  double fn_threshold = 0.5;
  double borderline_delta = 0.0;
  std::string provenance_path;
  std::string mine_out;
  mine_cmd->add_option("--scores", scores_path, "student score manifest")
      ->required();
  mine_cmd->add_option("--labels", labels_path, "judge label manifest")
      ->required();
  mine_cmd->add_option("--fp-thr", fp_threshold,
                       "judge-negative rows scoring >= this are FPs");
  mine_cmd->add_option("--fn-thr", fn_threshold,
                       "judge-positive rows scoring < this are FNs");
  mine_cmd->add_option("--borderline-delta", borderline_delta,
                       "only rows with |score - 0.5| below this");
  mine_cmd->add_option("--provenance", provenance_path,
                       "generation manifest mapping sample ids to prompts");
  mine_cmd->add_option("--out", mine_out, "adversarial manifest to write");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the moderation service");
  std::string serve_config;
  std::string serve_listen;
  serve_cmd->add_option("--config", serve_config, "service config (JSON)")
      ->required();
  serve_cmd->add_option("--listen", serve_listen,
                        "host:port (overrides config and " +
                            std::string(kListenEnvVar) + ")");

  // policies
  auto* policies_cmd =
      app.add_subcommand("policies", "list registered policies");
  std::string policies_file;
  bool policies_no_builtins = false;
  policies_cmd->add_option("--policy-file", policies_file,
                           "custom policy file (JSON)");
  policies_cmd->add_flag("--no-builtins", policies_no_builtins,
                         "list only the policy file's policies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  log_level().store(log_level_name == "off"     ? LogLevel::off
                    : log_level_name == "info"  ? LogLevel::info
                    : log_level_name == "debug" ? LogLevel::debug
                                                : LogLevel::error);

  try {
    if (*moderate_cmd) {
      return run_moderate(image_path, digest, policy_ids, threshold,
                          temperature, alpha, mode, moderate_backend);
    }
    if (*eval_cmd) {
      return run_eval(eval_manifest, eval_policy, eval_threshold, eval_sweep,
                      eval_report, eval_model);
    }
    if (*gen_cmd) {
      return run_gen_queries(taxonomy_path, strategy_name, gen_k, gen_seed,
                             gen_policy, template_text, template_file,
                             target_per_policy, gen_out);
    }
    if (*filter_cmd) {
      return run_filter_captions(filter_manifest, filter_threshold,
                                 filter_inclusive, filter_sample_size,
                                 filter_seed, filter_streaming, filter_out);
    }
    if (*mine_cmd) {
      return run_mine_badg(scores_path, labels_path, fp_threshold,
                           fn_threshold, borderline_delta, provenance_path,
                           mine_out);
    }
    if (*serve_cmd) {
      return run_serve(serve_config, serve_listen);
    }
    if (*policies_cmd) {
      return run_policies(policies_file, policies_no_builtins);
    }
  } catch (const picket::Error& e) {
    ordered_json err;
    err["error"] = {{"code", e.code_name()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"] = {{"code", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
