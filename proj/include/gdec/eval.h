/*!
 * \file gdec/eval.h
 * \brief Multi-turn RAG evaluation: chat-history construction with n
 *        exemplar turns, id extraction, scoring and reporting.
 *
 * A run takes a JSON-Lines dataset, reserves its first n samples as fixed
 * exemplars (excluded from scoring), builds for every scored sample the
 * history [system, (user, assistant) x n, user], queries the target (a
 * deterministic planted responder or an OpenAI-compatible server), extracts
 * cited document ids by regex, and scores success / hallucination.
 * Per-target failures are recorded on the sample, never crash the run.
 * With a mock target the whole run is bit-reproducible from the seed.
 */
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gdec/llm_client.h"
#include "gdec/metrics.h"

namespace gdec {

struct EvalContext {
  std::string doc_id;
  std::string text;
};

struct EvalSample {
  std::string id;
  std::string query;
  std::vector<EvalContext> contexts;
  std::vector<std::string> truth_ids;  // non-empty, each present in contexts
  std::string reference_response;

  std::set<std::string> truth_set() const {
    return std::set<std::string>(truth_ids.begin(), truth_ids.end());
  }
  void validate() const;
};

/// JSON-Lines: one sample per line,
/// {"id","query","contexts":[{"doc_id","text"}],"truth_ids":[],"reference_response"}.
std::vector<EvalSample> load_dataset(const std::string& path);
void write_dataset(const std::vector<EvalSample>& samples, const std::string& path);

struct PromptTemplates {
  std::string system_prompt;             // default provided by default_templates()
  std::string user_template;             // "rag ctx: {ctx} query: {q}"
  std::string assistant_template;        // "resp: {r} doc ids: {truth_id}"
  std::string tag_open = "(doc_id)";
  std::string tag_close = "(/doc_id)";

  std::string wrap_id(const std::string& id) const { return tag_open + id + tag_close; }
};

PromptTemplates default_templates();

/// The default id-capture pattern accepts both the parenthesised and the
/// XML-style tag renderings.
std::string default_id_pattern();

/// [system, (user exemplar, assistant exemplar) x n, user eval]; message
/// count is always 2n + 2. Throws NotEnoughExemplars.
std::vector<ChatMessage> build_history(const EvalSample& sample,
                                       const std::vector<EvalSample>& exemplars, int n,
                                       const PromptTemplates& templates);

/// All non-overlapping matches of the capture pattern, first-occurrence
/// order, duplicates removed. No matches -> empty list.
std::vector<std::string> extract_ids(const std::string& response, const std::string& pattern);

/// Deterministic mock target. For scored sample index i it answers with the
/// sample's truth ids (all of them), except:
///   omit_every  = D > 0: every D-th sample (i % D == 0) cites nothing
///   wrong_every = K > 0: every K-th sample gains `wrong_count` fabricated
///                 ids (prefix "hallucinated::", never in any truth set)
struct PlantedResponder {
  int omit_every = 0;
  int wrong_every = 0;
  int wrong_count = 1;

  /// Spec syntax: "planted" or "planted:omit_every=D,wrong_every=K,wrong_count=W".
  static PlantedResponder parse(const std::string& spec);

  std::string respond(const EvalSample& sample, size_t scored_index,
                      const PromptTemplates& templates) const;
};

struct EvalRunConfig {
  std::string dataset_path;
  int turns = 0;  // 0 | 1 | 2
  std::string target = "mock:planted";  // mock:<spec> | remote:<url>
  std::string backend = "none";         // fsm | pda | enforcer | none
  uint64_t seed = 0;
  int jobs = 1;
  std::string id_pattern;  // empty -> default_id_pattern()
  PromptTemplates templates = default_templates();

  // remote-target knobs
  std::string model = "default";
  double temperature = 0.0;
  int max_tokens = 512;
  std::string response_schema_json;  // attached as response_format when set
  int timeout_ms = 30000;
  std::string api_key_env = "GDEC_API_KEY";
};

struct EvalRunResult {
  MetricsReport report;
  std::vector<EvalResult> results;       // dataset order
  std::vector<std::set<std::string>> truth_sets;
  double mean_remote_latency_ms = 0.0;   // remote targets only
};

EvalRunResult run_eval(const EvalRunConfig& config);

/// Serialization shared by the CLI and tests: report.json (+ config echo),
/// results.jsonl. Mock-target outputs contain nothing non-deterministic.
void write_eval_outputs(const std::string& out_dir, const EvalRunConfig& config,
                        const EvalRunResult& result);

/// Maps CLI backend names to the hint values structured-output servers use.
std::string backend_hint_value(const std::string& backend);

struct DatasetGenConfig {
  size_t samples = 100;
  int refs_per_sample = 3;   // contexts per sample; truth is a random
                             // non-empty subset
  uint64_t seed = 0;
  size_t id_pool = 0;        // 0 -> 2 * samples
};

/// Synthetic dataset with long dotted reference-style ids drawn from a
/// finite pool, so total vs unique reference counts diverge realistically.
std::vector<EvalSample> generate_dataset(const DatasetGenConfig& config);

}  // namespace gdec
