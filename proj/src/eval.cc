#include "gdec/eval.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gdec/error.h"
#include "gdec/support/rng.h"

namespace gdec {

using ordered_json = nlohmann::ordered_json;

void EvalSample::validate() const {
  if (truth_ids.empty()) {
    throw DatasetError("sample \"" + id + "\": truth_ids must be non-empty");
  }
  std::set<std::string> ctx_ids;
  for (const auto& c : contexts) ctx_ids.insert(c.doc_id);
  for (const auto& t : truth_ids) {
    if (ctx_ids.count(t) == 0) {
      throw DatasetError("sample \"" + id + "\": truth id \"" + t +
                         "\" does not appear in the contexts");
    }
  }
}

std::vector<EvalSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset " + path);
  std::vector<EvalSample> samples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      EvalSample s;
      s.id = doc.at("id").get<std::string>();
      s.query = doc.at("query").get<std::string>();
      for (const auto& c : doc.at("contexts")) {
        s.contexts.push_back({c.at("doc_id").get<std::string>(), c.at("text").get<std::string>()});
      }
      s.truth_ids = doc.at("truth_ids").get<std::vector<std::string>>();
      s.reference_response = doc.value("reference_response", "");
      s.validate();
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

void write_dataset(const std::vector<EvalSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : samples) {
    ordered_json doc;
    doc["id"] = s.id;
    doc["query"] = s.query;
    ordered_json contexts = ordered_json::array();
    for (const auto& c : s.contexts) {
      ordered_json ctx;
      ctx["doc_id"] = c.doc_id;
      ctx["text"] = c.text;
      contexts.push_back(std::move(ctx));
    }
    doc["contexts"] = std::move(contexts);
    doc["truth_ids"] = s.truth_ids;
    doc["reference_response"] = s.reference_response;
    out << doc.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

PromptTemplates default_templates() {
  PromptTemplates t;
  t.system_prompt =
      "You are a retrieval-augmented assistant. Answer the query using only the "
      "provided context passages and cite every document you rely on by wrapping "
      "its id in (doc_id)...(/doc_id) tags after your answer, in the form: "
      "resp: <answer> doc ids: <tagged ids>.";
  t.user_template = "rag ctx: {ctx} query: {q}";
  t.assistant_template = "resp: {r} doc ids: {truth_id}";
  return t;
}

std::string default_id_pattern() {
  return R"(\(doc_id\)([^()]+)\(/doc_id\)|<doc_id>([^<>]+)</doc_id>)";
}

namespace {

std::string replace_all(std::string text, const std::string& what, const std::string& with) {
  size_t pos = 0;
  while ((pos = text.find(what, pos)) != std::string::npos) {
    text.replace(pos, what.size(), with);
    pos += with.size();
  }
  return text;
}

std::string render_contexts(const EvalSample& sample, const PromptTemplates& templates) {
  std::string out;
  for (size_t i = 0; i < sample.contexts.size(); ++i) {
    if (i > 0) out += "\n";
    out += templates.wrap_id(sample.contexts[i].doc_id) + " " + sample.contexts[i].text;
  }
  return out;
}

std::string render_user(const EvalSample& sample, const PromptTemplates& templates) {
  std::string msg = replace_all(templates.user_template, "{ctx}", render_contexts(sample, templates));
  return replace_all(msg, "{q}", sample.query);
}

std::string render_assistant(const EvalSample& sample, const PromptTemplates& templates) {
  std::string tags;
  for (size_t i = 0; i < sample.truth_ids.size(); ++i) {
    if (i > 0) tags += " ";
    tags += templates.wrap_id(sample.truth_ids[i]);
  }
  std::string msg = replace_all(templates.assistant_template, "{r}", sample.reference_response);
  return replace_all(msg, "{truth_id}", tags);
}

}  // namespace

std::vector<ChatMessage> build_history(const EvalSample& sample,
                                       const std::vector<EvalSample>& exemplars, int n,
                                       const PromptTemplates& templates) {
  if (n < 0 || static_cast<size_t>(n) > exemplars.size()) {
    throw NotEnoughExemplarsError("need " + std::to_string(n) + " exemplars, have " +
                                  std::to_string(exemplars.size()));
  }
  std::vector<ChatMessage> history;
  history.reserve(2 * static_cast<size_t>(n) + 2);
  history.push_back({"system", templates.system_prompt});
  for (int j = 0; j < n; ++j) {
    const EvalSample& ex = exemplars[static_cast<size_t>(j)];
    history.push_back({"user", render_user(ex, templates)});
    history.push_back({"assistant", render_assistant(ex, templates)});
  }
  history.push_back({"user", render_user(sample, templates)});
  return history;
}

std::vector<std::string> extract_ids(const std::string& response, const std::string& pattern) {
  std::regex re;
  try {
    re = std::regex(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw ValidationError(std::string("invalid id-capture pattern: ") + e.what());
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto begin = std::sregex_iterator(response.begin(), response.end(), re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    for (size_t g = 1; g < m.size(); ++g) {
      if (m[g].matched) {
        std::string id = m[g].str();
        if (seen.insert(id).second) out.push_back(std::move(id));
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

PlantedResponder PlantedResponder::parse(const std::string& spec) {
  PlantedResponder r;
  if (spec == "planted" || spec.empty()) return r;
  const std::string prefix = "planted:";
  if (spec.rfind(prefix, 0) != 0) {
    throw ValidationError("unknown mock target \"" + spec +
                          "\"; expected planted[:omit_every=D,wrong_every=K,wrong_count=W]");
  }
  std::stringstream ss(spec.substr(prefix.size()));
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("bad mock parameter \"" + kv + "\"");
    std::string key = kv.substr(0, eq);
    int value;
    try {
      value = std::stoi(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad mock parameter value in \"" + kv + "\"");
    }
    if (value < 0) throw ValidationError("mock parameters must be >= 0");
    if (key == "omit_every") {
      r.omit_every = value;
    } else if (key == "wrong_every") {
      r.wrong_every = value;
    } else if (key == "wrong_count") {
      r.wrong_count = value;
    } else {
      throw ValidationError("unknown mock parameter \"" + key + "\"");
    }
  }
  return r;
}

std::string PlantedResponder::respond(const EvalSample& sample, size_t scored_index,
                                      const PromptTemplates& templates) const {
  std::vector<std::string> ids;
  bool omit = omit_every > 0 && scored_index % static_cast<size_t>(omit_every) == 0;
  if (!omit) ids = sample.truth_ids;
  if (wrong_every > 0 && scored_index % static_cast<size_t>(wrong_every) == 0) {
    for (int j = 0; j < wrong_count; ++j) {
      ids.push_back("hallucinated::" + sample.id + "::" + std::to_string(j));
    }
  }
  std::string tags;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) tags += " ";
    tags += templates.wrap_id(ids[i]);
  }
  std::string msg = replace_all(templates.assistant_template, "{r}", sample.reference_response);
  return replace_all(msg, "{truth_id}", tags);
}

std::string backend_hint_value(const std::string& backend) {
  if (backend == "fsm") return "outlines";
  if (backend == "pda") return "xgrammar";
  if (backend == "enforcer") return "lm-format-enforcer";
  if (backend == "none") return "";
  throw ValidationError("unknown backend \"" + backend + "\"");
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

EvalRunResult run_eval(const EvalRunConfig& config) {
  if (config.turns < 0 || config.turns > 2) {
    throw ValidationError("turns must be 0, 1 or 2");
  }
  backend_hint_value(config.backend);  // validates the name
  std::vector<EvalSample> samples = load_dataset(config.dataset_path);
  if (samples.size() <= static_cast<size_t>(config.turns)) {
    throw NotEnoughExemplarsError("dataset has " + std::to_string(samples.size()) +
                                  " samples; " + std::to_string(config.turns) +
                                  " exemplars plus at least one scored sample are needed");
  }
  const std::vector<EvalSample> exemplars(samples.begin(), samples.begin() + config.turns);
  const std::vector<EvalSample> scored(samples.begin() + config.turns, samples.end());
  const std::string pattern =
      config.id_pattern.empty() ? default_id_pattern() : config.id_pattern;

  const bool is_mock = config.target.rfind("mock:", 0) == 0 || config.target == "mock";
  const bool is_remote = config.target.rfind("remote:", 0) == 0;
  if (!is_mock && !is_remote) {
    throw ValidationError("target must be mock:<spec> or remote:<url>");
  }

  std::optional<PlantedResponder> responder;
  std::optional<ChatClient> client;
  if (is_mock) {
    std::string spec = config.target == "mock" ? "planted" : config.target.substr(5);
    responder = PlantedResponder::parse(spec);
  } else {
    ChatClientConfig cc;
    cc.endpoint = config.target.substr(7);
    cc.timeout_ms = config.timeout_ms;
    cc.api_key_env = config.api_key_env;
    cc.max_in_flight = std::max(1, config.jobs);
    client.emplace(cc);
  }

  EvalRunResult run;
  run.results.resize(scored.size());
  run.truth_sets.resize(scored.size());
  std::vector<double> latencies(scored.size(), 0.0);

  auto evaluate_one = [&](size_t i) {
    const EvalSample& sample = scored[i];
    run.truth_sets[i] = sample.truth_set();
    std::string response;
    std::string error;
    if (is_mock) {
      response = responder->respond(sample, i, config.templates);
    } else {
      try {
        ChatRequest req;
        req.model = config.model;
        req.messages = build_history(sample, exemplars, config.turns, config.templates);
        req.temperature = config.temperature;
        req.max_tokens = config.max_tokens;
        req.response_schema_json = config.response_schema_json;
        req.guided_backend = backend_hint_value(config.backend);
        ChatResponse resp = client->chat(req);
        response = resp.text;
        latencies[i] = resp.latency_ms;
      } catch (const Error& e) {
        error = std::string(error_code_name(e.code())) + ": " + e.what();
      }
    }
    EvalResult result;
    if (error.empty()) {
      result = eval_sample(run.truth_sets[i], extract_ids(response, pattern));
      result.raw_response = response;
    } else {
      result.error = error;
    }
    result.sample_id = sample.id;
    run.results[i] = std::move(result);
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < scored.size(); ++i) evaluate_one(i);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          size_t i = cursor.fetch_add(1);
          if (i >= scored.size()) break;
          evaluate_one(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  run.report = aggregate_metrics(config.turns, exemplars.size(), run.results, run.truth_sets);
  if (is_remote) {
    double total = 0.0;
    size_t counted = 0;
    for (size_t i = 0; i < latencies.size(); ++i) {
      if (run.results[i].error.empty()) {
        total += latencies[i];
        ++counted;
      }
    }
    run.mean_remote_latency_ms = counted ? total / static_cast<double>(counted) : 0.0;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

void write_eval_outputs(const std::string& out_dir, const EvalRunConfig& config,
                        const EvalRunResult& result) {
  ordered_json config_echo;
  config_echo["dataset"] = config.dataset_path;
  config_echo["turns"] = config.turns;
  config_echo["target"] = config.target;
  config_echo["backend"] = config.backend;
  config_echo["seed"] = config.seed;
  config_echo["jobs"] = config.jobs;
  config_echo["id_pattern"] =
      config.id_pattern.empty() ? default_id_pattern() : config.id_pattern;
  config_echo["tag_open"] = config.templates.tag_open;
  config_echo["tag_close"] = config.templates.tag_close;
  config_echo["model"] = config.model;
  config_echo["temperature"] = config.temperature;
  config_echo["max_tokens"] = config.max_tokens;

  const MetricsReport& m = result.report;
  ordered_json report;
  report["config"] = config_echo;
  report["turns"] = m.turns;
  report["scored_samples"] = m.scored_samples;
  report["exemplar_samples"] = m.exemplar_samples;
  report["failed_samples"] = m.failed_samples;
  report["success_count"] = m.success_count;
  report["hallucination_count"] = m.hallucination_count;
  report["total_resp_ids"] = m.total_resp_ids;
  report["total_fp"] = m.total_fp;
  report["success_rate"] = m.success_rate;
  report["hallucination_rate"] = m.hallucination_rate;
  report["fp_rate_sample_level"] = m.fp_rate_sample_level;
  report["fp_rate_reference_level"] = m.fp_rate_reference_level;
  report["total_refs"] = m.total_refs;
  report["unique_refs"] = m.unique_refs;
  if (config.target.rfind("remote:", 0) == 0) {
    report["mean_remote_latency_ms"] = result.mean_remote_latency_ms;
  }

  std::ofstream report_out(out_dir + "/report.json", std::ios::binary);
  if (!report_out) throw IoError("cannot write " + out_dir + "/report.json");
  report_out << report.dump(2) << "\n";

  std::ofstream results_out(out_dir + "/results.jsonl", std::ios::binary);
  if (!results_out) throw IoError("cannot write " + out_dir + "/results.jsonl");
  for (const auto& r : result.results) {
    ordered_json line;
    line["id"] = r.sample_id;
    line["resp_ids"] = r.resp_ids;
    line["corr"] = r.corr;
    line["fp"] = r.fp;
    line["success"] = r.success;
    line["hallucination"] = r.hallucination;
    line["raw_response"] = r.raw_response;
    line["error"] = r.error;
    results_out << line.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic dataset
// ---------------------------------------------------------------------------

std::vector<EvalSample> generate_dataset(const DatasetGenConfig& config) {
  if (config.samples == 0) throw ValidationError("samples must be >= 1");
  if (config.refs_per_sample < 1) throw ValidationError("refs_per_sample must be >= 1");
  Rng rng(config.seed ^ 0xda7a5e7ull);
  const size_t pool_size = config.id_pool ? config.id_pool : 2 * config.samples;

  // Dotted reference ids in the style of long legal document identifiers.
  std::vector<std::string> pool;
  pool.reserve(pool_size);
  static const char* kSections[] = {"DOR", "KAR", "GEN", "TEB", "YON"};
  for (size_t j = 0; j < pool_size; ++j) {
    std::string id;
    id += std::to_string(100 + rng.next_below(900));
    id += ".";
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04u", static_cast<unsigned>(rng.next_below(10000)));
    id += buf;
    id += ".";
    id += kSections[rng.next_below(5)];
    id += ".";
    id += std::to_string(2015 + rng.next_below(11));
    id += "_";
    std::snprintf(buf, sizeof buf, "%07u", static_cast<unsigned>(rng.next_below(10000000)));
    id += std::to_string(1 + rng.next_below(9)) + buf;
    id += "_page_";
    id += std::to_string(1 + rng.next_below(900));
    pool.push_back(std::move(id));
  }

  static const char* kTopics[] = {"tax assessment",   "contract termination", "data retention",
                                  "appeal deadlines", "license obligations",  "liability caps"};
  std::vector<EvalSample> samples;
  samples.reserve(config.samples);
  for (size_t i = 0; i < config.samples; ++i) {
    EvalSample s;
    s.id = "sample-" + std::to_string(i);
    const char* topic = kTopics[rng.next_below(6)];
    s.query = std::string("What do the retrieved passages say about ") + topic + "?";

    std::set<size_t> picked;
    while (picked.size() < static_cast<size_t>(config.refs_per_sample)) {
      picked.insert(rng.next_below(pool.size()));
    }
    for (size_t j : picked) {
      s.contexts.push_back({pool[j], std::string("Passage ") + std::to_string(j) + " discusses " +
                                         topic + " in detail."});
    }
    size_t truth_count = 1 + rng.next_below(s.contexts.size());
    for (size_t k = 0; k < truth_count; ++k) s.truth_ids.push_back(s.contexts[k].doc_id);
    s.reference_response = std::string("The passages describe ") + topic + ".";
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace gdec
