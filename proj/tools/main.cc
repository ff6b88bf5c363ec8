// gdec: guided-decoding toolkit CLI.
//
// Subcommands: compile, decode, eval, report, gen-dataset. Every run writes
// its fully resolved configuration next to its outputs (or embeds it in the
// emitted JSON), so any result can be reproduced from the artifacts alone.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdec/char_enforcer.h"
#include "gdec/decoder.h"
#include "gdec/error.h"
#include "gdec/eval.h"
#include "gdec/grammar.h"
#include "gdec/llm_client.h"
#include "gdec/pda.h"
#include "gdec/regex_fsm.h"
#include "gdec/support/encoding.h"
#include "gdec/vocab.h"

namespace {

using gdec::Error;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gdec::IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gdec::IoError("cannot write " + path);
  out << contents;
}

struct CommonOptions {
  bool json_errors = false;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
};

struct ConstraintSpec {
  std::string regex;
  std::string grammar_path;
  std::string schema_path;

  int count() const {
    return (!regex.empty() ? 1 : 0) + (!grammar_path.empty() ? 1 : 0) +
           (!schema_path.empty() ? 1 : 0);
  }
};

gdec::ConstraintPtr build_constraint(const std::string& backend, const ConstraintSpec& spec,
                                     gdec::VocabularyPtr vocab) {
  if (backend == "none") {
    if (spec.count() != 0) {
      throw gdec::ValidationError("backend none takes no constraint");
    }
    return std::make_shared<gdec::NoConstraint>(std::move(vocab));
  }
  if (spec.count() != 1) {
    throw gdec::ValidationError("exactly one of --regex, --grammar, --json-schema is required");
  }
  if (backend == "fsm") {
    std::string pattern = spec.regex;
    if (!spec.schema_path.empty()) {
      pattern = gdec::schema_to_regex(gdec::load_schema(spec.schema_path));
    } else if (!spec.grammar_path.empty()) {
      throw gdec::ValidationError("the fsm backend takes --regex or --json-schema, not --grammar");
    }
    return std::make_shared<gdec::FsmConstraint>(pattern, std::move(vocab));
  }
  if (backend == "pda") {
    if (!spec.grammar_path.empty()) {
      return std::make_shared<gdec::PdaConstraint>(gdec::load_grammar(spec.grammar_path),
                                                   std::move(vocab));
    }
    if (!spec.schema_path.empty()) {
      return gdec::PdaConstraint::from_schema(gdec::load_schema(spec.schema_path),
                                              std::move(vocab));
    }
    gdec::Grammar g;
    int32_t rule = g.add_rule("start");
    g.add_production(rule, {{gdec::GrammarSymbol::Kind::kTerminal,
                             g.add_terminal(spec.regex, "/" + spec.regex + "/")}});
    return std::make_shared<gdec::PdaConstraint>(g, std::move(vocab), gdec::PdaOptions{},
                                                 "regex");
  }
  if (backend == "enforcer") {
    if (spec.schema_path.empty()) {
      throw gdec::ValidationError("the enforcer backend requires --json-schema");
    }
    auto schema = std::make_shared<gdec::Schema>(gdec::load_schema(spec.schema_path));
    return std::make_shared<gdec::CharConstraint>(schema, std::move(vocab));
  }
  throw gdec::ValidationError("unknown backend \"" + backend + "\" (fsm|pda|enforcer|none)");
}

std::unique_ptr<gdec::LogitSource> build_source(const std::string& spec, size_t vocab_size,
                                                gdec::TokenId eos_id) {
  if (spec.rfind("remote:", 0) == 0) {
    return gdec::make_remote_logit_source(spec.substr(7), vocab_size);
  }
  if (spec.rfind("mock:", 0) != 0) {
    throw gdec::ValidationError("source must be mock:<variant>[:...] or remote:<url>");
  }
  std::string rest = spec.substr(5);
  auto colon = rest.find(':');
  std::string variant = rest.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : rest.substr(colon + 1);
  auto parse_seed = [&](const std::string& s) -> uint64_t {
    if (s.empty()) return 0;
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw gdec::ValidationError("bad seed \"" + s + "\" in source spec");
    }
  };
  if (variant == "random") {
    return std::make_unique<gdec::MockRandomSource>(parse_seed(arg), vocab_size);
  }
  if (variant == "adversarial") {
    return std::make_unique<gdec::MockAdversarialSource>(parse_seed(arg), vocab_size);
  }
  if (variant == "scripted") {
    std::vector<gdec::TokenId> script;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        script.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw gdec::ValidationError("bad token id \"" + item + "\" in scripted source");
      }
    }
    return std::make_unique<gdec::MockScriptedSource>(std::move(script), 10.0f, vocab_size,
                                                      eos_id);
  }
  throw gdec::ValidationError("unknown mock source \"" + variant +
                              "\" (random|scripted|adversarial)");
}

// ---------------------------------------------------------------------------
// compile
// ---------------------------------------------------------------------------

struct CompileArgs {
  ConstraintSpec spec;
  std::string vocab_path;
  std::string out_path;
};

int run_compile(const CompileArgs& args) {
  if (args.spec.count() != 1) {
    throw gdec::ValidationError("exactly one of --regex, --grammar, --json-schema is required");
  }
  auto vocab = std::make_shared<gdec::Vocabulary>(gdec::load_vocabulary(args.vocab_path));
  ordered_json config;
  config["command"] = "compile";
  config["vocab"] = args.vocab_path;
  config["out"] = args.out_path;

  if (!args.spec.regex.empty()) {
    auto constraint = std::make_shared<gdec::FsmConstraint>(args.spec.regex, vocab);
    ordered_json summary;
    summary["pattern"] = args.spec.regex;
    summary["fsm_states"] = constraint->fsm().num_states();
    summary["vocab_size"] = vocab->size();
    config["regex"] = args.spec.regex;
    if (!args.out_path.empty()) {
      write_file(args.out_path, constraint->save());
      write_file(args.out_path + ".config.json", config.dump(2) + "\n");
    }
    summary["config"] = config;
    std::cout << summary.dump(2) << "\n";
    return 0;
  }

  gdec::Grammar grammar;
  if (!args.spec.grammar_path.empty()) {
    grammar = gdec::load_grammar(args.spec.grammar_path);
    config["grammar"] = args.spec.grammar_path;
  } else {
    grammar = gdec::schema_to_grammar(gdec::load_schema(args.spec.schema_path));
    config["json_schema"] = args.spec.schema_path;
  }
  gdec::PdaEngine engine(grammar, vocab);
  ordered_json summary;
  summary["rules_after_inlining"] = engine.grammar().num_rules();
  summary["terminals"] = engine.grammar().num_terminals();
  size_t positions = 0;
  for (size_t t = 0; t < engine.grammar().num_terminals(); ++t) {
    positions += static_cast<size_t>(engine.terminal_fsm(static_cast<int32_t>(t)).num_states());
  }
  summary["mask_table_positions"] = positions;
  summary["vocab_size"] = vocab->size();
  summary["config"] = config;
  if (!args.out_path.empty()) write_file(args.out_path, summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string backend = "none";
  ConstraintSpec spec;
  std::string vocab_path;
  std::string source = "mock:random:0";
  gdec::DecodeConfig config;
};

ordered_json decode_config_echo(const DecodeArgs& args) {
  ordered_json echo;
  echo["command"] = "decode";
  echo["backend"] = args.backend;
  if (!args.spec.regex.empty()) echo["regex"] = args.spec.regex;
  if (!args.spec.grammar_path.empty()) echo["grammar"] = args.spec.grammar_path;
  if (!args.spec.schema_path.empty()) echo["json_schema"] = args.spec.schema_path;
  echo["vocab"] = args.vocab_path;
  echo["source"] = args.source;
  echo["max_tokens"] = args.config.max_tokens;
  echo["temperature"] = args.config.temperature;
  echo["seed"] = args.config.seed;
  echo["greedy"] = args.config.greedy;
  return echo;
}

int run_decode(const DecodeArgs& args) {
  auto vocab = std::make_shared<gdec::Vocabulary>(gdec::load_vocabulary(args.vocab_path));
  gdec::ConstraintPtr constraint = build_constraint(args.backend, args.spec, vocab);
  auto source = build_source(args.source, vocab->size(), vocab->eos_id());
  gdec::DecodeConfig cfg = args.config;
  cfg.backend = args.backend;

  ordered_json out;
  try {
    gdec::DecodeOutput result = gdec::decode(*source, *constraint, cfg);
    out["text"] = gdec::is_valid_utf8(result.text)
                      ? ordered_json(result.text)
                      : ordered_json{{"b64", gdec::base64_encode(result.text)}};
    out["token_ids"] = result.token_ids;
    out["finish_reason"] = gdec::finish_reason_name(result.finish);
    out["steps"] = result.steps;
    out["mask_popcounts"] = result.mask_popcounts;
    out["constraint_satisfied"] = result.constraint_satisfied;
    out["config"] = decode_config_echo(args);
    std::cout << out.dump(2) << "\n";
    return 0;
  } catch (const gdec::DeadEndError& e) {
    out["finish_reason"] = "dead_end";
    out["token_ids"] = e.prefix_tokens;
    out["text"] = gdec::is_valid_utf8(e.prefix_text)
                      ? ordered_json(e.prefix_text)
                      : ordered_json{{"b64", gdec::base64_encode(e.prefix_text)}};
    out["error"] = e.what();
    out["config"] = decode_config_echo(args);
    std::cout << out.dump(2) << "\n";
    throw;
  }
}

// ---------------------------------------------------------------------------
// eval / gen-dataset / report
// ---------------------------------------------------------------------------

struct EvalArgs {
  gdec::EvalRunConfig run;
  std::string out_dir;
  std::string system_prompt_file;
};

int run_eval_cmd(EvalArgs& args) {
  if (!args.system_prompt_file.empty()) {
    args.run.templates.system_prompt = read_file(args.system_prompt_file);
  }
  gdec::EvalRunResult result = gdec::run_eval(args.run);
  std::filesystem::create_directories(args.out_dir);
  gdec::write_eval_outputs(args.out_dir, args.run, result);

  ordered_json brief;
  brief["out"] = args.out_dir;
  brief["scored_samples"] = result.report.scored_samples;
  brief["failed_samples"] = result.report.failed_samples;
  brief["success_rate"] = result.report.success_rate;
  brief["hallucination_rate"] = result.report.hallucination_rate;
  brief["fp_rate_reference_level"] = result.report.fp_rate_reference_level;
  std::cout << brief.dump(2) << "\n";
  return 0;
}

struct GenArgs {
  gdec::DatasetGenConfig config;
  std::string out_path;
};

int run_gen_dataset(const GenArgs& args) {
  auto samples = gdec::generate_dataset(args.config);
  gdec::write_dataset(samples, args.out_path);
  ordered_json config;
  config["command"] = "gen-dataset";
  config["samples"] = args.config.samples;
  config["refs_per_sample"] = args.config.refs_per_sample;
  config["seed"] = args.config.seed;
  config["id_pool"] = args.config.id_pool;
  config["out"] = args.out_path;
  write_file(args.out_path + ".config.json", config.dump(2) + "\n");
  std::cout << config.dump(2) << "\n";
  return 0;
}

struct ReportArgs {
  std::string in_dir;
  std::string out_path;
};

int run_report(const ReportArgs& args) {
  // Collect report.json files from run directories under --in.
  struct Run {
    std::string target;
    std::string backend;
    int turns;
    double fp_sample, fp_reference, success;
  };
  std::vector<Run> runs;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(args.in_dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "report.json") continue;
    nlohmann::json doc = nlohmann::json::parse(read_file(entry.path().string()));
    Run run;
    run.target = doc["config"].value("target", "?");
    run.backend = doc["config"].value("backend", "?");
    run.turns = doc.value("turns", 0);
    run.fp_sample = doc.value("fp_rate_sample_level", 0.0);
    run.fp_reference = doc.value("fp_rate_reference_level", 0.0);
    run.success = doc.value("success_rate", 0.0);
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw gdec::IoError("no report.json found under " + args.in_dir);

  const std::vector<std::string> backends = {"fsm", "pda", "enforcer", "none"};
  std::set<std::string> targets;
  std::set<int> turn_levels;
  for (const auto& r : runs) {
    targets.insert(r.target);
    turn_levels.insert(r.turns);
  }

  auto cell = [&](const std::string& target, int turns, const std::string& backend,
                  double Run::*field) -> std::string {
    for (const auto& r : runs) {
      if (r.target == target && r.turns == turns && r.backend == backend) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", r.*field * 100.0);
        return buf;
      }
    }
    return "-";
  };

  std::ostringstream table;
  ordered_json json_out;
  json_out["runs"] = ordered_json::array();
  for (const auto& r : runs) {
    ordered_json row;
    row["target"] = r.target;
    row["backend"] = r.backend;
    row["turns"] = r.turns;
    row["success_rate"] = r.success;
    row["fp_rate_sample_level"] = r.fp_sample;
    row["fp_rate_reference_level"] = r.fp_reference;
    json_out["runs"].push_back(std::move(row));
  }

  for (const char* metric : {"sample-level", "reference-level"}) {
    double Run::*field = std::string(metric) == "sample-level" ? &Run::fp_sample
                                                               : &Run::fp_reference;
    table << "False positive rates (" << metric << ")\n";
    table << "| target | turns | fsm | pda | enforcer | none |\n";
    table << "|--------|-------|-----|-----|----------|------|\n";
    for (const auto& target : targets) {
      for (int turns : turn_levels) {
        table << "| " << target << " | " << turns << "-turn |";
        for (const auto& backend : backends) {
          table << " " << cell(target, turns, backend, field) << " |";
        }
        table << "\n";
      }
    }
    table << "\n";
  }
  std::cout << table.str();
  if (!args.out_path.empty()) {
    json_out["table"] = table.str();
    write_file(args.out_path, json_out.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided-decoding toolkit: constraint compilation, constrained "
               "decoding, and multi-turn RAG citation evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  CommonOptions common;
  app.add_flag("--json-errors", common.json_errors, "Machine-readable errors on stderr");
  app.add_option("--jobs", common.jobs, "Worker threads (default: logical cores)");

  CompileArgs compile_args;
  auto* compile = app.add_subcommand("compile", "Compile a constraint and report/serialize it");
  compile->add_option("--regex", compile_args.spec.regex, "Regex pattern");
  compile->add_option("--grammar", compile_args.spec.grammar_path, "Grammar file");
  compile->add_option("--json-schema", compile_args.spec.schema_path, "JSON-schema file");
  compile->add_option("--vocab", compile_args.vocab_path, "Vocabulary file")->required();
  compile->add_option("--out", compile_args.out_path, "Output artifact path");

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "Run one constrained decode");
  decode->add_option("--backend", decode_args.backend, "fsm|pda|enforcer|none");
  decode->add_option("--regex", decode_args.spec.regex, "Regex constraint");
  decode->add_option("--grammar", decode_args.spec.grammar_path, "Grammar file");
  decode->add_option("--json-schema", decode_args.spec.schema_path, "JSON-schema file");
  decode->add_option("--vocab", decode_args.vocab_path, "Vocabulary file")->required();
  decode->add_option("--source", decode_args.source,
                     "mock:random:<seed>|mock:adversarial:<seed>|mock:scripted:<ids>|remote:<url>");
  decode->add_option("--max-tokens", decode_args.config.max_tokens, "Decode length cap");
  decode->add_option("--temperature", decode_args.config.temperature, "Sampling temperature");
  decode->add_option("--seed", decode_args.config.seed, "Sampling seed");
  decode->add_flag("--greedy", decode_args.config.greedy, "Argmax decoding");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Multi-turn RAG citation evaluation");
  eval->add_option("--dataset", eval_args.run.dataset_path, "JSONL dataset")->required();
  eval->add_option("--turns", eval_args.run.turns, "Exemplar turns: 0|1|2");
  eval->add_option("--target", eval_args.run.target, "mock:<spec>|remote:<url>");
  eval->add_option("--backend", eval_args.run.backend, "fsm|pda|enforcer|none");
  eval->add_option("--seed", eval_args.run.seed, "Run seed (echoed for reproducibility)");
  eval->add_option("--out", eval_args.out_dir, "Output directory")->required();
  eval->add_option("--id-pattern", eval_args.run.id_pattern, "Id-capture regex override");
  eval->add_option("--model", eval_args.run.model, "Model name for remote targets");
  eval->add_option("--temperature", eval_args.run.temperature, "Remote sampling temperature");
  eval->add_option("--max-tokens", eval_args.run.max_tokens, "Remote completion cap");
  eval->add_option("--json-schema", eval_args.run.response_schema_json,
                   "Inline schema JSON for remote response_format");
  eval->add_option("--timeout-ms", eval_args.run.timeout_ms, "Remote request timeout");
  eval->add_option("--api-key-env", eval_args.run.api_key_env, "Env var holding the API key");
  eval->add_option("--system-prompt-file", eval_args.system_prompt_file,
                   "Override the built-in system prompt");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-dataset", "Generate a synthetic citation dataset");
  gen->add_option("--samples", gen_args.config.samples, "Sample count")->required();
  gen->add_option("--refs-per-sample", gen_args.config.refs_per_sample, "Contexts per sample");
  gen->add_option("--seed", gen_args.config.seed, "Generator seed");
  gen->add_option("--id-pool", gen_args.config.id_pool, "Distinct doc ids (0 = 2x samples)");
  gen->add_option("--out", gen_args.out_path, "Output JSONL path")->required();

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Pivot eval runs into a comparison table");
  report->add_option("--in", report_args.in_dir, "Directory holding run outputs")->required();
  report->add_option("--out", report_args.out_path, "Write the table as JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*compile) return run_compile(compile_args);
    if (*decode) return run_decode(decode_args);
    if (*eval) {
      eval_args.run.jobs = common.jobs;
      return run_eval_cmd(eval_args);
    }
    if (*gen) return run_gen_dataset(gen_args);
    if (*report) return run_report(report_args);
  } catch (const Error& e) {
    if (common.json_errors) {
      nlohmann::json err;
      err["error"] = {{"code", gdec::error_code_name(e.code())}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error: " << gdec::error_code_name(e.code()) << ": " << e.what() << "\n";
    }
    return 2;
  } catch (const std::exception& e) {
    if (common.json_errors) {
      nlohmann::json err;
      err["error"] = {{"code", "Internal"}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
  }
  return 1;
}
