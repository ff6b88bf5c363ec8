#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gdec/regex_fsm.h"
#include "gdec/vocab.h"
#include "support/stub_server.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("gdec_cli_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path.string() : (path / leaf).string();
  }
};

CliResult run_cli(const std::string& args, const TempDir& dir) {
  fs::path out = dir.path / "stdout.txt";
  fs::path err = dir.path / "stderr.txt";
  std::string cmd = std::string(GDEC_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                    err.string();
  int rc = std::system(cmd.c_str());
  return {WEXITSTATUS(rc), slurp(out), slurp(err)};
}

void write_vocab_file(const std::string& path) {
  std::ofstream(path) << R"({"eos_id": 5, "tokens": ["0","1","2","9","12","</s>"]})";
}

}  // namespace

TEST_CASE("decode smoke: fsm backend, mock random source, exit 0") {
  TempDir dir("decode");
  write_vocab_file(dir.str("v.json"));
  auto r = run_cli("decode --backend fsm --regex \"[0-9]+\" --vocab " + dir.str("v.json") +
                       " --source mock:random:7 --max-tokens 16",
                   dir);
  REQUIRE(r.exit_code == 0);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["finish_reason"] == "eos");
  CHECK(doc["constraint_satisfied"] == true);
  CHECK(doc["config"]["source"] == "mock:random:7");
  CHECK(doc["token_ids"].size() == doc["steps"].get<size_t>());
}

TEST_CASE("decode is deterministic for a fixed seed") {
  TempDir dir("determ");
  write_vocab_file(dir.str("v.json"));
  std::string args = "decode --backend pda --json-schema " + std::string(GDEC_SOURCE_DIR) +
                     "/schemas/doc_refs.schema.json --vocab " + dir.str("v.json") +
                     " --source mock:adversarial:3 --seed 11 --max-tokens 5";
  auto a = run_cli(args, dir);
  auto b = run_cli(args, dir);
  CHECK(a.out == b.out);
}

TEST_CASE("unknown flag: usage text, exit 1") {
  TempDir dir("usage");
  auto r = run_cli("decode --no-such-flag", dir);
  CHECK(r.exit_code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("missing subcommand: exit 1") {
  TempDir dir("nosub");
  CHECK(run_cli("", dir).exit_code == 1);
}

TEST_CASE("runtime error: exit 2 and machine-readable error with --json-errors") {
  TempDir dir("jsonerr");
  write_vocab_file(dir.str("v.json"));
  auto r = run_cli("--json-errors decode --backend fsm --regex \"(?=x)a\" --vocab " +
                       dir.str("v.json"),
                   dir);
  CHECK(r.exit_code == 2);
  auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"]["code"] == "UnsupportedFeature");
}

TEST_CASE("dead end: surfaced with the offending prefix, exit 2") {
  TempDir dir("deadend");
  std::ofstream(dir.str("v.json")) << R"({"eos_id": 1, "tokens": ["ab","</s>"]})";
  auto r = run_cli("decode --backend fsm --regex \"abc\" --vocab " + dir.str("v.json") +
                       " --source mock:random:1",
                   dir);
  CHECK(r.exit_code == 2);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["finish_reason"] == "dead_end");
  CHECK(doc["text"] == "ab");
}

TEST_CASE("compile --regex --out: artifact round-trips through the library") {
  TempDir dir("compile");
  write_vocab_file(dir.str("v.json"));
  auto r = run_cli("compile --regex \"[0-9]{2}\" --vocab " + dir.str("v.json") + " --out " +
                       dir.str("index.json"),
                   dir);
  REQUIRE(r.exit_code == 0);
  auto vocab = std::make_shared<gdec::Vocabulary>(gdec::load_vocabulary(dir.str("v.json")));
  auto reloaded = gdec::FsmConstraint::load(slurp(dir.str("index.json")), vocab);
  CHECK(reloaded->pattern() == "[0-9]{2}");
  CHECK(reloaded->save() == slurp(dir.str("index.json")));
  // resolved config echo lands next to the artifact
  auto cfg = nlohmann::json::parse(slurp(dir.str("index.json.config.json")));
  CHECK(cfg["command"] == "compile");
}

TEST_CASE("compile --grammar reports engine statistics") {
  TempDir dir("compileg");
  write_vocab_file(dir.str("v.json"));
  auto r = run_cli("compile --grammar " + std::string(GDEC_SOURCE_DIR) +
                       "/grammars/json.grammar --vocab " + dir.str("v.json"),
                   dir);
  REQUIRE(r.exit_code == 0);
  auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["rules_after_inlining"].get<int>() >= 1);
  CHECK(doc["mask_table_positions"].get<int>() > 0);
}

TEST_CASE("gen-dataset: deterministic bytes for a fixed seed") {
  TempDir dir("gen");
  auto a = run_cli("gen-dataset --samples 10 --refs-per-sample 2 --seed 42 --out " +
                       dir.str("a.jsonl"),
                   dir);
  auto b = run_cli("gen-dataset --samples 10 --refs-per-sample 2 --seed 42 --out " +
                       dir.str("b.jsonl"),
                   dir);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(dir.str("a.jsonl")) == slurp(dir.str("b.jsonl")));
  CHECK(nlohmann::json::parse(slurp(dir.str("a.jsonl.config.json")))["seed"] == 42);
}

TEST_CASE("eval + report: mock runs across backends and turns pivot into a table") {
  TempDir dir("report");
  REQUIRE(run_cli("gen-dataset --samples 20 --refs-per-sample 2 --seed 7 --out " +
                      dir.str("ds.jsonl"),
                  dir)
              .exit_code == 0);
  for (const std::string backend : {"fsm", "pda", "enforcer"}) {
    for (int turns : {0, 1, 2}) {
      fs::create_directories(dir.path / ("run_" + backend + "_" + std::to_string(turns)));
      auto r = run_cli("eval --dataset " + dir.str("ds.jsonl") + " --turns " +
                           std::to_string(turns) +
                           " --target mock:planted:wrong_every=4 --backend " + backend +
                           " --seed 1 --out " +
                           dir.str("run_" + backend + "_" + std::to_string(turns)),
                       dir);
      REQUIRE(r.exit_code == 0);
    }
  }
  auto rep = run_cli("report --in " + dir.str() + " --out " + dir.str("table.json"), dir);
  REQUIRE(rep.exit_code == 0);
  CHECK(rep.out.find("False positive rates (sample-level)") != std::string::npos);
  CHECK(rep.out.find("False positive rates (reference-level)") != std::string::npos);
  CHECK(rep.out.find("| fsm | pda | enforcer | none |") != std::string::npos);
  CHECK(rep.out.find("0-turn") != std::string::npos);
  CHECK(rep.out.find("2-turn") != std::string::npos);
  auto table = nlohmann::json::parse(slurp(dir.str("table.json")));
  CHECK(table["runs"].size() == 9);
}

TEST_CASE("eval against an unreachable remote records failures, exits 0") {
  TempDir dir("unreach");
  REQUIRE(run_cli("gen-dataset --samples 4 --refs-per-sample 2 --seed 3 --out " +
                      dir.str("ds.jsonl"),
                  dir)
              .exit_code == 0);
  auto r = run_cli("eval --dataset " + dir.str("ds.jsonl") +
                       " --turns 0 --target remote:http://127.0.0.1:1 --timeout-ms 300 --out " +
                       dir.str("out"),
                   dir);
  CHECK(r.exit_code == 0);
  auto report = nlohmann::json::parse(slurp(dir.str("out/report.json")));
  CHECK(report["failed_samples"] == 4);
  CHECK(report["scored_samples"] == 4);
}

TEST_CASE("eval against a stub server succeeds end to end") {
  gdec::testing::StubServer stub;
  stub.server().Post("/v1/chat/completions",
                     [](const httplib::Request& req, httplib::Response& res) {
                       auto body = nlohmann::json::parse(req.body);
                       std::string prompt = body["messages"].back()["content"].get<std::string>();
                       std::string cite;
                       auto open = prompt.find("(doc_id)");
                       if (open != std::string::npos) {
                         auto close = prompt.find("(/doc_id)", open);
                         cite = prompt.substr(open, close + 9 - open);
                       }
                       res.set_content(
                           gdec::testing::chat_completion_body("resp: via stub doc ids: " + cite),
                           "application/json");
                     });
  stub.start();

  TempDir dir("stub");
  REQUIRE(run_cli("gen-dataset --samples 6 --refs-per-sample 2 --seed 5 --out " +
                      dir.str("ds.jsonl"),
                  dir)
              .exit_code == 0);
  auto r = run_cli("eval --dataset " + dir.str("ds.jsonl") + " --turns 2 --target remote:" +
                       stub.endpoint() + " --backend enforcer --out " + dir.str("out"),
                   dir);
  REQUIRE(r.exit_code == 0);
  auto report = nlohmann::json::parse(slurp(dir.str("out/report.json")));
  CHECK(report["scored_samples"] == 4);
  CHECK(report["failed_samples"] == 0);
  CHECK(report["success_count"] == 4);
}

TEST_CASE("config file supplies defaults, flags override") {
  TempDir dir("config");
  std::ofstream(dir.str("gdec.ini")) << "[gen-dataset]\nsamples=5\nrefs-per-sample=2\nseed=9\n";
  auto r = run_cli("--config " + dir.str("gdec.ini") + " gen-dataset --out " +
                       dir.str("ds.jsonl") + " --seed 10",
                   dir);
  REQUIRE(r.exit_code == 0);
  auto cfg = nlohmann::json::parse(slurp(dir.str("ds.jsonl.config.json")));
  CHECK(cfg["samples"] == 5);   // from the config file
  CHECK(cfg["seed"] == 10);     // flag wins
}
