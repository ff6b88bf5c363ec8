#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gdec/eval.h"
#include "support/stub_server.h"

using namespace gdec;

namespace {

EvalSample make_sample(const std::string& id, std::vector<std::string> truth,
                       std::vector<std::string> extra_ctx = {}) {
  EvalSample s;
  s.id = id;
  s.query = "what about " + id + "?";
  for (const auto& t : truth) s.contexts.push_back({t, "passage for " + t});
  for (const auto& e : extra_ctx) s.contexts.push_back({e, "passage for " + e});
  s.truth_ids = std::move(truth);
  s.reference_response = "answer for " + id;
  return s;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("gdec_eval_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path.string() : (path / leaf).string();
  }
};

}  // namespace

TEST_CASE("eval_sample: the four canonical cases") {
  // truth {A,B}, resp [A]  -> success, no hallucination
  EvalResult r1 = eval_sample({"A", "B"}, {"A"});
  CHECK(r1.success);
  CHECK_FALSE(r1.hallucination);
  CHECK(r1.corr == std::vector<std::string>{"A"});
  CHECK(r1.fp.empty());

  // truth {A,B}, resp [A,C] -> one false positive kills success
  EvalResult r2 = eval_sample({"A", "B"}, {"A", "C"});
  CHECK_FALSE(r2.success);
  CHECK(r2.hallucination);
  CHECK(r2.corr == std::vector<std::string>{"A"});
  CHECK(r2.fp == std::vector<std::string>{"C"});

  // truth {A}, resp [] -> neither success nor hallucination
  EvalResult r3 = eval_sample({"A"}, {});
  CHECK_FALSE(r3.success);
  CHECK_FALSE(r3.hallucination);

  // truth {A}, resp [B] -> hallucination only
  EvalResult r4 = eval_sample({"A"}, {"B"});
  CHECK_FALSE(r4.success);
  CHECK(r4.hallucination);
}

TEST_CASE("eval_sample invariants: corr/fp partition resp_ids; success excludes hallucination") {
  Rng rng(1);
  for (int iter = 0; iter < 200; ++iter) {
    std::set<std::string> truth;
    size_t nt = 1 + rng.next_below(4);
    for (size_t i = 0; i < nt; ++i) truth.insert("t" + std::to_string(rng.next_below(6)));
    std::vector<std::string> resp;
    std::set<std::string> seen;
    size_t nr = rng.next_below(5);
    for (size_t i = 0; i < nr; ++i) {
      std::string id = (rng.next_below(2) ? "t" : "x") + std::to_string(rng.next_below(6));
      if (seen.insert(id).second) resp.push_back(id);
    }
    EvalResult r = eval_sample(truth, resp);
    CHECK(r.corr.size() + r.fp.size() == resp.size());
    for (const auto& c : r.corr) CHECK(truth.count(c) == 1);
    for (const auto& f : r.fp) CHECK(truth.count(f) == 0);
    CHECK_FALSE((r.success && r.hallucination));
    CHECK(r.success == (!r.corr.empty() && r.fp.empty()));
    CHECK(r.hallucination == !r.fp.empty());
  }
}

TEST_CASE("extract_ids: paper-style reference, both tag renderings, dedup") {
  const std::string pattern = default_id_pattern();
  CHECK(extract_ids(
            "resp: ok doc ids: (doc_id)344.0321.DOR.2021_1630505603_page_623(/doc_id)",
            pattern) ==
        std::vector<std::string>{"344.0321.DOR.2021_1630505603_page_623"});
  CHECK(extract_ids("<doc_id>a.1</doc_id> and (doc_id)b.2(/doc_id)", pattern) ==
        std::vector<std::string>{"a.1", "b.2"});
  CHECK(extract_ids("(doc_id)dup(/doc_id) text (doc_id)dup(/doc_id)", pattern) ==
        std::vector<std::string>{"dup"});
  CHECK(extract_ids("no tags at all", pattern).empty());
  CHECK(extract_ids("", pattern).empty());
}

TEST_CASE("build_history: message counts and template rendering") {
  PromptTemplates templates = default_templates();
  EvalSample sample = make_sample("s0", {"A"});
  std::vector<EvalSample> exemplars = {make_sample("e0", {"E0a", "E0b"}),
                                       make_sample("e1", {"E1"})};

  auto h0 = build_history(sample, exemplars, 0, templates);
  REQUIRE(h0.size() == 2);  // system + eval user
  CHECK(h0[0].role == "system");
  CHECK(h0[1].role == "user");
  CHECK(h0[1].content.find("rag ctx:") == 0);
  CHECK(h0[1].content.find("query: what about s0?") != std::string::npos);

  auto h2 = build_history(sample, exemplars, 2, templates);
  REQUIRE(h2.size() == 6);  // 1 + 2n + 1 with n=2
  const char* roles[] = {"system", "user", "assistant", "user", "assistant", "user"};
  for (size_t i = 0; i < 6; ++i) CHECK(h2[i].role == roles[i]);

  // exemplar assistant turns wrap every truth id in the tag format
  CHECK(h2[2].content.find("(doc_id)E0a(/doc_id)") != std::string::npos);
  CHECK(h2[2].content.find("(doc_id)E0b(/doc_id)") != std::string::npos);
  CHECK(h2[4].content.find("(doc_id)E1(/doc_id)") != std::string::npos);

  CHECK_THROWS_AS(build_history(sample, exemplars, 3, templates), NotEnoughExemplarsError);
}

TEST_CASE("round-trip: extracting from a rendered assistant turn returns truth_ids") {
  PromptTemplates templates = default_templates();
  Rng rng(7);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::string> truth;
    size_t n = 1 + rng.next_below(5);
    for (size_t i = 0; i < n; ++i) {
      truth.push_back("doc." + std::to_string(rng.next_below(1000)) + "_page_" +
                      std::to_string(i));
    }
    // distinct ids only (the comparison is multiplicity-insensitive)
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
    EvalSample ex = make_sample("r" + std::to_string(iter), truth);
    auto history = build_history(make_sample("q", {"Q"}), {ex}, 1, templates);
    auto ids = extract_ids(history[2].content, default_id_pattern());
    CHECK(ids == ex.truth_ids);
  }
}

TEST_CASE("dataset round-trip and validation") {
  TempDir dir("dataset");
  std::vector<EvalSample> samples = {make_sample("a", {"A1", "A2"}, {"X"}),
                                     make_sample("b", {"B"})};
  write_dataset(samples, dir.str("data.jsonl"));
  auto loaded = load_dataset(dir.str("data.jsonl"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "a");
  CHECK(loaded[0].truth_ids == std::vector<std::string>{"A1", "A2"});
  CHECK(loaded[0].contexts.size() == 3);
  CHECK(loaded[1].reference_response == "answer for b");

  std::ofstream(dir.str("bad.jsonl")) << "{\"id\": \"x\"}\n";
  CHECK_THROWS_AS(load_dataset(dir.str("bad.jsonl")), DatasetError);

  // truth id missing from contexts
  std::ofstream(dir.str("bad2.jsonl"))
      << R"({"id":"x","query":"q","contexts":[{"doc_id":"c","text":"t"}],"truth_ids":["zz"],"reference_response":""})"
      << "\n";
  CHECK_THROWS_AS(load_dataset(dir.str("bad2.jsonl")), DatasetError);
}

TEST_CASE("generate_dataset: shape, validity, reference-count realism") {
  DatasetGenConfig cfg;
  cfg.samples = 200;
  cfg.refs_per_sample = 4;
  cfg.seed = 11;
  auto samples = generate_dataset(cfg);
  REQUIRE(samples.size() == 200);
  size_t total_refs = 0;
  std::set<std::string> unique;
  for (const auto& s : samples) {
    s.validate();
    CHECK(s.contexts.size() == 4);
    total_refs += s.truth_ids.size();
    unique.insert(s.truth_ids.begin(), s.truth_ids.end());
  }
  CHECK(total_refs > unique.size());  // ids repeat across samples, like real retrieval
  // deterministic
  auto again = generate_dataset(cfg);
  REQUIRE(again.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(again[i].query == samples[i].query);
    CHECK(again[i].truth_ids == samples[i].truth_ids);
  }
}

TEST_CASE("run_eval: planted responder gives analytically exact metrics") {
  TempDir dir("planted");
  DatasetGenConfig gen;
  gen.samples = 120;
  gen.refs_per_sample = 3;
  gen.seed = 5;
  auto samples = generate_dataset(gen);
  write_dataset(samples, dir.str("data.jsonl"));

  struct Case {
    int turns;
    std::string spec;
    int omit_every, wrong_every, wrong_count;
  };
  const std::vector<Case> cases = {
      {0, "mock:planted", 0, 0, 1},
      {0, "mock:planted:wrong_every=3,wrong_count=2", 0, 3, 2},
      {1, "mock:planted:omit_every=4", 4, 0, 1},
      {2, "mock:planted:omit_every=5,wrong_every=2,wrong_count=1", 5, 2, 1},
  };
  for (const auto& c : cases) {
    EvalRunConfig cfg;
    cfg.dataset_path = dir.str("data.jsonl");
    cfg.turns = c.turns;
    cfg.target = c.spec;
    cfg.jobs = 2;
    EvalRunResult run = run_eval(cfg);

    // Independent oracle: plain integer arithmetic over the planted
    // parameters and the dataset's truth counts.
    size_t scored = samples.size() - static_cast<size_t>(c.turns);
    size_t expect_success = 0, expect_halluc = 0, expect_resp = 0, expect_fp = 0;
    for (size_t i = 0; i < scored; ++i) {
      bool omitted = c.omit_every > 0 && i % static_cast<size_t>(c.omit_every) == 0;
      bool wrong = c.wrong_every > 0 && i % static_cast<size_t>(c.wrong_every) == 0;
      size_t truth_count = samples[static_cast<size_t>(c.turns) + i].truth_ids.size();
      size_t fp_count = wrong ? static_cast<size_t>(c.wrong_count) : 0;
      expect_resp += (omitted ? 0 : truth_count) + fp_count;
      expect_fp += fp_count;
      if (!omitted && !wrong) ++expect_success;
      if (wrong) ++expect_halluc;
    }
    CAPTURE(c.spec);
    CHECK(run.report.scored_samples == scored);
    CHECK(run.report.success_count == expect_success);
    CHECK(run.report.hallucination_count == expect_halluc);
    CHECK(run.report.total_resp_ids == expect_resp);
    CHECK(run.report.total_fp == expect_fp);
    CHECK(run.report.success_rate ==
          doctest::Approx(static_cast<double>(expect_success) / scored).epsilon(1e-12));
    CHECK(run.report.fp_rate_reference_level ==
          doctest::Approx(expect_resp ? static_cast<double>(expect_fp) / expect_resp : 0.0)
              .epsilon(1e-12));
  }
}

TEST_CASE("run_eval: deterministic outputs, self-consistent aggregates") {
  TempDir dir("determinism");
  DatasetGenConfig gen;
  gen.samples = 40;
  gen.seed = 3;
  write_dataset(generate_dataset(gen), dir.str("data.jsonl"));

  EvalRunConfig cfg;
  cfg.dataset_path = dir.str("data.jsonl");
  cfg.turns = 1;
  cfg.target = "mock:planted:wrong_every=4";
  cfg.jobs = 4;

  std::filesystem::create_directories(dir.str("run_a"));
  std::filesystem::create_directories(dir.str("run_b"));
  write_eval_outputs(dir.str("run_a"), cfg, run_eval(cfg));
  write_eval_outputs(dir.str("run_b"), cfg, run_eval(cfg));

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(dir.str("run_a/report.json")) == slurp(dir.str("run_b/report.json")));
  CHECK(slurp(dir.str("run_a/results.jsonl")) == slurp(dir.str("run_b/results.jsonl")));

  // Aggregates recomputed from the per-sample results file must equal the report.
  nlohmann::json report = nlohmann::json::parse(slurp(dir.str("run_a/report.json")));
  size_t successes = 0, hallucs = 0, resp = 0, fp = 0, rows = 0;
  std::ifstream results(dir.str("run_a/results.jsonl"));
  std::string line;
  while (std::getline(results, line)) {
    if (line.empty()) continue;
    auto r = nlohmann::json::parse(line);
    ++rows;
    if (r["success"].get<bool>()) ++successes;
    if (r["hallucination"].get<bool>()) ++hallucs;
    resp += r["resp_ids"].size();
    fp += r["fp"].size();
  }
  CHECK(rows == report["scored_samples"].get<size_t>());
  CHECK(successes == report["success_count"].get<size_t>());
  CHECK(hallucs == report["hallucination_count"].get<size_t>());
  CHECK(resp == report["total_resp_ids"].get<size_t>());
  CHECK(fp == report["total_fp"].get<size_t>());
}

TEST_CASE("run_eval: remote target against a stub server") {
  gdec::testing::StubServer stub;
  // The stub extracts the first tagged id from the prompt and cites it.
  stub.server().Post("/v1/chat/completions", [](const httplib::Request& req,
                                                httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    std::string prompt = body["messages"].back()["content"].get<std::string>();
    std::string cite;
    auto open = prompt.find("(doc_id)");
    if (open != std::string::npos) {
      auto close = prompt.find("(/doc_id)", open);
      cite = prompt.substr(open, close + 9 - open);
    }
    res.set_content(gdec::testing::chat_completion_body("resp: stubbed doc ids: " + cite),
                    "application/json");
  });
  stub.start();

  TempDir dir("remote");
  DatasetGenConfig gen;
  gen.samples = 12;
  gen.seed = 9;
  auto samples = generate_dataset(gen);
  write_dataset(samples, dir.str("data.jsonl"));

  EvalRunConfig cfg;
  cfg.dataset_path = dir.str("data.jsonl");
  cfg.turns = 1;
  cfg.target = "remote:" + stub.endpoint();
  cfg.backend = "pda";
  cfg.jobs = 3;
  EvalRunResult run = run_eval(cfg);
  CHECK(run.report.scored_samples == 11);
  CHECK(run.report.failed_samples == 0);
  // The first context id is always a truth id by construction of the
  // generator, so every stubbed answer is a success.
  CHECK(run.report.success_count == 11);
  CHECK(run.mean_remote_latency_ms > 0.0);
}

TEST_CASE("run_eval: unreachable remote records failures instead of crashing") {
  TempDir dir("unreachable");
  DatasetGenConfig gen;
  gen.samples = 4;
  gen.seed = 2;
  write_dataset(generate_dataset(gen), dir.str("data.jsonl"));

  EvalRunConfig cfg;
  cfg.dataset_path = dir.str("data.jsonl");
  cfg.turns = 0;
  cfg.target = "remote:http://127.0.0.1:1";  // nothing listens there
  cfg.timeout_ms = 500;
  EvalRunResult run = run_eval(cfg);
  CHECK(run.report.scored_samples == 4);
  CHECK(run.report.failed_samples == 4);
  CHECK(run.report.success_count == 0);
  for (const auto& r : run.results) CHECK_FALSE(r.error.empty());
}

TEST_CASE("run_eval: argument validation") {
  TempDir dir("args");
  DatasetGenConfig gen;
  gen.samples = 2;
  write_dataset(generate_dataset(gen), dir.str("data.jsonl"));

  EvalRunConfig cfg;
  cfg.dataset_path = dir.str("data.jsonl");
  cfg.turns = 3;
  CHECK_THROWS_AS(run_eval(cfg), ValidationError);
  cfg.turns = 2;  // 2 exemplars + 0 scored
  CHECK_THROWS_AS(run_eval(cfg), NotEnoughExemplarsError);
  cfg.turns = 0;
  cfg.target = "direct:foo";
  CHECK_THROWS_AS(run_eval(cfg), ValidationError);
  cfg.target = "mock:planted:bogus=1";
  CHECK_THROWS_AS(run_eval(cfg), ValidationError);
  cfg.target = "mock:planted";
  cfg.backend = "gpu";
  CHECK_THROWS_AS(run_eval(cfg), ValidationError);
}

TEST_CASE("planted responder spec parsing") {
  auto r = PlantedResponder::parse("planted:omit_every=3,wrong_every=2,wrong_count=5");
  CHECK(r.omit_every == 3);
  CHECK(r.wrong_every == 2);
  CHECK(r.wrong_count == 5);
  CHECK_THROWS_AS(PlantedResponder::parse("scripted"), ValidationError);
  CHECK_THROWS_AS(PlantedResponder::parse("planted:omit_every=-1"), ValidationError);
}
