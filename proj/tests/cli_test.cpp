// Copyright 2026 The hopqa Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "hopqa/hopqa.hpp"
#include "support/run.hpp"
#include "support/synth.hpp"

namespace {

using namespace hopqa;
using synth::run;
using synth::shell_quote;

const std::string kCli = HOPQA_CLI;
const std::string kCorpus = HOPQA_SOURCE_DIR "/data/fixtures/mini_corpus.txt";
const std::string kDev = HOPQA_SOURCE_DIR "/data/fixtures/mini_dev.jsonl";

std::string q(const std::filesystem::path& p) { return shell_quote(p.string()); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(synth::temp_dir("cli"));
    const auto r = run(kCli, "index --corpus " + shell_quote(kCorpus) + " --index-dir " + q(index()));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    std::filesystem::remove_all(*dir_);
    delete dir_;
  }
  static std::filesystem::path index() { return *dir_ / "idx"; }
  static std::string idx_flag() { return " --index-dir " + q(index()); }
  static std::filesystem::path* dir_;
};
std::filesystem::path* Cli::dir_ = nullptr;

TEST_F(Cli, IndexPrintsStats) {
  synth::write_file(*dir_ / "three.txt", "plants need water\nthe sun is a star\nmetal conducts heat\n");
  const auto r = run(kCli, "index --corpus " + q(*dir_ / "three.txt") + " --index-dir " + q(*dir_ / "three"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("doc_count: 3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("term_count: 11"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("avg_doc_len: 3.66667"), std::string::npos) << r.out;
}

TEST_F(Cli, IndexMissingCorpusFails) {
  const auto r = run(kCli, "index --corpus " + q(*dir_ / "nope.txt") + " --index-dir " + q(*dir_ / "nope"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("nope.txt"), std::string::npos);
}

TEST_F(Cli, ReindexIsByteIdentical) {
  const auto r = run(kCli, "index --corpus " + shell_quote(kCorpus) + " --index-dir " + q(*dir_ / "again"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(index())) {
    ++files;
    EXPECT_EQ(synth::read_file(e.path()), synth::read_file(*dir_ / "again" / e.path().filename()))
        << e.path().filename();
  }
  EXPECT_GE(files, 5u);
}

TEST_F(Cli, RetrieveFreeTextListsBothFacts) {
  const auto r = run(kCli, "retrieve --text 'What is used to smooth decoupage?'" + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find(synth::kGoldFact1), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(synth::kGoldFact2), std::string::npos) << r.out;
  bool tagged = false;
  for (const auto& l : lines(r.out)) tagged = tagged || l.find("\texpanded\t") != std::string::npos;
  EXPECT_TRUE(tagged);
}

TEST_F(Cli, RetrieveMatchesLibrary) {
  const auto r = run(kCli, "retrieve --question-id case-q2 --questions " + shell_quote(kDev) + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto c = load_collection(index().string());
  const auto qs = load_questions(kDev);
  const auto& rec = qs.records.at(1);
  const auto query = make_query(rec, *rec.find_choice(*rec.answer_key), *c.extractor);
  PipelineConfig cfg;
  cfg.pipeline = Pipeline::Mssm;
  const TfidfCosineScorer scorer(c.index);
  const auto out = run_pipeline(c, query, cfg, scorer);
  std::vector<std::string> ids;
  for (const auto& l : lines(r.out)) {
    if (l.empty() || l[0] == '#') continue;
    std::istringstream row(l);
    std::string rank, hop, id;
    std::getline(row, rank, '\t');
    std::getline(row, hop, '\t');
    std::getline(row, id, '\t');
    ids.push_back(id);
  }
  ASSERT_EQ(ids.size(), std::min(out.ranked.size(), cfg.mssm.final_k));
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], std::to_string(out.ranked[i].fact.id));
}

TEST_F(Cli, RetrieveOnEmptyIndex) {
  synth::write_file(*dir_ / "empty.txt", "");
  ASSERT_EQ(run(kCli, "index --corpus " + q(*dir_ / "empty.txt") + " --index-dir " + q(*dir_ / "empty")).exit_code, 0);
  const auto r = run(kCli, "retrieve --text 'anything at all' --index-dir " + q(*dir_ / "empty"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  for (const auto& l : lines(r.out)) EXPECT_EQ(l[0], '#') << l;
}

TEST_F(Cli, RetrieveUnknownQuestionFails) {
  const auto r = run(kCli, "retrieve --question-id nope --questions " + shell_quote(kDev) + idx_flag());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
}

TEST_F(Cli, MissingIndexIsUserError) {
  EXPECT_EQ(run(kCli, "retrieve --text x --index-dir " + q(*dir_ / "missing")).exit_code, 1);
}

TEST_F(Cli, IndexDirFromEnvironment) {
  const auto r = run(kCli, "retrieve --text 'smooth decoupage'", "HOPQA_INDEX_DIR=" + q(index()));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find(synth::kGoldFact2), std::string::npos);
}

void expect_trace_schema(const nlohmann::json& j, bool composed) {
  ASSERT_TRUE(j.is_object());
  EXPECT_TRUE(j.at("question_id").is_string());
  EXPECT_TRUE(j.at("choice").is_string());
  EXPECT_TRUE(j.at("config").is_string());
  ASSERT_TRUE(j.at("stages").is_array());
  for (const auto& s : j["stages"]) {
    EXPECT_TRUE(s.at("stage").is_string());
    ASSERT_TRUE(s.at("query_terms").is_array());
    for (const auto& t : s["query_terms"]) EXPECT_TRUE(t.is_string());
    for (const auto& h : s.at("hits")) {
      EXPECT_TRUE(h.at("id").is_number_unsigned());
      EXPECT_TRUE(h.at("score").is_number());
    }
  }
  ASSERT_TRUE(j.at("composition").is_array());
  if (composed) {
    EXPECT_FALSE(j["composition"].empty());
  }
  for (const auto& c : j["composition"]) {
    EXPECT_TRUE(c.at("fact_ids").is_array());
    EXPECT_TRUE(c.at("composed").is_string());
    EXPECT_TRUE(c.at("bridge_strength").is_number_unsigned());
    for (const auto& s : c.at("bridging_spans")) {
      EXPECT_TRUE(s.at("tokens").is_array());
      EXPECT_TRUE(s.at("pos1").is_number_unsigned());
      EXPECT_TRUE(s.at("pos2").is_number_unsigned());
    }
  }
}

TEST_F(Cli, RetrieveTraceSchema) {
  const auto path = *dir_ / "trace.jsonl";
  const auto r = run(kCli, "retrieve --pipeline mssm+fsc --text 'What is used to smooth decoupage?' --trace " +
                               q(path) + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ls = lines(synth::read_file(path));
  ASSERT_EQ(ls.size(), 1u);
  const auto j = nlohmann::json::parse(ls[0]);
  expect_trace_schema(j, true);
  ASSERT_EQ(j["stages"].size(), 3u);
  EXPECT_EQ(j["stages"][0]["stage"], "first-hop");
  EXPECT_EQ(j["stages"][1]["stage"], "expanded");
}

TEST_F(Cli, EvalTraceSchema) {
  const auto path = *dir_ / "eval_trace.jsonl";
  const auto r = run(kCli, "eval --seedless --questions " + shell_quote(kDev) + " --trace " + q(path) + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ls = lines(synth::read_file(path));
  EXPECT_EQ(ls.size(), 2 * kChoicesPerQuestion);
  for (const auto& l : ls) expect_trace_schema(nlohmann::json::parse(l), true);
}

TEST_F(Cli, ComposeMatchesLibrary) {
  const auto c = load_collection(index().string());
  const auto a = synth::find_text(c, synth::kGoldFact1);
  const auto b = synth::find_text(c, synth::kGoldFact2);
  const auto r = run(kCli, "compose --id " + std::to_string(a) + " --id " + std::to_string(b) + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto cs = compose(c.fact(a), c.fact(b));
  std::string bridging = "bridging:";
  for (const auto& s : cs.bridging_spans) {
    bridging += " [" + join(s.tokens) + "]@" + std::to_string(s.pos1) + "," + std::to_string(s.pos2);
  }
  EXPECT_EQ(r.out, "composed: " + cs.text() + "\n" + bridging + "\nbridge_strength: " +
                       std::to_string(cs.bridge_strength) + "\n");
  EXPECT_EQ(lines(r.out).at(0), "composed: sandpaper is to smooth traditionally are in decoupage");
  EXPECT_EQ(lines(r.out).at(1), "bridging: [used]@2,4 [wooden objects]@5,1");
}

TEST_F(Cli, ComposeTexts) {
  const auto r = run(kCli, "compose --text 'sandpaper is used to smooth wooden objects' --text "
                           "'Traditionally, wooden objects are used in decoupage'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(lines(r.out).at(0), "composed: sandpaper is to smooth traditionally are in decoupage");
}

TEST_F(Cli, ComposeSingleInputWarns) {
  const auto r = run(kCli, "compose --text 'plants need water'");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("composed: plants need water"), std::string::npos);
  EXPECT_EQ(run(kCli, "compose").exit_code, 1);
}

TEST_F(Cli, EvalTwoConfigsWithComparison) {
  const auto r = run(kCli, "eval --seedless --pipeline mssm+fsc --pipeline first-hop-only --questions " +
                               shell_quote(kDev) + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("caveat"), std::string(kAccuracyCaveat));
  ASSERT_EQ(j.at("reports").size(), 2u);
  ASSERT_EQ(j.at("comparison").size(), 2u);
  EXPECT_EQ(j["comparison"][0]["config"], "mssm+fsc");
  EXPECT_EQ(j["comparison"][1]["config"], "first-hop-only");
  EXPECT_TRUE(j["comparison"][0].contains("recall@10"));
  EXPECT_NE(r.err.find(std::string(kAccuracyCaveat)), std::string::npos);

  // Thin adapter: same metrics as calling evaluate directly.
  const auto c = load_collection(index().string());
  const TfidfCosineScorer scorer(c.index);
  PipelineConfig cfg;
  const auto lib = evaluate(load_questions(kDev).records, cfg, {1, 5, 10, 20}, {c, scorer, false});
  EXPECT_EQ(j["reports"][0]["metrics"]["accuracy"].get<double>(), lib.accuracy);
  EXPECT_EQ(j["reports"][0]["metrics"]["recall_at_k"]["10"].get<double>(), lib.recall_at_k.at(10));
  EXPECT_EQ(j["reports"][0]["per_question"][1]["chosen"], "C");
}

TEST_F(Cli, EvalZeroQuestionsFails) {
  synth::write_file(*dir_ / "none.jsonl", "");
  const auto r = run(kCli, "eval --questions " + q(*dir_ / "none.jsonl") + idx_flag());
  EXPECT_NE(r.exit_code, 0);
}

TEST_F(Cli, EvalBadRecordExitsNonzeroButReports) {
  synth::write_file(*dir_ / "bad.jsonl", synth::read_file(kDev) + "{\"id\": \"broken\"}\n");
  const auto r = run(kCli, "eval --seedless --questions " + q(*dir_ / "bad.jsonl") + idx_flag());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("broken"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(r.out)["run"]["record_errors"], 1);
}

TEST_F(Cli, SeedlessRunsAreByteIdentical) {
  const auto a = *dir_ / "a.json";
  const auto b = *dir_ / "b.json";
  const std::string args = "eval --seedless --questions " + shell_quote(kDev) + idx_flag() + " --output ";
  ASSERT_EQ(run(kCli, args + q(a)).exit_code, 0);
  ASSERT_EQ(run(kCli, args + q(b) + " --workers 3").exit_code, 0);
  EXPECT_EQ(synth::read_file(a), synth::read_file(b));
  EXPECT_FALSE(nlohmann::json::parse(synth::read_file(a)).contains("generated_at"));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  synth::write_file(*dir_ / "run.toml", "[eval]\nk-list = [3]\nquestions = \"" + kDev + "\"\n");
  const auto r = run(kCli, "--config " + q(*dir_ / "run.toml") + " eval --seedless" + idx_flag());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out)["comparison"][0].contains("recall@3"));
  const auto o = run(kCli, "--config " + q(*dir_ / "run.toml") + " eval --seedless --k-list 7" + idx_flag());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_TRUE(nlohmann::json::parse(o.out)["comparison"][0].contains("recall@7"));
  EXPECT_FALSE(nlohmann::json::parse(o.out)["comparison"][0].contains("recall@3"));
}

TEST_F(Cli, HelpShowsDefaults) {
  const auto r = run(kCli, "eval --help");
  ASSERT_EQ(r.exit_code, 0);
  const PipelineConfig d;
  auto has = [&](const std::string& flag, const std::string& value) {
    for (const auto& l : lines(r.out)) {
      if (l.find(flag + " ") != std::string::npos) return l.find("[" + value + "]") != std::string::npos;
    }
    return false;
  };
  EXPECT_TRUE(has("--pipeline", "mssm+fsc"));
  EXPECT_TRUE(has("--k1-hits", std::to_string(d.mssm.first_hop_k)));
  EXPECT_TRUE(has("--k2-hits", std::to_string(d.mssm.expand_k)));
  EXPECT_TRUE(has("--final-k", std::to_string(d.mssm.final_k)));
  EXPECT_TRUE(has("--K", std::to_string(d.two_step_k)));
  EXPECT_TRUE(has("--L", std::to_string(d.two_step_l)));
  EXPECT_TRUE(has("--alpha", "0.5"));
  EXPECT_TRUE(has("--max-pairs", std::to_string(d.max_pairs)));
  EXPECT_TRUE(has("--k-list", "[1,5,10,20]"));
  const auto ix = run(kCli, "index --help");
  EXPECT_NE(ix.out.find("[1.2]"), std::string::npos);
  EXPECT_NE(ix.out.find("[0.75]"), std::string::npos);
  EXPECT_NE(run(kCli, "retrieve --help").out.find("[mssm]"), std::string::npos);
}

TEST_F(Cli, BadArgumentsAreUserErrors) {
  EXPECT_EQ(run(kCli, "").exit_code, 1);
  EXPECT_EQ(run(kCli, "eval --questions x --alpha 2").exit_code, 1);
  EXPECT_EQ(run(kCli, "retrieve --text x --pipeline bogus" + idx_flag()).exit_code, 1);
}

}  // namespace
