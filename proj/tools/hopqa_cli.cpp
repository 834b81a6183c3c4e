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
// hopqa: index a sentence corpus, run multi-hop retrieval, compose fact
// pairs and evaluate multiple-choice question sets.
//
// Exit codes: 0 success, 1 user error (bad input, missing file, record-level
// errors during eval), 2 internal error.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hopqa/hopqa.hpp"

namespace {

using namespace hopqa;

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct RunConfig {
  std::string corpus;
  std::string index_dir = "hopqa-index";
  std::string questions;
  std::vector<std::string> pipelines;
  std::size_t k1_hits = 20;
  std::size_t k2_hits = 20;
  std::size_t final_k = 10;
  std::size_t two_step_k = 20;
  std::size_t two_step_l = 4;
  std::size_t max_pairs = 5;
  double alpha = 0.5;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  std::string stoplist;
  std::string embeddings;
  std::string output;
  std::string trace;
  std::size_t workers = 1;
  std::vector<std::size_t> k_list = {1, 5, 10, 20};
  bool seedless = false;
  std::size_t limit = 0;

  // retrieve / compose inputs
  std::string text;
  std::string question_id;
  std::string choice;
  std::vector<DocId> ids;
  std::vector<std::string> texts;
};

/// User-facing failure: message printed, exit code 1.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<const EntityExtractor> make_extractor(const RunConfig& cfg) {
  if (cfg.stoplist.empty()) return std::make_shared<ContentTokenExtractor>();
  return std::make_shared<ContentTokenExtractor>(Stoplist::from_file(cfg.stoplist));
}

PipelineConfig pipeline_config(const RunConfig& cfg, const std::string& name) {
  PipelineConfig p;
  auto kind = parse_pipeline(name);
  if (!kind) throw UserError("unknown pipeline '" + name + "'");
  p.pipeline = *kind;
  p.mssm.first_hop_k = cfg.k1_hits;
  p.mssm.expand_k = cfg.k2_hits;
  p.mssm.final_k = cfg.final_k;
  p.mssm.alpha = cfg.alpha;
  p.two_step_k = cfg.two_step_k;
  p.two_step_l = cfg.two_step_l;
  p.max_pairs = cfg.max_pairs;
  p.validate();
  return p;
}

/// Owns whichever rerank scorer the flags selected.
struct ScorerHolder {
  std::optional<EmbeddingTable> table;
  std::unique_ptr<Scorer> scorer;
};

ScorerHolder make_scorer(const RunConfig& cfg, const Collection& c) {
  ScorerHolder h;
  if (cfg.embeddings.empty()) {
    h.scorer = std::make_unique<TfidfCosineScorer>(c.index);
  } else {
    h.table.emplace(EmbeddingTable::load(cfg.embeddings));
    h.scorer = std::make_unique<EmbeddingAvgScorer>(*h.table);
  }
  return h;
}

nlohmann::ordered_json trace_line(const std::string& qid, const std::string& choice, std::string_view config,
                                  const RetrievalTrace& trace, std::span<const ComposedSentence> contexts,
                                  bool composed) {
  nlohmann::ordered_json j;
  j["question_id"] = qid;
  j["choice"] = choice;
  j["config"] = config;
  j["stages"] = trace_to_json(trace);
  auto comp = nlohmann::ordered_json::array();
  if (composed) {
    for (const auto& c : contexts) comp.push_back(composed_to_json(c));
  }
  j["composition"] = std::move(comp);
  return j;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

int cmd_index(const RunConfig& cfg) {
  std::size_t malformed = 0;
  const auto c = build_collection_from_file(cfg.corpus, {cfg.bm25_k1, cfg.bm25_b}, make_extractor(cfg), &malformed);
  persist_collection(c, cfg.index_dir);
  std::cout << "doc_count: " << c.index.doc_count() << '\n'
            << "term_count: " << c.index.term_count() << '\n'
            << "avg_doc_len: " << std::setprecision(6) << c.index.avg_doc_len() << '\n'
            << "malformed_lines: " << malformed << '\n'
            << "index_dir: " << cfg.index_dir << '\n';
  if (malformed) std::cerr << "warning: skipped " << malformed << " malformed UTF-8 line(s)\n";
  return 0;
}

int cmd_retrieve(const RunConfig& cfg) {
  const auto c = load_collection(cfg.index_dir, make_extractor(cfg));
  std::string stem = cfg.text;
  std::string choice_text;
  std::string qid = "free-text";
  std::string label;
  if (!cfg.question_id.empty()) {
    if (cfg.questions.empty()) throw UserError("--question-id requires --questions");
    const auto set = load_questions(cfg.questions);
    const QuestionRecord* rec = nullptr;
    for (const auto& r : set.records) {
      if (r.id == cfg.question_id) rec = &r;
    }
    if (!rec) throw UserError("unknown question id '" + cfg.question_id + "'");
    stem = rec->stem;
    qid = rec->id;
    label = !cfg.choice.empty() ? cfg.choice : rec->answer_key.value_or("");
    if (!label.empty()) {
      const auto* ch = rec->find_choice(label);
      if (!ch) throw UserError("question '" + qid + "' has no choice '" + label + "'");
      choice_text = ch->text;
    }
  } else if (cfg.text.empty()) {
    throw UserError("retrieve needs --text or --question-id");
  }

  const auto pcfg = pipeline_config(cfg, cfg.pipelines.empty() ? "mssm" : cfg.pipelines.front());
  const auto scorer = make_scorer(cfg, c);
  const auto query = make_query(stem, choice_text, *c.extractor, qid, label);
  const auto out = run_pipeline(c, query, pcfg, *scorer.scorer, !cfg.trace.empty());

  std::cout << "# query: " << join(query.merged_tokens) << '\n'
            << "# pipeline: " << pipeline_name(pcfg.pipeline) << '\n';
  const bool pooled = pcfg.pipeline == Pipeline::Mre || pcfg.pipeline == Pipeline::Mssm ||
                      pcfg.pipeline == Pipeline::MssmFsc;
  const std::size_t shown = pooled ? std::min(pcfg.mssm.final_k, out.ranked.size()) : out.ranked.size();
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& f = out.ranked[i];
    std::cout << f.rank << '\t' << hop_name(f.hop) << '\t' << f.fact.id << '\t' << std::setprecision(6) << f.score
              << '\t' << f.final_score << '\t' << f.fact.text << '\n';
  }
  if (pcfg.pipeline == Pipeline::MssmFsc) {
    for (const auto& cs : out.contexts) std::cout << "# composed: " << cs.text() << '\n';
  }
  if (!cfg.trace.empty()) {
    auto t = open_output(cfg.trace);
    t << trace_line(qid, label, pipeline_name(pcfg.pipeline), out.trace, out.contexts,
                    pcfg.pipeline == Pipeline::MssmFsc)
             .dump()
      << '\n';
  }
  return 0;
}

int cmd_compose(const RunConfig& cfg) {
  std::vector<FactSentence> facts;
  const auto extractor = make_extractor(cfg);
  if (!cfg.ids.empty()) {
    const auto c = load_collection(cfg.index_dir, extractor);
    for (auto id : cfg.ids) {
      if (!c.index.contains_doc(id)) throw UserError("unknown fact id " + std::to_string(id));
      facts.push_back(c.fact(id));
    }
  }
  for (std::size_t i = 0; i < cfg.texts.size(); ++i) {
    facts.push_back(make_fact(static_cast<DocId>(i), cfg.texts[i], *extractor));
  }
  if (facts.empty()) throw UserError("compose needs --id or --text inputs");
  if (facts.size() == 1) {
    std::cerr << "warning: one input fact, nothing to compose; passing it through\n";
    std::cout << "composed: " << join(facts.front().tokens) << '\n';
    return 0;
  }
  if (facts.size() > 2) std::cerr << "warning: composing the first two facts only\n";
  const auto cs = compose(facts[0], facts[1]);
  std::cout << "composed: " << cs.text() << '\n';
  std::cout << "bridging:";
  for (const auto& s : cs.bridging_spans) std::cout << " [" << join(s.tokens) << "]@" << s.pos1 << ',' << s.pos2;
  std::cout << '\n' << "bridge_strength: " << cs.bridge_strength << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const auto c = load_collection(cfg.index_dir, make_extractor(cfg));
  auto qs = load_questions(cfg.questions);
  for (const auto& e : qs.errors) {
    std::cerr << "error: " << cfg.questions << ":" << e.line << " id '" << e.id << "': " << e.message << '\n';
  }
  if (cfg.limit && qs.records.size() > cfg.limit) qs.records.resize(cfg.limit);
  if (qs.records.empty()) throw UserError("no usable question records in " + cfg.questions);

  const auto scorer = make_scorer(cfg, c);
  const QaContext ctx{c, *scorer.scorer, !cfg.trace.empty()};
  const std::vector<std::string> names = cfg.pipelines.empty() ? std::vector<std::string>{"mssm+fsc"} : cfg.pipelines;
  std::vector<EvalReport> reports;
  std::optional<std::ofstream> trace;
  if (!cfg.trace.empty()) trace.emplace(open_output(cfg.trace));
  std::size_t errors = qs.errors.size();
  for (const auto& name : names) {
    const auto pcfg = pipeline_config(cfg, name);
    reports.push_back(evaluate(qs.records, pcfg, cfg.k_list, ctx, cfg.workers));
    errors += reports.back().error_count;
    if (trace) {
      for (const auto& p : reports.back().per_question) {
        for (const auto& [label, t] : p.traces) {
          const auto it = p.context_used.find(label);
          const std::span<const ComposedSentence> used =
              it == p.context_used.end() ? std::span<const ComposedSentence>{} : it->second;
          *trace << trace_line(p.question_id, label, name, t, used, pcfg.pipeline == Pipeline::MssmFsc).dump()
                 << '\n';
        }
      }
    }
  }

  nlohmann::ordered_json run = {{"questions", cfg.questions},
                                {"index_dir", cfg.index_dir},
                                {"doc_count", c.index.doc_count()},
                                {"bm25", {{"k1", c.index.params().k1}, {"b", c.index.params().b}}},
                                {"rerank_scorer", scorer.scorer->name()},
                                {"k_list", cfg.k_list},
                                {"record_errors", qs.errors.size()}};
  const auto report = make_report(reports, run, !cfg.seedless).dump(2) + "\n";
  if (cfg.output.empty()) {
    std::cout << report;
  } else {
    auto out = open_output(cfg.output);
    out << report;
  }
  std::cerr << "# " << kAccuracyCaveat << '\n';
  for (const auto& r : reports) {
    std::cerr << r.config_name << ": accuracy " << r.accuracy << " (" << r.n_correct << "/" << r.n_questions << ")";
    for (const auto& [k, v] : r.recall_at_k) std::cerr << " recall@" << k << " " << v;
    std::cerr << '\n';
  }
  return errors ? kExitUser : 0;
}

void add_retrieval_flags(CLI::App* sub, RunConfig& cfg, const std::string& default_pipeline) {
  sub->add_option("--pipeline", cfg.pipelines,
                  "Pipeline(s): no-ir, first-hop-only, single-step, mre, two-step, mssm, mssm+fsc")
      ->default_str(default_pipeline);
  sub->add_option("--k1-hits", cfg.k1_hits, "First-hop facts retrieved")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--k2-hits", cfg.k2_hits, "Expanded facts retrieved")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--final-k", cfg.final_k, "Facts kept after re-ranking")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--K", cfg.two_step_k, "Two-step IR: first-step facts")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--L", cfg.two_step_l, "Two-step IR: second-step facts per first-step fact")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--alpha", cfg.alpha, "Re-rank blend weight of normalized BM25")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--max-pairs", cfg.max_pairs, "Composed fact pairs per query")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--embeddings", cfg.embeddings, "Word-vector text file; re-rank with embedding cosine");
  sub->add_option("--trace", cfg.trace, "Write a JSON-Lines retrieval/composition trace");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"hopqa: multi-hop fact retrieval, sentence composition and QA evaluation"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--index-dir", cfg.index_dir, "Index directory")->envname("HOPQA_INDEX_DIR")->capture_default_str();
    sub->add_option("--stoplist", cfg.stoplist, "Stopword file (one token per line); default: built-in English list");
  };

  auto* index = app.add_subcommand("index", "Build and persist a BM25 index from a corpus file");
  add_common(index);
  index->add_option("--corpus", cfg.corpus, "UTF-8 corpus, one sentence per line")->required();
  index->add_option("--k1", cfg.bm25_k1, "BM25 k1")->capture_default_str()->check(CLI::PositiveNumber);
  index->add_option("--b", cfg.bm25_b, "BM25 b")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  auto* retrieve = app.add_subcommand("retrieve", "Retrieve facts for a question");
  add_common(retrieve);
  add_retrieval_flags(retrieve, cfg, "mssm");
  retrieve->add_option("--text", cfg.text, "Free-text question");
  retrieve->add_option("--question-id", cfg.question_id, "Question id from --questions");
  retrieve->add_option("--questions", cfg.questions, "QASC JSON-Lines question file");
  retrieve->add_option("--choice", cfg.choice, "Answer label appended to the question (default: answer key)");

  auto* comp = app.add_subcommand("compose", "Compose two facts over their bridging entities");
  add_common(comp);
  comp->add_option("--id", cfg.ids, "Fact id in the index (repeatable)");
  comp->add_option("--text", cfg.texts, "Fact text (repeatable)");

  auto* eval = app.add_subcommand("eval", "Answer a question set and report accuracy and gold-fact recall");
  add_common(eval);
  add_retrieval_flags(eval, cfg, "mssm+fsc");
  eval->add_option("--questions", cfg.questions, "QASC JSON-Lines question file")->required();
  eval->add_option("--output", cfg.output, "Report path (default: stdout)");
  eval->add_option("--k-list", cfg.k_list, "Recall cut-offs")->delimiter(',')->capture_default_str();
  eval->add_option("--workers", cfg.workers, "Parallel question workers")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--limit", cfg.limit, "Evaluate only the first N records (0 = all)")->capture_default_str();
  eval->add_flag("--seedless", cfg.seedless, "Omit the timestamp so repeated runs are byte-identical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUser;
  }

  try {
    if (index->parsed()) return cmd_index(cfg);
    if (retrieve->parsed()) return cmd_retrieve(cfg);
    if (comp->parsed()) return cmd_compose(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const IndexVersionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const IndexFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
