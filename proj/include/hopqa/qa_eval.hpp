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
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hopqa/composition.hpp"
#include "hopqa/corpus.hpp"
#include "hopqa/index.hpp"
#include "hopqa/rerank.hpp"
#include "hopqa/retrieval.hpp"

namespace hopqa {

/// Printed at the top of every evaluation report.
inline constexpr std::string_view kAccuracyCaveat =
    "Accuracies in this report come from a deterministic lexical answer scorer. They do not "
    "reproduce, and must not be compared with, the published QASC dev accuracies of 0.2279 to "
    "0.8152, which were obtained with a fine-tuned RoBERTa/BERT reader and graph attention "
    "network that this tool does not include.";

/// Retrieval configurations, one per ablation row.
enum class Pipeline { NoIr, FirstHopOnly, SingleStep, Mre, TwoStep, Mssm, MssmFsc };

inline constexpr std::array<Pipeline, 7> kAllPipelines = {
    Pipeline::NoIr, Pipeline::FirstHopOnly, Pipeline::SingleStep, Pipeline::Mre,
    Pipeline::TwoStep, Pipeline::Mssm, Pipeline::MssmFsc};

inline std::string_view pipeline_name(Pipeline p) noexcept {
  switch (p) {
    case Pipeline::NoIr: return "no-ir";
    case Pipeline::FirstHopOnly: return "first-hop-only";
    case Pipeline::SingleStep: return "single-step";
    case Pipeline::Mre: return "mre";
    case Pipeline::TwoStep: return "two-step";
    case Pipeline::Mssm: return "mssm";
    case Pipeline::MssmFsc: return "mssm+fsc";
  }
  return "?";
}

inline std::optional<Pipeline> parse_pipeline(std::string_view name) {
  for (auto p : kAllPipelines) {
    if (pipeline_name(p) == name) return p;
  }
  return std::nullopt;
}

struct PipelineConfig {
  Pipeline pipeline = Pipeline::MssmFsc;
  MssmParams mssm;
  std::size_t two_step_k = 20;
  std::size_t two_step_l = 4;
  std::size_t max_pairs = 5;

  void validate() const {
    if (mssm.first_hop_k == 0 || mssm.expand_k == 0 || mssm.final_k == 0 || two_step_k == 0 ||
        two_step_l == 0 || max_pairs == 0) {
      throw InvalidArgument("pipeline parameters must be positive");
    }
    if (!(mssm.alpha >= 0.0 && mssm.alpha <= 1.0)) throw InvalidArgument("alpha must be in [0, 1]");
  }
};

struct PipelineOutput {
  /// Full ordered candidate list; recall is measured on its prefix.
  std::vector<RankedFact> ranked;
  /// What the answer scorer reads.
  std::vector<ComposedSentence> contexts;
  RetrievalTrace trace;
};

/// Runs one configured pipeline for one query. rerank_scorer is used by the
/// mssm configurations only.
inline PipelineOutput run_pipeline(const Collection& c, const Query& query, const PipelineConfig& cfg,
                                   const Scorer& rerank_scorer, bool want_trace = false) {
  PipelineOutput out;
  RetrievalTrace* trace = want_trace ? &out.trace : nullptr;
  auto take = [&](std::size_t n) {
    const auto end = std::min(n, out.ranked.size());
    for (std::size_t i = 0; i < end; ++i) out.contexts.push_back(passthrough(out.ranked[i]));
  };
  switch (cfg.pipeline) {
    case Pipeline::NoIr:
      break;
    case Pipeline::FirstHopOnly:
      out.ranked = first_hop_retrieve(c, query, cfg.mssm.first_hop_k, trace);
      take(cfg.mssm.final_k);
      break;
    case Pipeline::SingleStep:
      out.ranked = single_step_ir(c, query, cfg.mssm.first_hop_k, trace);
      take(cfg.mssm.final_k);
      break;
    case Pipeline::TwoStep:
      out.ranked = two_step_ir(c, query, cfg.two_step_k, cfg.two_step_l, trace);
      take(cfg.mssm.final_k);
      break;
    case Pipeline::Mre:
    case Pipeline::Mssm:
    case Pipeline::MssmFsc: {
      auto pool = mssm_retrieve(c, query, cfg.mssm, cfg.pipeline == Pipeline::Mre ? nullptr : &rerank_scorer,
                                trace);
      if (cfg.pipeline == Pipeline::MssmFsc) {
        out.contexts = pair_and_compose(pool, cfg.max_pairs);
      } else {
        for (const auto& f : pool.merged) out.contexts.push_back(passthrough(f));
      }
      out.ranked = std::move(pool.ranked);
      break;
    }
  }
  return out;
}

/// Lexical stand-in for P(a | Facts, Q): the best context's tf-idf cosine
/// with Q = q + a plus the fraction of the choice's entity tokens (all of its
/// tokens when it has no entity) that the context contains.
inline double score_choice(const Query& query, std::span<const ComposedSentence> contexts,
                           const InvertedIndex& stats) {
  if (contexts.empty()) return 0.0;
  const TokenSet choice_terms = query.choice_entities.empty()
                                    ? TokenSet(query.choice_tokens.begin(), query.choice_tokens.end())
                                    : query.choice_entities;
  double best = 0.0;
  for (const auto& ctx : contexts) {
    double coverage = 0.0;
    if (!choice_terms.empty()) {
      const TokenSet have(ctx.tokens.begin(), ctx.tokens.end());
      std::size_t hit = 0;
      for (const auto& t : choice_terms) hit += have.contains(t) ? 1 : 0;
      coverage = static_cast<double>(hit) / static_cast<double>(choice_terms.size());
    }
    best = std::max(best, tfidf_cosine_score(query.merged_tokens, ctx.tokens, stats) + coverage);
  }
  return best;
}

struct Prediction {
  std::string question_id;
  std::string chosen_label;
  std::map<std::string, double> per_choice_scores;
  std::map<std::string, std::vector<ComposedSentence>> context_used;
  std::optional<std::string> answer_key;
  bool correct = false;
  /// Position of each gold fact in the answer-key choice's ranked list.
  std::optional<std::size_t> gold_rank1;
  std::optional<std::size_t> gold_rank2;
  bool has_gold = false;
  std::vector<std::string> errors;
  std::map<std::string, RetrievalTrace> traces;
};

struct QaContext {
  const Collection& collection;
  const Scorer& rerank_scorer;
  bool trace = false;
};

/// Label with the highest score; ties go to the alphabetically first label.
inline std::string argmax_label(const std::map<std::string, double>& scores) {
  std::string best;
  double best_score = 0.0;
  bool first = true;
  for (const auto& [label, s] : scores) {
    if (first || s > best_score) {
      best = label;
      best_score = s;
      first = false;
    }
  }
  return best;
}

namespace detail {

inline std::optional<std::size_t> find_rank(std::span<const RankedFact> ranked, const std::string& normalized) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (normalize_text(ranked[i].fact.text) == normalized) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// Scores all choices of a record. A failing choice scores 0 and the error is
/// recorded; the question is never aborted.
inline Prediction answer_question(const QuestionRecord& rec, const PipelineConfig& cfg, const QaContext& ctx) {
  Prediction p;
  p.question_id = rec.id;
  p.answer_key = rec.answer_key;
  p.has_gold = rec.gold_fact1.has_value() && rec.gold_fact2.has_value();
  std::vector<const Choice*> order;
  for (const auto& c : rec.choices) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Choice* a, const Choice* b) { return a->label < b->label; });
  for (const auto* choice : order) {
    double score = 0.0;
    try {
      const auto query = make_query(rec, *choice, *ctx.collection.extractor);
      auto out = run_pipeline(ctx.collection, query, cfg, ctx.rerank_scorer, ctx.trace);
      score = score_choice(query, out.contexts, ctx.collection.index);
      if (rec.answer_key && *rec.answer_key == choice->label && p.has_gold) {
        p.gold_rank1 = detail::find_rank(out.ranked, normalize_text(*rec.gold_fact1));
        p.gold_rank2 = detail::find_rank(out.ranked, normalize_text(*rec.gold_fact2));
      }
      p.context_used[choice->label] = std::move(out.contexts);
      if (ctx.trace) p.traces[choice->label] = std::move(out.trace);
    } catch (const std::exception& e) {
      score = 0.0;
      p.errors.push_back("choice " + choice->label + ": " + e.what());
    }
    p.per_choice_scores[choice->label] = score;
  }
  p.chosen_label = argmax_label(p.per_choice_scores);
  p.correct = rec.answer_key && *rec.answer_key == p.chosen_label;
  return p;
}

struct EvalReport {
  std::string config_name;
  PipelineConfig config;
  /// correct / n_questions; questions without an answer key are not counted.
  double accuracy = 0.0;
  std::size_t n_questions = 0;
  std::size_t n_correct = 0;
  std::size_t n_records = 0;
  /// Questions with an answer key and both gold facts.
  std::size_t n_recall_questions = 0;
  std::map<std::size_t, double> recall_at_k;
  std::vector<Prediction> per_question;
  std::size_t error_count = 0;
};

/// Answers every record (workers > 1 runs questions in parallel) and reduces
/// the predictions into metrics. Throws InvalidArgument for zero records.
inline EvalReport evaluate(std::span<const QuestionRecord> records, const PipelineConfig& cfg,
                           std::vector<std::size_t> k_list, const QaContext& ctx, std::size_t workers = 1) {
  if (records.empty()) throw InvalidArgument("evaluate: no question records");
  cfg.validate();
  EvalReport r;
  r.config_name = std::string(pipeline_name(cfg.pipeline));
  r.config = cfg;
  r.n_records = records.size();
  r.per_question.resize(records.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        r.per_question[i] = answer_question(records[i], cfg, ctx);
      } catch (const std::exception& e) {
        r.per_question[i].question_id = records[i].id;
        r.per_question[i].errors.push_back(e.what());
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, records.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::sort(k_list.begin(), k_list.end());
  k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
  std::map<std::size_t, std::size_t> recall_hits;
  for (auto k : k_list) recall_hits[k] = 0;
  for (const auto& p : r.per_question) {
    r.error_count += p.errors.size();
    if (!p.answer_key) continue;
    ++r.n_questions;
    r.n_correct += p.correct ? 1 : 0;
    if (!p.has_gold) continue;
    ++r.n_recall_questions;
    for (auto k : k_list) {
      if (p.gold_rank1 && p.gold_rank2 && *p.gold_rank1 < k && *p.gold_rank2 < k) ++recall_hits[k];
    }
  }
  r.accuracy = r.n_questions ? static_cast<double>(r.n_correct) / static_cast<double>(r.n_questions) : 0.0;
  for (auto k : k_list) {
    r.recall_at_k[k] = r.n_recall_questions
                           ? static_cast<double>(recall_hits[k]) / static_cast<double>(r.n_recall_questions)
                           : 0.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  return {{"pipeline", pipeline_name(c.pipeline)},
          {"k1_hits", c.mssm.first_hop_k},
          {"k2_hits", c.mssm.expand_k},
          {"final_k", c.mssm.final_k},
          {"alpha", c.mssm.alpha},
          {"K", c.two_step_k},
          {"L", c.two_step_l},
          {"max_pairs", c.max_pairs}};
}

inline nlohmann::ordered_json trace_to_json(const RetrievalTrace& trace) {
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : trace) {
    auto hits = nlohmann::ordered_json::array();
    for (const auto& [id, score] : s.hits) hits.push_back({{"id", id}, {"score", score}});
    stages.push_back({{"stage", s.stage}, {"query_terms", s.query_terms}, {"hits", std::move(hits)}});
  }
  return stages;
}

inline nlohmann::ordered_json composed_to_json(const ComposedSentence& c) {
  auto spans = nlohmann::ordered_json::array();
  for (const auto& s : c.bridging_spans) {
    spans.push_back({{"tokens", s.tokens}, {"pos1", s.pos1}, {"pos2", s.pos2}});
  }
  nlohmann::ordered_json ids = nlohmann::ordered_json::array({c.fact1});
  if (c.fact2) ids.push_back(*c.fact2);
  return {{"fact_ids", std::move(ids)},
          {"bridging_spans", std::move(spans)},
          {"bridge_strength", c.bridge_strength},
          {"composed", c.text()}};
}

inline nlohmann::ordered_json prediction_to_json(const Prediction& p) {
  nlohmann::ordered_json j;
  j["id"] = p.question_id;
  j["chosen"] = p.chosen_label;
  j["answer_key"] = p.answer_key ? nlohmann::ordered_json(*p.answer_key) : nlohmann::ordered_json(nullptr);
  j["correct"] = p.correct;
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  for (const auto& [label, s] : p.per_choice_scores) scores[label] = s;
  j["scores"] = std::move(scores);
  auto rank = [](const std::optional<std::size_t>& r) {
    return r ? nlohmann::ordered_json(*r) : nlohmann::ordered_json(nullptr);
  };
  j["gold_rank"] = nlohmann::ordered_json::array({rank(p.gold_rank1), rank(p.gold_rank2)});
  if (!p.errors.empty()) j["errors"] = p.errors;
  return j;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.recall_at_k) recall[std::to_string(k)] = v;
  auto per = nlohmann::ordered_json::array();
  for (const auto& p : r.per_question) per.push_back(prediction_to_json(p));
  return {{"config", r.config_name},
          {"params", config_to_json(r.config)},
          {"metrics",
           {{"accuracy", r.accuracy},
            {"n_questions", r.n_questions},
            {"n_correct", r.n_correct},
            {"n_records", r.n_records},
            {"n_recall_questions", r.n_recall_questions},
            {"recall_at_k", std::move(recall)},
            {"errors", r.error_count}}},
          {"per_question", std::move(per)}};
}

/// Full report over several configurations. With include_timestamp = false
/// the output is a pure function of the inputs.
inline nlohmann::ordered_json make_report(std::span<const EvalReport> reports, const nlohmann::ordered_json& run_info,
                                          bool include_timestamp) {
  nlohmann::ordered_json j;
  j["caveat"] = kAccuracyCaveat;
  if (include_timestamp) {
    const auto now = std::chrono::system_clock::now();
    j["generated_at"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  }
  j["run"] = run_info;
  auto table = nlohmann::ordered_json::array();
  auto configs = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json row = {{"config", r.config_name}, {"accuracy", r.accuracy}};
    for (const auto& [k, v] : r.recall_at_k) row["recall@" + std::to_string(k)] = v;
    table.push_back(std::move(row));
    configs.push_back(report_to_json(r));
  }
  j["comparison"] = std::move(table);
  j["reports"] = std::move(configs);
  return j;
}

}  // namespace hopqa
