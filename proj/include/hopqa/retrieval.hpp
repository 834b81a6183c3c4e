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

// Multi-stage retrieval over a Collection:
//
//   first hop   BM25 over the query's entities
//   difference  entities of first-hop facts that the query does not mention
//   expansion   BM25 over difference terms plus the query entities,
//               excluding facts already found
//   rerank      blend of normalized BM25 and a similarity scorer
//
// plus the single-step and two-step baselines.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hopqa/corpus.hpp"
#include "hopqa/index.hpp"
#include "hopqa/ranked_fact.hpp"
#include "hopqa/rerank.hpp"

namespace hopqa {

/// One retrieval call, recorded for debugging and ablation tables.
struct TraceStage {
  std::string stage;
  TokenList query_terms;
  std::vector<std::pair<DocId, double>> hits;
};

using RetrievalTrace = std::vector<TraceStage>;

struct DifferenceSet {
  TokenSet terms;
  /// Every first-hop fact id that contributed each term, ascending.
  std::map<Token, std::vector<DocId>, std::less<>> origin_fact_ids;
};

struct CandidatePool {
  std::vector<RankedFact> first_hop;
  std::vector<RankedFact> expanded;
  /// first_hop and expanded deduplicated and put in final order (untruncated).
  std::vector<RankedFact> ranked;
  /// Leading final_k entries of ranked.
  std::vector<RankedFact> merged;
};

struct MssmParams {
  std::size_t first_hop_k = 20;
  std::size_t expand_k = 20;
  std::size_t final_k = 10;
  double alpha = 0.5;
};

namespace detail {

inline TokenList to_list(const TokenSet& s) { return TokenList(s.begin(), s.end()); }

inline TokenList distinct(std::span<const Token> tokens) {
  TokenSet s(tokens.begin(), tokens.end());
  return to_list(s);
}

/// Query entities, or the deduplicated raw tokens when no entity survives
/// stopword removal.
inline TokenList anchor_terms(const Query& query) {
  return query.entities.empty() ? distinct(query.merged_tokens) : to_list(query.entities);
}

inline void record(RetrievalTrace* trace, std::string stage, TokenList terms,
                   const std::vector<RankedFact>& facts) {
  if (!trace) return;
  TraceStage s{std::move(stage), std::move(terms), {}};
  for (const auto& f : facts) s.hits.emplace_back(f.fact.id, f.score);
  trace->push_back(std::move(s));
}

inline RankedFact to_ranked(const Collection& c, const SearchHit& hit, Hop hop, std::size_t rank) {
  RankedFact r;
  r.fact = c.fact(hit.doc_id);
  r.score = hit.score;
  r.final_score = hit.score;
  r.hop = hop;
  r.source_query_terms = hit.matched_terms;
  r.rank = rank;
  return r;
}

/// Higher-scored occurrence wins; output sorted by (score desc, id asc).
inline std::vector<RankedFact> dedup_by_best_score(std::vector<RankedFact> facts) {
  std::unordered_map<DocId, std::size_t> best;
  std::vector<RankedFact> out;
  for (auto& f : facts) {
    auto it = best.find(f.fact.id);
    if (it == best.end()) {
      best.emplace(f.fact.id, out.size());
      out.push_back(std::move(f));
    } else if (f.score > out[it->second].score) {
      out[it->second] = std::move(f);
    }
  }
  for (auto& f : out) f.final_score = f.score;
  order_by_final_score(out);
  return out;
}

}  // namespace detail

/// Top first_hop_k facts by BM25 over the query's entities.
inline std::vector<RankedFact> first_hop_retrieve(const Collection& c, const Query& query,
                                                  std::size_t first_hop_k,
                                                  RetrievalTrace* trace = nullptr) {
  auto terms = detail::anchor_terms(query);
  std::vector<RankedFact> out;
  const auto hits = search_topk(c.index, terms, first_hop_k);
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) out.push_back(detail::to_ranked(c, hits[i], Hop::FirstHop, i));
  detail::record(trace, "first-hop", std::move(terms), out);
  return out;
}

/// Entities found in first-hop facts but absent from the query.
inline DifferenceSet difference_set(std::span<const RankedFact> first_hop, const Query& query) {
  DifferenceSet d;
  for (const auto& rf : first_hop) {
    for (const auto& e : rf.fact.entities) {
      if (query.entities.contains(e)) continue;
      d.terms.insert(e);
      auto& ids = d.origin_fact_ids[e];
      if (std::find(ids.begin(), ids.end(), rf.fact.id) == ids.end()) ids.push_back(rf.fact.id);
    }
  }
  for (auto& [term, ids] : d.origin_fact_ids) std::sort(ids.begin(), ids.end());
  return d;
}

/// Second hop: BM25 over diff.terms and the query anchors, skipping ids in
/// exclude. source_query_terms keeps only the difference terms that matched.
inline std::vector<RankedFact> expand_retrieve(const Collection& c, const DifferenceSet& diff,
                                               const Query& query, std::size_t expand_k,
                                               std::span<const DocId> exclude = {},
                                               RetrievalTrace* trace = nullptr) {
  if (expand_k == 0) throw InvalidArgument("expand_retrieve: k must be >= 1");
  TokenSet terms = diff.terms;
  for (auto& t : detail::anchor_terms(query)) terms.insert(std::move(t));
  auto term_list = detail::to_list(terms);
  const std::unordered_set<DocId> skip(exclude.begin(), exclude.end());

  std::vector<RankedFact> out;
  if (!term_list.empty()) {
    const auto hits = search_topk(c.index, term_list, expand_k + skip.size());
    for (const auto& h : hits) {
      if (skip.contains(h.doc_id)) continue;
      auto rf = detail::to_ranked(c, h, Hop::Expanded, out.size());
      TokenSet from_diff;
      for (const auto& t : rf.source_query_terms) {
        if (diff.terms.contains(t)) from_diff.insert(t);
      }
      rf.source_query_terms = std::move(from_diff);
      out.push_back(std::move(rf));
      if (out.size() == expand_k) break;
    }
  }
  detail::record(trace, "expanded", std::move(term_list), out);
  return out;
}

/// First hop, difference set, expansion, then rerank when a scorer is given
/// (otherwise BM25 order), truncated to final_k.
inline CandidatePool mssm_retrieve(const Collection& c, const Query& query, const MssmParams& p,
                                   const Scorer* scorer, RetrievalTrace* trace = nullptr) {
  if (p.first_hop_k == 0 || p.expand_k == 0 || p.final_k == 0) {
    throw InvalidArgument("mssm_retrieve: stage sizes must be >= 1");
  }
  CandidatePool pool;
  pool.first_hop = first_hop_retrieve(c, query, p.first_hop_k, trace);
  const auto diff = difference_set(pool.first_hop, query);
  std::vector<DocId> seen;
  seen.reserve(pool.first_hop.size());
  for (const auto& f : pool.first_hop) seen.push_back(f.fact.id);
  pool.expanded = expand_retrieve(c, diff, query, p.expand_k, seen, trace);

  std::vector<RankedFact> all = pool.first_hop;
  all.insert(all.end(), pool.expanded.begin(), pool.expanded.end());
  pool.ranked = detail::dedup_by_best_score(std::move(all));
  if (scorer) pool.ranked = rerank(std::move(pool.ranked), query, *scorer, p.alpha);
  if (trace) {
    TraceStage s{scorer ? "rerank" : "merge", {}, {}};
    for (const auto& f : pool.ranked) s.hits.emplace_back(f.fact.id, f.final_score);
    trace->push_back(std::move(s));
  }
  pool.merged.assign(pool.ranked.begin(),
                     pool.ranked.begin() + static_cast<std::ptrdiff_t>(std::min(p.final_k, pool.ranked.size())));
  return pool;
}

/// One BM25 query over Q = q + a.
inline std::vector<RankedFact> single_step_ir(const Collection& c, const Query& query, std::size_t k,
                                              RetrievalTrace* trace = nullptr) {
  std::vector<RankedFact> out;
  const auto hits = search_topk(c.index, query.merged_tokens, k);
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) out.push_back(detail::to_ranked(c, hits[i], Hop::Baseline, i));
  detail::record(trace, "single-step", query.merged_tokens, out);
  return out;
}

/// Word set (Q \ f1) ∪ (f1 \ Q) over tokens.
inline TokenSet symmetric_difference(std::span<const Token> query, std::span<const Token> fact) {
  const TokenSet q(query.begin(), query.end());
  const TokenSet f(fact.begin(), fact.end());
  TokenSet out;
  std::set_symmetric_difference(q.begin(), q.end(), f.begin(), f.end(), std::inserter(out, out.end()));
  return out;
}

struct TwoStepResult {
  std::vector<RankedFact> first;
  struct Expansion {
    DocId source = 0;  // generating f1
    TokenSet terms;    // (Q \ f1) ∪ (f1 \ Q)
    std::vector<RankedFact> facts;
  };
  std::vector<Expansion> second;
  /// first and every second-step list, deduplicated, best score first.
  std::vector<RankedFact> merged;
};

/// Two-step baseline: K facts for Q = q + a, then for every f1 the top L
/// other facts ranked by BM25 over the symmetric difference of Q and f1.
/// Facts sharing no word with that set score 0 and are never returned.
inline TwoStepResult two_step_retrieve(const Collection& c, const Query& query, std::size_t first_k,
                                       std::size_t second_l, RetrievalTrace* trace = nullptr) {
  if (first_k == 0 || second_l == 0) throw InvalidArgument("two_step_ir: K and L must be >= 1");
  TwoStepResult r;
  r.first = single_step_ir(c, query, first_k, trace);
  std::vector<RankedFact> all = r.first;
  for (const auto& f1 : r.first) {
    TwoStepResult::Expansion e;
    e.source = f1.fact.id;
    e.terms = symmetric_difference(query.merged_tokens, f1.fact.tokens);
    auto terms = detail::to_list(e.terms);
    if (!terms.empty()) {
      for (const auto& h : search_topk(c.index, terms, second_l + 1)) {
        if (h.doc_id == f1.fact.id) continue;
        e.facts.push_back(detail::to_ranked(c, h, Hop::Baseline, e.facts.size()));
        if (e.facts.size() == second_l) break;
      }
    }
    detail::record(trace, "two-step:" + std::to_string(f1.fact.id), std::move(terms), e.facts);
    all.insert(all.end(), e.facts.begin(), e.facts.end());
    r.second.push_back(std::move(e));
  }
  r.merged = detail::dedup_by_best_score(std::move(all));
  return r;
}

inline std::vector<RankedFact> two_step_ir(const Collection& c, const Query& query, std::size_t first_k,
                                           std::size_t second_l, RetrievalTrace* trace = nullptr) {
  return two_step_retrieve(c, query, first_k, second_l, trace).merged;
}

}  // namespace hopqa
