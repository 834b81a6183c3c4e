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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hopqa/corpus.hpp"
#include "hopqa/ranked_fact.hpp"
#include "hopqa/retrieval.hpp"
#include "hopqa/text.hpp"

namespace hopqa {

/// A maximal run of tokens shared by two facts.
struct CommonSpan {
  TokenList tokens;
  std::size_t pos1 = 0;  // start in fact1
  std::size_t pos2 = 0;  // start in fact2
  bool is_content = false;

  friend bool operator==(const CommonSpan&, const CommonSpan&) = default;
};

struct ComposedSentence {
  TokenList tokens;
  /// Common spans holding at least one entity token.
  std::vector<CommonSpan> bridging_spans;
  DocId fact1 = 0;
  /// Absent for a single fact passed through unchanged.
  std::optional<DocId> fact2;
  /// Number of entity tokens the two facts share.
  std::size_t bridge_strength = 0;
  double score_sum = 0.0;

  std::string text() const { return join(tokens); }
};

namespace detail {

struct Run {
  std::size_t pos1;
  std::size_t pos2;
  std::size_t len;
};

// Every diagonal run of equal tokens that cannot be extended on either side.
inline std::vector<Run> maximal_runs(std::span<const Token> a, std::span<const Token> b) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i] != b[j]) continue;
      if (i > 0 && j > 0 && a[i - 1] == b[j - 1]) continue;
      std::size_t len = 1;
      while (i + len < a.size() && j + len < b.size() && a[i + len] == b[j + len]) ++len;
      runs.push_back({i, j, len});
    }
  }
  return runs;
}

}  // namespace detail

/// Maximal common contiguous token runs of fact1 and fact2, one entry per
/// distinct token sequence at its leftmost (pos1, pos2), sorted by pos1.
/// Overlapping runs are all reported. is_entity decides is_content.
template <typename IsEntity>
std::vector<CommonSpan> common_spans(std::span<const Token> fact1, std::span<const Token> fact2,
                                     IsEntity&& is_entity) {
  auto runs = detail::maximal_runs(fact1, fact2);
  // Runs come out in (pos1, pos2) order, so the first copy kept is the leftmost.
  std::vector<CommonSpan> spans;
  for (const auto& r : runs) {
    TokenList toks(fact1.begin() + static_cast<std::ptrdiff_t>(r.pos1),
                   fact1.begin() + static_cast<std::ptrdiff_t>(r.pos1 + r.len));
    const bool dup = std::any_of(spans.begin(), spans.end(),
                                 [&](const CommonSpan& s) { return s.tokens == toks; });
    if (dup) continue;
    const bool content = std::any_of(toks.begin(), toks.end(), [&](const Token& t) { return is_entity(t); });
    spans.push_back({std::move(toks), r.pos1, r.pos2, content});
  }
  return spans;
}

inline std::vector<CommonSpan> common_spans(std::span<const Token> fact1, std::span<const Token> fact2,
                                            const Stoplist& stopwords = Stoplist::english()) {
  return common_spans(fact1, fact2, [&](const Token& t) { return !stopwords.contains(t); });
}

/// Entity tokens present in both facts.
inline TokenSet shared_entities(const FactSentence& a, const FactSentence& b) {
  TokenSet out;
  std::set_intersection(a.entities.begin(), a.entities.end(), b.entities.begin(), b.entities.end(),
                        std::inserter(out, out.end()));
  return out;
}

/// Drops every token covered by a common run from both facts, then emits the
/// rest of fact1 followed by the rest of fact2, collapsing consecutive
/// repeats. Entity membership comes from the facts' own entity sets.
inline ComposedSentence compose(const FactSentence& fact1, const FactSentence& fact2) {
  ComposedSentence out;
  out.fact1 = fact1.id;
  out.fact2 = fact2.id;
  out.bridge_strength = shared_entities(fact1, fact2).size();
  for (auto& s : common_spans(fact1.tokens, fact2.tokens,
                              [&](const Token& t) { return fact1.entities.contains(t); })) {
    if (s.is_content) out.bridging_spans.push_back(std::move(s));
  }

  std::vector<bool> drop1(fact1.tokens.size(), false);
  std::vector<bool> drop2(fact2.tokens.size(), false);
  for (const auto& r : detail::maximal_runs(fact1.tokens, fact2.tokens)) {
    for (std::size_t k = 0; k < r.len; ++k) {
      drop1[r.pos1 + k] = true;
      drop2[r.pos2 + k] = true;
    }
  }
  auto emit = [&](const TokenList& toks, const std::vector<bool>& drop) {
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (drop[i]) continue;
      if (!out.tokens.empty() && out.tokens.back() == toks[i]) continue;
      out.tokens.push_back(toks[i]);
    }
  };
  emit(fact1.tokens, drop1);
  emit(fact2.tokens, drop2);
  return out;
}

/// As compose(fact1, fact2), with entities recomputed from stopwords.
inline ComposedSentence compose(FactSentence fact1, FactSentence fact2, const Stoplist& stopwords) {
  fact1.entities = extract_entities(fact1.tokens, stopwords);
  fact2.entities = extract_entities(fact2.tokens, stopwords);
  return compose(fact1, fact2);
}

/// Wraps one fact as a context with nothing removed.
inline ComposedSentence passthrough(const RankedFact& f) {
  ComposedSentence out;
  out.tokens = f.fact.tokens;
  out.fact1 = f.fact.id;
  out.score_sum = f.final_score;
  return out;
}

/// Pairs facts of an ordered pool and composes the strongest max_pairs pairs.
/// Every unordered pair is a candidate (cross-hop and same-hop alike); pairs
/// rank by shared-entity count, then summed final score, then pool order.
/// Within a pair the earlier (higher-scored) fact goes first.
inline std::vector<ComposedSentence> pair_and_compose(std::span<const RankedFact> pool, std::size_t max_pairs) {
  if (pool.empty()) return {};
  if (pool.size() == 1) return {passthrough(pool.front())};

  struct Candidate {
    std::size_t i, j, strength;
    double score_sum;
  };
  std::vector<Candidate> pairs;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i].fact.id == pool[j].fact.id) continue;
      pairs.push_back({i, j, shared_entities(pool[i].fact, pool[j].fact).size(),
                       pool[i].final_score + pool[j].final_score});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Candidate& a, const Candidate& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    if (a.score_sum != b.score_sum) return a.score_sum > b.score_sum;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  if (pairs.size() > max_pairs) pairs.resize(max_pairs);

  std::vector<ComposedSentence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto c = compose(pool[p.i].fact, pool[p.j].fact);
    c.score_sum = p.score_sum;
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<ComposedSentence> pair_and_compose(const CandidatePool& pool, std::size_t max_pairs) {
  return pair_and_compose(std::span<const RankedFact>(pool.merged), max_pairs);
}

}  // namespace hopqa
