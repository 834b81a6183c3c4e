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
#include <string_view>

#include "hopqa/corpus.hpp"

namespace hopqa {

enum class Hop { FirstHop, Expanded, Baseline };

inline std::string_view hop_name(Hop h) noexcept {
  switch (h) {
    case Hop::FirstHop: return "first-hop";
    case Hop::Expanded: return "expanded";
    case Hop::Baseline: return "baseline";
  }
  return "?";
}

struct RankedFact {
  FactSentence fact;
  /// BM25 score from the retrieval stage that produced this fact.
  double score = 0.0;
  /// Ordering score after re-ranking; equals score until rerank runs.
  double final_score = 0.0;
  Hop hop = Hop::Baseline;
  /// Query terms that matched. For Expanded facts, only difference-set terms.
  TokenSet source_query_terms;
  std::size_t rank = 0;
};

/// Sorts by final_score desc, fact id asc, and renumbers ranks.
template <typename Vec>
void order_by_final_score(Vec& facts) {
  std::sort(facts.begin(), facts.end(), [](const RankedFact& a, const RankedFact& b) {
    return a.final_score != b.final_score ? a.final_score > b.final_score : a.fact.id < b.fact.id;
  });
  for (std::size_t i = 0; i < facts.size(); ++i) facts[i].rank = i;
}

}  // namespace hopqa
