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
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hopqa/error.hpp"
#include "hopqa/index.hpp"
#include "hopqa/ranked_fact.hpp"

namespace hopqa {

/// Similarity between a query and a fact. Implementations must be pure.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::span<const Token> query, std::span<const Token> fact) const = 0;
  virtual std::string name() const = 0;
};

/// idf used by the tf-idf matcher: ln(N / (1 + df)), or 0 for an empty index.
inline double tfidf_idf(std::uint64_t doc_count, std::uint64_t doc_freq) noexcept {
  if (doc_count == 0) return 0.0;
  return std::log(static_cast<double>(doc_count) / (1.0 + static_cast<double>(doc_freq)));
}

/// Cosine of raw-count tf-idf vectors. Because both sides share one idf per
/// term, the result lies in [0, 1] whatever the idf sign. Returns 0 when
/// either vector is all-zero.
template <typename IdfFn>
double tfidf_cosine(std::span<const Token> query, std::span<const Token> fact, IdfFn&& idf) {
  std::map<std::string_view, std::pair<double, double>> tf;
  for (const auto& t : query) tf[t].first += 1.0;
  for (const auto& t : fact) tf[t].second += 1.0;
  double dot = 0.0, nq = 0.0, nf = 0.0;
  for (const auto& [term, counts] : tf) {
    const double w = idf(term);
    const double wq = counts.first * w;
    const double wf = counts.second * w;
    dot += wq * wf;
    nq += wq * wq;
    nf += wf * wf;
  }
  if (nq == 0.0 || nf == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nq) * std::sqrt(nf)), 0.0, 1.0);
}

inline double tfidf_cosine_score(std::span<const Token> query, std::span<const Token> fact,
                                 const InvertedIndex& stats) {
  return tfidf_cosine(query, fact, [&](std::string_view t) {
    return tfidf_idf(stats.doc_count(), stats.doc_freq(t));
  });
}

class TfidfCosineScorer final : public Scorer {
 public:
  explicit TfidfCosineScorer(const InvertedIndex& stats) : stats_(&stats) {}
  double score(std::span<const Token> query, std::span<const Token> fact) const override {
    return tfidf_cosine_score(query, fact, *stats_);
  }
  std::string name() const override { return "tfidf-cosine"; }

 private:
  const InvertedIndex* stats_;
};

/// Word vectors in the common text layout: a "<count> <dim>" header line,
/// then "token v1 ... v_dim" per line.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::unordered_map<std::string, std::vector<float>> vectors)
      : dim_(dim), vectors_(std::move(vectors)) {
    if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
    for (const auto& [tok, v] : vectors_) {
      if (v.size() != dim_) throw InvalidArgument("embedding for '" + tok + "' has wrong dimension");
    }
  }

  static EmbeddingTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open embedding file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing '<count> <dim>' header");
    std::istringstream header(line);
    long long count = -1, dim = -1;
    if (!(header >> count >> dim) || count < 0 || dim <= 0) {
      throw ParseError(path, 1, "bad '<count> <dim>' header");
    }
    std::unordered_map<std::string, std::vector<float>> vectors;
    std::size_t line_no = 1;
    long long rows = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream row(line);
      std::string token;
      row >> token;
      std::vector<float> v;
      float x;
      while (row >> x) v.push_back(x);
      if (!row.eof()) throw ParseError(path, line_no, "non-numeric vector component");
      if (v.size() != static_cast<std::size_t>(dim)) {
        throw ParseError(path, line_no, "vector has " + std::to_string(v.size()) + " components, header says " +
                                            std::to_string(dim));
      }
      ++rows;
      auto norm = detail::normalize_token(token);
      if (!norm.empty()) vectors.emplace(std::move(norm), std::move(v));
    }
    if (rows != count) {
      throw ParseError(path, line_no, "header declares " + std::to_string(count) + " vectors, found " +
                                          std::to_string(rows));
    }
    return EmbeddingTable(static_cast<std::size_t>(dim), std::move(vectors));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  const std::vector<float>* find(std::string_view token) const {
    auto it = vectors_.find(std::string(token));
    return it == vectors_.end() ? nullptr : &it->second;
  }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

/// Cosine of mean token vectors; OOV tokens are skipped. 0 when a side has
/// no known tokens.
inline double embedding_avg_score(std::span<const Token> query, std::span<const Token> fact,
                                  const EmbeddingTable& table) {
  auto mean = [&](std::span<const Token> toks, std::vector<double>& out) {
    out.assign(table.dim(), 0.0);
    std::size_t known = 0;
    for (const auto& t : toks) {
      const auto* v = table.find(t);
      if (!v) continue;
      ++known;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
    }
    for (auto& x : out) x /= known ? static_cast<double>(known) : 1.0;
    return known;
  };
  std::vector<double> a, b;
  if (!mean(query, a) || !mean(fact, b)) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

class EmbeddingAvgScorer final : public Scorer {
 public:
  explicit EmbeddingAvgScorer(const EmbeddingTable& table) : table_(&table) {}
  double score(std::span<const Token> query, std::span<const Token> fact) const override {
    return embedding_avg_score(query, fact, *table_);
  }
  std::string name() const override { return "embedding-avg"; }

 private:
  const EmbeddingTable* table_;
};

/// Min-max normalized BM25 used by rerank. A list whose scores are all equal
/// maps every entry to this value.
inline constexpr double kDegenerateNormalizedScore = 0.5;

/// final = alpha * minmax(bm25) + (1 - alpha) * scorer(query.merged_tokens, fact.tokens),
/// sorted desc with fact id as tie-break. Facts themselves are left untouched.
inline std::vector<RankedFact> rerank(std::vector<RankedFact> candidates, const Query& query,
                                      const Scorer& scorer, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("rerank: alpha must be in [0, 1]");
  if (candidates.empty()) return candidates;
  const auto [lo, hi] = std::minmax_element(
      candidates.begin(), candidates.end(),
      [](const RankedFact& a, const RankedFact& b) { return a.score < b.score; });
  const double min = lo->score;
  const double range = hi->score - min;
  for (auto& c : candidates) {
    const double norm = range > 0.0 ? (c.score - min) / range : kDegenerateNormalizedScore;
    c.final_score = alpha * norm + (1.0 - alpha) * scorer.score(query.merged_tokens, c.fact.tokens);
  }
  order_by_final_score(candidates);
  return candidates;
}

}  // namespace hopqa
