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
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hopqa/corpus.hpp"
#include "hopqa/error.hpp"
#include "hopqa/text.hpp"

namespace hopqa {

/// Okapi BM25 free parameters. Defaults match Lucene/Elasticsearch.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

// BM25 similarity
//   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//   tfnorm(t,d) = tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//   score(q,d)  = sum over query terms t (with repetition) of idf(t) * tfnorm(t,d)
inline double bm25_idf(std::uint64_t doc_count, std::uint64_t doc_freq) noexcept {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

inline double bm25_tf_norm(std::uint32_t tf, std::uint32_t doc_len, double avg_doc_len,
                           const Bm25Params& p) noexcept {
  const double f = static_cast<double>(tf);
  const double rel_len = avg_doc_len > 0.0 ? static_cast<double>(doc_len) / avg_doc_len : 0.0;
  return f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * rel_len));
}

struct Posting {
  DocId doc = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

using PostingList = std::vector<Posting>;

/// Immutable inverted index with term frequencies and document lengths.
/// Terms are kept in lexicographic order; posting lists ascend by doc id.
class InvertedIndex {
 public:
  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

  /// Raw components, as produced by the builder or read from disk.
  struct Parts {
    std::vector<std::string> terms;          // strictly ascending
    std::vector<PostingList> postings;       // parallel to terms
    std::vector<std::uint32_t> doc_lengths;  // indexed by doc id, kAbsent for gaps
    Bm25Params params;
  };

  InvertedIndex() = default;

  /// Validates every structural invariant and throws IndexFormatError naming
  /// the offending section on the first violation.
  static InvertedIndex from_parts(Parts parts) {
    if (parts.terms.size() != parts.postings.size()) {
      throw IndexFormatError("terms", "term count does not match posting list count");
    }
    InvertedIndex idx;
    idx.params_ = parts.params;
    std::uint64_t total = 0;
    std::uint64_t n = 0;
    for (auto len : parts.doc_lengths) {
      if (len == kAbsent) continue;
      ++n;
      total += len;
    }
    for (std::size_t t = 0; t < parts.terms.size(); ++t) {
      if (parts.terms[t].empty()) throw IndexFormatError("terms", "empty term");
      if (t > 0 && !(parts.terms[t - 1] < parts.terms[t])) {
        throw IndexFormatError("terms", "dictionary not strictly sorted at '" + parts.terms[t] + "'");
      }
      const auto& list = parts.postings[t];
      if (list.empty()) throw IndexFormatError("postings", "empty posting list for '" + parts.terms[t] + "'");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& p = list[i];
        if (i > 0 && list[i - 1].doc >= p.doc) {
          throw IndexFormatError("postings", "doc ids not ascending for '" + parts.terms[t] + "'");
        }
        if (p.doc >= parts.doc_lengths.size() || parts.doc_lengths[p.doc] == kAbsent) {
          throw IndexFormatError("postings", "posting references unknown doc " + std::to_string(p.doc));
        }
        if (p.tf < 1 || p.tf > parts.doc_lengths[p.doc]) {
          throw IndexFormatError("postings", "term frequency out of range for doc " + std::to_string(p.doc));
        }
      }
    }
    idx.term_ids_.reserve(parts.terms.size());
    for (std::size_t t = 0; t < parts.terms.size(); ++t) {
      idx.term_ids_.emplace(parts.terms[t], static_cast<std::uint32_t>(t));
    }
    idx.terms_ = std::move(parts.terms);
    idx.postings_ = std::move(parts.postings);
    idx.doc_lengths_ = std::move(parts.doc_lengths);
    idx.doc_count_ = n;
    idx.total_len_ = total;
    idx.avg_doc_len_ = n ? static_cast<double>(total) / static_cast<double>(n) : 0.0;
    return idx;
  }

  std::uint64_t doc_count() const noexcept { return doc_count_; }
  std::uint64_t total_length() const noexcept { return total_len_; }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  /// Size of the doc id space (max id + 1); equals doc_count() for dense ids.
  std::size_t id_space() const noexcept { return doc_lengths_.size(); }

  std::span<const std::string> terms() const noexcept { return terms_; }
  std::span<const PostingList> all_postings() const noexcept { return postings_; }
  std::span<const std::uint32_t> raw_doc_lengths() const noexcept { return doc_lengths_; }

  bool contains_doc(DocId doc) const noexcept {
    return doc < doc_lengths_.size() && doc_lengths_[doc] != kAbsent;
  }

  std::uint32_t doc_length(DocId doc) const {
    if (!contains_doc(doc)) throw InvalidArgument("unknown doc id " + std::to_string(doc));
    return doc_lengths_[doc];
  }

  /// Posting list for term, or nullptr when the term is not indexed.
  const PostingList* postings(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    return it == term_ids_.end() ? nullptr : &postings_[it->second];
  }

  std::uint64_t doc_freq(std::string_view term) const {
    const auto* p = postings(term);
    return p ? p->size() : 0;
  }

  std::uint32_t term_freq(std::string_view term, DocId doc) const {
    const auto* list = postings(term);
    if (!list) return 0;
    auto it = std::lower_bound(list->begin(), list->end(), doc,
                               [](const Posting& p, DocId d) { return p.doc < d; });
    return it != list->end() && it->doc == doc ? it->tf : 0;
  }

  double idf(std::string_view term) const { return bm25_idf(doc_count_, doc_freq(term)); }

 private:
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::vector<std::string> terms_;
  std::vector<PostingList> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::uint64_t doc_count_ = 0;
  std::uint64_t total_len_ = 0;
  double avg_doc_len_ = 0.0;
  Bm25Params params_;
};

/// Single-pass index construction. Facts may arrive in any id order.
class IndexBuilder {
 public:
  explicit IndexBuilder(Bm25Params params = {}) : params_(params) {}

  void add(DocId doc, std::span<const Token> tokens) {
    if (doc < doc_lengths_.size() && doc_lengths_[doc] != InvertedIndex::kAbsent) {
      throw BuildError("duplicate doc id " + std::to_string(doc) + " in fact stream");
    }
    if (tokens.size() >= InvertedIndex::kAbsent) throw BuildError("document too long");
    if (doc >= doc_lengths_.size()) doc_lengths_.resize(std::size_t{doc} + 1, InvertedIndex::kAbsent);
    doc_lengths_[doc] = static_cast<std::uint32_t>(tokens.size());
    if (doc < last_doc_) sorted_ = false;
    last_doc_ = doc;

    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) {
      auto it = term_ids_.find(std::string(term));
      if (it == term_ids_.end()) {
        it = term_ids_.emplace(std::string(term), static_cast<std::uint32_t>(terms_.size())).first;
        terms_.emplace_back(term);
        postings_.emplace_back();
      }
      postings_[it->second].push_back({doc, tf});
    }
  }

  void add(const FactSentence& fact) { add(fact.id, fact.tokens); }

  InvertedIndex finish() && {
    std::vector<std::uint32_t> order(terms_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return terms_[a] < terms_[b]; });
    InvertedIndex::Parts parts;
    parts.params = params_;
    parts.terms.reserve(order.size());
    parts.postings.reserve(order.size());
    for (auto t : order) {
      parts.terms.push_back(std::move(terms_[t]));
      auto& list = postings_[t];
      if (!sorted_) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
      }
      parts.postings.push_back(std::move(list));
    }
    parts.doc_lengths = std::move(doc_lengths_);
    return InvertedIndex::from_parts(std::move(parts));
  }

 private:
  Bm25Params params_;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::vector<std::string> terms_;
  std::vector<PostingList> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  DocId last_doc_ = 0;
  bool sorted_ = true;
};

template <typename FactRange>
InvertedIndex build_index(FactRange&& facts, Bm25Params params = {}) {
  IndexBuilder builder(params);
  for (const auto& f : facts) builder.add(f);
  return std::move(builder).finish();
}

/// BM25 score of one document. Throws InvalidArgument for an unknown doc id.
inline double bm25_score(const InvertedIndex& index, std::span<const Token> query_terms, DocId doc) {
  const auto len = index.doc_length(doc);
  double score = 0.0;
  for (const auto& term : query_terms) {
    const auto tf = index.term_freq(term, doc);
    if (tf == 0) continue;
    score += index.idf(term) * bm25_tf_norm(tf, len, index.avg_doc_len(), index.params());
  }
  return score;
}

struct SearchHit {
  DocId doc_id = 0;
  double score = 0.0;
  TokenSet matched_terms;
};

/// (score desc, doc id asc)
inline bool hit_precedes(double sa, DocId da, double sb, DocId db) noexcept {
  return sa != sb ? sa > sb : da < db;
}

/// Exact top-k by BM25 over full posting traversal. Only hits with a
/// positive score are returned.
inline std::vector<SearchHit> search_topk(const InvertedIndex& index,
                                          std::span<const Token> query_terms, std::size_t k) {
  if (k == 0) throw InvalidArgument("search_topk: k must be >= 1");
  std::unordered_map<DocId, double> acc;
  for (const auto& term : query_terms) {
    const auto* list = index.postings(term);
    if (!list) continue;
    const double idf = bm25_idf(index.doc_count(), list->size());
    for (const auto& p : *list) {
      acc[p.doc] += idf * bm25_tf_norm(p.tf, index.raw_doc_lengths()[p.doc], index.avg_doc_len(),
                                       index.params());
    }
  }

  using Entry = std::pair<double, DocId>;
  // Heap top is the currently weakest retained hit.
  auto weaker = [](const Entry& a, const Entry& b) {
    return hit_precedes(a.first, a.second, b.first, b.second);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(weaker)> heap(weaker);
  for (const auto& [doc, score] : acc) {
    if (!(score > 0.0)) continue;
    if (heap.size() < k) {
      heap.emplace(score, doc);
    } else if (hit_precedes(score, doc, heap.top().first, heap.top().second)) {
      heap.pop();
      heap.emplace(score, doc);
    }
  }

  std::vector<SearchHit> hits(heap.size());
  for (auto i = hits.size(); i-- > 0;) {
    hits[i].score = heap.top().first;
    hits[i].doc_id = heap.top().second;
    heap.pop();
  }
  for (auto& h : hits) {
    for (const auto& term : query_terms) {
      if (index.term_freq(term, h.doc_id) > 0) h.matched_terms.insert(term);
    }
  }
  return hits;
}

/// Raw sentence text by doc id, kept alongside the index so retrieval can
/// return full facts. Tokens and entities are rebuilt on access.
class FactStore {
 public:
  void put(DocId id, std::string text) {
    if (id >= texts_.size()) texts_.resize(std::size_t{id} + 1);
    texts_[id] = std::move(text);
  }
  const std::string& text(DocId id) const {
    if (id >= texts_.size()) throw InvalidArgument("unknown fact id " + std::to_string(id));
    return texts_[id];
  }
  std::size_t size() const noexcept { return texts_.size(); }
  std::span<const std::string> texts() const noexcept { return texts_; }

 private:
  std::vector<std::string> texts_;
};

/// Index, sentence store and entity extractor: everything retrieval needs.
struct Collection {
  InvertedIndex index;
  FactStore facts;
  std::shared_ptr<const EntityExtractor> extractor = std::make_shared<ContentTokenExtractor>();

  FactSentence fact(DocId id) const {
    if (!index.contains_doc(id)) throw InvalidArgument("unknown fact id " + std::to_string(id));
    return make_fact(id, facts.text(id), *extractor);
  }
};

/// Builds index and fact store in one pass over a fact range.
template <typename FactRange>
Collection build_collection(FactRange&& facts, Bm25Params params = {},
                            std::shared_ptr<const EntityExtractor> extractor = nullptr) {
  Collection c;
  if (extractor) c.extractor = std::move(extractor);
  IndexBuilder builder(params);
  for (const auto& f : facts) {
    builder.add(f);
    c.facts.put(f.id, f.text);
  }
  c.index = std::move(builder).finish();
  return c;
}

/// Streams a corpus file into a collection. Returns the malformed-line count
/// through the optional out parameter.
inline Collection build_collection_from_file(const std::string& corpus_path, Bm25Params params = {},
                                             std::shared_ptr<const EntityExtractor> extractor = nullptr,
                                             std::size_t* malformed = nullptr) {
  Collection c;
  if (extractor) c.extractor = std::move(extractor);
  IndexBuilder builder(params);
  const auto bad = for_each_fact(corpus_path, *c.extractor, [&](FactSentence&& f) {
    builder.add(f);
    c.facts.put(f.id, std::move(f.text));
  });
  if (malformed) *malformed = bad;
  c.index = std::move(builder).finish();
  return c;
}

}  // namespace hopqa
