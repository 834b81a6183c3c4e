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
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hopqa/error.hpp"

namespace hopqa {

using Token = std::string;
using TokenList = std::vector<Token>;
/// Ordered so that iteration (and everything derived from it) is deterministic.
using TokenSet = std::set<Token, std::less<>>;

namespace detail {

// Decodes one code point starting at s[i]. Returns the code point and its
// byte length; invalid sequences decode as a single byte with cp = -1.
struct Decoded {
  std::int32_t cp;
  std::size_t len;
};

inline Decoded decode_utf8(std::string_view s, std::size_t i) noexcept {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  std::int32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {-1, 1};
  }
  if (i + len > s.size()) return {-1, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) return {-1, 1};
    cp = (cp << 6) | (bk & 0x3F);
  }
  // Overlong forms, surrogates and out-of-range values are invalid.
  static constexpr std::array<std::int32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {-1, 1};
  return {cp, len};
}

inline bool is_unicode_space(std::int32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_punct(std::int32_t cp) noexcept {
  if (cp >= 0 && cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015:
    case 0x2018: case 0x2019: case 0x201A: case 0x201C: case 0x201D: case 0x201E:
    case 0x2022: case 0x2026: case 0x2032: case 0x2033:
      return true;
    default:
      return false;
  }
}

// Lowercases ASCII and strips leading/trailing punctuation code points.
inline std::string normalize_token(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end) {
    const auto d = decode_utf8(raw, begin);
    if (!is_punct(d.cp)) break;
    begin += d.len;
  }
  while (end > begin) {
    // Walk back to the start of the last code point.
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(raw[start]) & 0xC0) == 0x80 &&
           end - start < 4) {
      --start;
    }
    const auto d = decode_utf8(raw, start);
    if (start + d.len != end) {
      // Truncated or invalid tail: the final byte stands alone.
      start = end - 1;
      if (!is_punct(decode_utf8(raw, start).cp)) break;
    } else if (!is_punct(d.cp)) {
      break;
    }
    end = start;
  }
  std::string out(raw.substr(begin, end - begin));
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace detail

/// Splits on Unicode whitespace, lowercases ASCII letters and strips
/// punctuation from both ends of every token. Empty tokens are dropped.
/// No stemming: "objects" and "object" are different tokens.
inline TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (end > start) {
      auto tok = detail::normalize_token(text.substr(start, end - start));
      if (!tok.empty()) tokens.push_back(std::move(tok));
    }
  };
  while (i < text.size()) {
    const auto d = detail::decode_utf8(text, i);
    if (detail::is_unicode_space(d.cp)) {
      flush(i);
      i += d.len;
      start = i;
    } else {
      i += d.len;
    }
  }
  flush(text.size());
  return tokens;
}

inline std::string join(std::span<const Token> tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

/// Canonical form used for exact text comparisons (gold facts, dedup).
inline std::string normalize_text(std::string_view text) { return join(tokenize(text)); }

/// True when the whole string is well-formed UTF-8.
inline bool is_valid_utf8(std::string_view s) noexcept {
  for (std::size_t i = 0; i < s.size();) {
    const auto d = detail::decode_utf8(s, i);
    if (d.cp < 0) return false;
    i += d.len;
  }
  return true;
}

class Stoplist {
 public:
  Stoplist() = default;
  Stoplist(std::initializer_list<std::string_view> words) {
    for (auto w : words) words_.emplace(w);
  }

  /// The English function-word list shipped with the library (data/stopwords.txt).
  static const Stoplist& english();

  /// One token per line; blank lines and lines starting with '#' are ignored.
  /// Entries pass through the tokenizer so they compare equal to corpus tokens.
  static Stoplist from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open stoplist");
    Stoplist list;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() == '#') continue;
      for (auto& tok : tokenize(line)) list.words_.insert(std::move(tok));
    }
    return list;
  }

  bool contains(std::string_view token) const {
    return words_.find(std::string(token)) != words_.end();
  }
  std::size_t size() const noexcept { return words_.size(); }

  Stoplist& merge(const Stoplist& other) {
    words_.insert(other.words_.begin(), other.words_.end());
    return *this;
  }

 private:
  std::unordered_set<std::string> words_;
};

inline const Stoplist& Stoplist::english() {
  static const Stoplist list{
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
      "down", "during", "each", "either", "else", "ever", "few", "for", "from",
      "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it",
      "its", "itself", "just", "may", "me", "might", "more", "most", "much", "must",
      "my", "myself", "neither", "no", "nor", "not", "now", "of", "off", "often", "on",
      "once", "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over",
      "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "thus", "to", "too", "under", "until", "up", "upon",
      "us", "very", "was", "we", "were", "what", "when", "where", "whether", "which",
      "while", "who", "whom", "whose", "why", "will", "with", "within", "without",
      "would", "yet", "you", "your", "yours", "yourself", "yourselves", "also",
      "although", "another", "among", "around", "cannot", "etc", "however",
      "many", "onto", "per", "rather", "since", "toward", "towards", "via"};
  return list;
}

/// Content tokens: set(tokens) minus stopwords.
inline TokenSet extract_entities(std::span<const Token> tokens, const Stoplist& stopwords) {
  TokenSet out;
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.insert(t);
  }
  return out;
}

/// Entity extraction strategy. The shipped implementation keeps content
/// tokens; a phrase chunker or NER tagger can be slotted in instead.
class EntityExtractor {
 public:
  virtual ~EntityExtractor() = default;
  virtual TokenSet extract(std::span<const Token> tokens) const = 0;
};

class ContentTokenExtractor final : public EntityExtractor {
 public:
  explicit ContentTokenExtractor(Stoplist stopwords = Stoplist::english())
      : stopwords_(std::move(stopwords)) {}

  TokenSet extract(std::span<const Token> tokens) const override {
    return extract_entities(tokens, stopwords_);
  }
  const Stoplist& stopwords() const noexcept { return stopwords_; }

 private:
  Stoplist stopwords_;
};

}  // namespace hopqa
