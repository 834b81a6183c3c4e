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

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hopqa/error.hpp"
#include "hopqa/text.hpp"

namespace hopqa {

using DocId = std::uint32_t;

struct FactSentence {
  DocId id = 0;
  std::string text;
  TokenList tokens;
  TokenSet entities;
};

inline FactSentence make_fact(DocId id, std::string text, const EntityExtractor& extractor) {
  FactSentence f;
  f.id = id;
  f.text = std::move(text);
  f.tokens = tokenize(f.text);
  f.entities = extractor.extract(f.tokens);
  return f;
}

/// Question stem paired with one answer choice (Q = q + a).
struct Query {
  std::string question_id;
  std::string choice_label;
  TokenList question_tokens;
  TokenList choice_tokens;
  TokenList merged_tokens;
  TokenSet entities;
  TokenSet choice_entities;
};

inline Query make_query(std::string_view stem, std::string_view choice,
                        const EntityExtractor& extractor, std::string question_id = {},
                        std::string choice_label = {}) {
  Query q;
  q.question_id = std::move(question_id);
  q.choice_label = std::move(choice_label);
  q.question_tokens = tokenize(stem);
  q.choice_tokens = tokenize(choice);
  q.merged_tokens = q.question_tokens;
  q.merged_tokens.insert(q.merged_tokens.end(), q.choice_tokens.begin(), q.choice_tokens.end());
  q.entities = extractor.extract(q.merged_tokens);
  q.choice_entities = extractor.extract(q.choice_tokens);
  return q;
}

inline constexpr std::size_t kChoicesPerQuestion = 8;

struct Choice {
  std::string label;
  std::string text;
};

struct QuestionRecord {
  std::string id;
  std::string stem;
  std::vector<Choice> choices;
  std::optional<std::string> answer_key;
  std::optional<std::string> gold_fact1;
  std::optional<std::string> gold_fact2;

  const Choice* find_choice(std::string_view label) const {
    for (const auto& c : choices) {
      if (c.label == label) return &c;
    }
    return nullptr;
  }
};

inline Query make_query(const QuestionRecord& rec, const Choice& choice,
                        const EntityExtractor& extractor) {
  return make_query(rec.stem, choice.text, extractor, rec.id, choice.label);
}

/// Streams one FactSentence per non-blank line. Only the current line is held
/// in memory. Lines that are not valid UTF-8 are skipped and counted; they do
/// not consume an id, so ids stay dense.
class CorpusReader {
 public:
  CorpusReader(std::string path, const EntityExtractor& extractor)
      : path_(std::move(path)), in_(path_, std::ios::binary), extractor_(&extractor) {
    if (!in_) throw IoError(path_, "cannot open corpus");
  }

  /// Next fact, or nullopt at end of file.
  std::optional<FactSentence> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t\v\f");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\v\f");
      if (!is_valid_utf8(line)) {
        ++malformed_;
        continue;
      }
      return make_fact(next_id_++, line.substr(first, last - first + 1), *extractor_);
    }
    if (in_.bad()) throw IoError(path_, "read error at line " + std::to_string(line_no_));
    return std::nullopt;
  }

  /// Number of lines skipped because they were not valid UTF-8.
  std::size_t malformed_lines() const noexcept { return malformed_; }
  std::size_t lines_read() const noexcept { return line_no_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  const EntityExtractor* extractor_;
  DocId next_id_ = 0;
  std::size_t line_no_ = 0;
  std::size_t malformed_ = 0;
};

/// Calls fn(FactSentence&&) for every fact in the file.
template <typename Fn>
std::size_t for_each_fact(const std::string& path, const EntityExtractor& extractor, Fn&& fn) {
  CorpusReader reader(path, extractor);
  while (auto f = reader.next()) fn(std::move(*f));
  return reader.malformed_lines();
}

/// A question line that parsed as JSON but violates the record schema.
struct RecordError {
  std::size_t line = 0;
  std::string id;
  std::string message;
};

struct QuestionSet {
  std::vector<QuestionRecord> records;
  std::vector<RecordError> errors;
};

namespace detail {

inline std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string("'") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace detail

/// Parses one QASC-layout JSON object. Throws std::invalid_argument with a
/// message on schema violations.
inline QuestionRecord parse_question(const nlohmann::json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
  QuestionRecord rec;
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) throw std::invalid_argument("missing string 'id'");
  rec.id = id->get<std::string>();
  auto q = obj.find("question");
  if (q == obj.end() || !q->is_object()) throw std::invalid_argument("missing object 'question'");
  auto stem = q->find("stem");
  if (stem == q->end() || !stem->is_string()) throw std::invalid_argument("missing 'question.stem'");
  rec.stem = stem->get<std::string>();
  auto choices = q->find("choices");
  if (choices == q->end() || !choices->is_array()) {
    throw std::invalid_argument("missing array 'question.choices'");
  }
  std::set<std::string> labels;
  for (const auto& c : *choices) {
    if (!c.is_object() || !c.contains("label") || !c.contains("text") ||
        !c["label"].is_string() || !c["text"].is_string()) {
      throw std::invalid_argument("choice without string 'label' and 'text'");
    }
    rec.choices.push_back({c["label"].get<std::string>(), c["text"].get<std::string>()});
    labels.insert(rec.choices.back().label);
  }
  if (rec.choices.size() != kChoicesPerQuestion) {
    throw std::invalid_argument("expected 8 choices, found " + std::to_string(rec.choices.size()));
  }
  if (labels.size() != kChoicesPerQuestion) throw std::invalid_argument("duplicate choice labels");
  rec.answer_key = detail::optional_string(obj, "answerKey");
  if (rec.answer_key && !labels.contains(*rec.answer_key)) {
    throw std::invalid_argument("answerKey '" + *rec.answer_key + "' is not a choice label");
  }
  rec.gold_fact1 = detail::optional_string(obj, "fact1");
  rec.gold_fact2 = detail::optional_string(obj, "fact2");
  return rec;
}

/// Loads a JSON-Lines question file. Malformed JSON aborts with the line
/// number; schema violations are collected per record and the line skipped.
inline QuestionSet load_questions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open questions file");
  QuestionSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      out.records.push_back(parse_question(obj));
    } catch (const std::invalid_argument& e) {
      std::string id;
      if (obj.is_object() && obj.contains("id") && obj["id"].is_string()) id = obj["id"];
      out.errors.push_back({line_no, id, e.what()});
    }
  }
  return out;
}

}  // namespace hopqa
