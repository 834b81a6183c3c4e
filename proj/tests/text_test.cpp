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

#include <random>

#include "hopqa/text.hpp"
#include "support/synth.hpp"

namespace {

using hopqa::Stoplist;
using hopqa::TokenList;
using hopqa::TokenSet;
using hopqa::tokenize;

TEST(Tokenize, CaseStudySentence) {
  EXPECT_EQ(tokenize("Propulsion means to push forward or drive an object forward"),
            (TokenList{"propulsion", "means", "to", "push", "forward", "or", "drive", "an", "object", "forward"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, StripsEdgePunctuationOnly) {
  EXPECT_EQ(tokenize("Sand-paper, (used)!"), (TokenList{"sand-paper", "used"}));
}

TEST(Tokenize, DropsPunctuationOnlyTokens) {
  EXPECT_EQ(tokenize("a -- b ... ,"), (TokenList{"a", "b"}));
}

TEST(Tokenize, UnicodeWhitespaceAndQuotes) {
  // ideographic space, curly quotes, em dash
  EXPECT_EQ(tokenize("“Wooden objects”　decoupage—"),
            (TokenList{"wooden", "objects", "decoupage"}));
  EXPECT_EQ(tokenize("line\r\nnext\ttab"), (TokenList{"line", "next", "tab"}));
}

TEST(Tokenize, NonAsciiLettersKept) {
  EXPECT_EQ(tokenize("Café naïve"), (TokenList{"café", "naïve"}));
}

TEST(Tokenize, InvalidUtf8DoesNotThrow) {
  const std::string bad = "ok \xff\xfe bytes";
  EXPECT_NO_THROW(tokenize(bad));
  EXPECT_EQ(tokenize(bad).front(), "ok");
}

TEST(Tokenize, IdempotentUnderRejoin) {
  synth::Rng rng(7);
  const std::string alphabet = "abcXYZ-.,!?()'\" \t ";
  for (int round = 0; round < 2000; ++round) {
    std::string s;
    const auto n = synth::uniform(rng, 0, 30);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[synth::uniform(rng, 0, alphabet.size() - 1)];
    const auto once = tokenize(s);
    EXPECT_EQ(tokenize(hopqa::join(once)), once) << "input: " << s;
  }
}

TEST(Tokenize, Deterministic) {
  const std::string s = "Traditionally, wooden objects are used in decoupage";
  EXPECT_EQ(tokenize(s), tokenize(s));
}

TEST(Entities, ShippedStoplist) {
  const TokenList toks = {"sandpaper", "is", "used", "to", "smooth", "wooden", "objects"};
  EXPECT_EQ(hopqa::extract_entities(toks, Stoplist::english()),
            (TokenSet{"sandpaper", "used", "smooth", "wooden", "objects"}));
}

TEST(Entities, EmptyAndAllStopwords) {
  EXPECT_TRUE(hopqa::extract_entities(TokenList{}, Stoplist::english()).empty());
  const Stoplist s{"the", "a", "of"};
  EXPECT_TRUE(hopqa::extract_entities(TokenList{"the", "a", "of"}, s).empty());
}

TEST(Entities, SubsetOfTokens) {
  synth::Rng rng(11);
  for (int round = 0; round < 500; ++round) {
    const auto toks = synth::sentence(rng, 0, 12, 20);
    const auto ents = hopqa::extract_entities(toks, Stoplist::english());
    const TokenSet all(toks.begin(), toks.end());
    EXPECT_TRUE(std::includes(all.begin(), all.end(), ents.begin(), ents.end()));
  }
}

TEST(Entities, LargerStoplistGivesSubset) {
  synth::Rng rng(12);
  for (int round = 0; round < 500; ++round) {
    const auto toks = synth::sentence(rng, 0, 12, 10);
    Stoplist s1, s2;
    for (int i = 0; i < 4; ++i) {
      s1.merge(Stoplist{synth::word(rng, 10)});
      s2.merge(Stoplist{synth::word(rng, 10)});
    }
    Stoplist both = s1;
    both.merge(s2);
    const auto small = hopqa::extract_entities(toks, both);
    const auto large = hopqa::extract_entities(toks, s1);
    EXPECT_TRUE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
  }
}

TEST(Stoplist, ShippedFileMatchesBuiltIn) {
  const auto file = Stoplist::from_file(HOPQA_SOURCE_DIR "/data/stopwords.txt");
  EXPECT_EQ(file.size(), Stoplist::english().size());
  EXPECT_GE(file.size(), 140u);
  for (const char* w : {"the", "is", "what", "to", "are", "in"}) EXPECT_TRUE(file.contains(w)) << w;
  for (const char* w : {"used", "smooth", "sandpaper", "decoupage", "wooden", "objects"}) {
    EXPECT_FALSE(file.contains(w)) << w;
  }
}

TEST(Stoplist, MissingFileThrows) {
  EXPECT_THROW(Stoplist::from_file("/nonexistent/stop.txt"), hopqa::IoError);
}

TEST(Text, NormalizeText) {
  EXPECT_EQ(hopqa::normalize_text(" Traditionally,  wooden objects are used in decoupage. "),
            "traditionally wooden objects are used in decoupage");
}

}  // namespace
