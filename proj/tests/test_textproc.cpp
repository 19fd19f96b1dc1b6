#include "hopqa/textproc.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace hopqa {
namespace {

using Tokens = std::vector<std::string>;

TEST(NormalizeAnswer, HandWorkedCases) {
  EXPECT_EQ(normalize_answer("Summerlin, Nevada"), "summerlin nevada");
  EXPECT_EQ(normalize_answer("The Russian Civil War"), "russian civil war");
  EXPECT_EQ(normalize_answer(""), "");
  EXPECT_EQ(normalize_answer("  An   apple,\ta day. "), "apple day");
}

TEST(NormalizeAnswer, ArticlesOnlyAsWholeWords) {
  EXPECT_EQ(normalize_answer("Theatre and anthem"), "theatre and anthem");
  EXPECT_EQ(normalize_answer("a"), "");
}

TEST(NormalizeAnswer, PunctuationInsideWordsJoinsThem) {
  // The official scorer deletes punctuation characters outright.
  EXPECT_EQ(normalize_answer("O'Neil"), "oneil");
  EXPECT_EQ(normalize_answer("1,000"), "1000");
}

TEST(NormalizeAnswer, IsIdempotent) {
  std::mt19937 rng(3);
  const std::string alphabet = "aAnNtThHeE .,;!?'-\t1";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    const std::string once = normalize_answer(s);
    EXPECT_EQ(normalize_answer(once), once) << "input '" << s << "'";
  }
}

TEST(Tokenize, SplitsWordsAndPunctuation) {
  EXPECT_EQ(tokenize("where is bishop gorman high school located?"),
            (Tokens{"where", "is", "bishop", "gorman", "high", "school", "located", "?"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("1957"), Tokens{"1957"});
  EXPECT_EQ(tokenize("Summerlin, Nevada."), (Tokens{"summerlin", ",", "nevada", "."}));
}

TEST(Tokenize, OffsetsPointIntoTheSource) {
  const std::string text = "Fran Drescher (born 1957) is an actress.";
  for (const auto& t : tokenize_with_offsets(text)) {
    std::string surface = text.substr(t.begin, t.end - t.begin);
    for (auto& c : surface) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    EXPECT_EQ(surface, t.text);
  }
}

TEST(Tokenize, KeepsMultibyteCharactersInsideWords) {
  EXPECT_EQ(tokenize("Café Zürich"), (Tokens{"café", "zürich"}));
}

TEST(Tokenize, IsDeterministic) {
  const std::string s = "Who directed The Long Night, and when?";
  EXPECT_EQ(tokenize(s), tokenize(s));
}

TEST(Detokenize, AttachesClosingPunctuation) {
  EXPECT_EQ(detokenize({"where", "is", "it", "?"}), "where is it?");
  EXPECT_EQ(detokenize({"a", ",", "b", "."}), "a, b.");
}

TEST(BuildVocab, EmptyCorporaGiveOnlyReservedTokens) {
  const Vocab v = build_vocab({}, 100);
  EXPECT_EQ(v.size(), Vocab::kNumReserved);
  for (int i = 0; i < Vocab::kNumReserved; ++i) EXPECT_EQ(v.id(Vocab::reserved_tokens()[i]), i);
}

TEST(BuildVocab, RepeatedTokenWithMaxSizeSix) {
  const Vocab v = build_vocab({{"x", "x", "x"}}, 6);
  EXPECT_EQ(v.size(), 6);
  EXPECT_EQ(v.id("x"), Vocab::kNumReserved);
}

TEST(BuildVocab, FrequencyTiesFollowFirstOccurrence) {
  const Vocab v = build_vocab({{"beta", "alpha"}, {"alpha", "beta"}}, 10);
  EXPECT_EQ(v.id("beta"), Vocab::kNumReserved);
  EXPECT_EQ(v.id("alpha"), Vocab::kNumReserved + 1);
}

TEST(BuildVocab, KeepsMostFrequentUpToMaxSize) {
  const Vocab v = build_vocab({{"rare", "common", "common", "mid", "mid", "common"}}, Vocab::kNumReserved + 2);
  EXPECT_EQ(v.size(), Vocab::kNumReserved + 2);
  EXPECT_EQ(v.id("common"), Vocab::kNumReserved);
  EXPECT_EQ(v.id("mid"), Vocab::kNumReserved + 1);
  EXPECT_FALSE(v.contains("rare"));
  EXPECT_EQ(v.id("rare"), Vocab::kUnk);
}

TEST(BuildVocab, RejectsMaxSizeWithinReservedBlock) {
  EXPECT_THROW(build_vocab({{"a"}}, Vocab::kNumReserved), std::invalid_argument);
}

TEST(Vocab, SaveLoadRoundTripPreservesIdsAndFingerprint) {
  const Vocab v = build_vocab({{"where", "is", "summerlin", "?"}}, 50);
  std::stringstream ss;
  v.save(ss);
  EXPECT_EQ(ss.str().front(), '#');
  const Vocab back = Vocab::load(ss);
  ASSERT_EQ(back.size(), v.size());
  for (int i = 0; i < v.size(); ++i) EXPECT_EQ(back.token(i), v.token(i));
  EXPECT_EQ(back.fingerprint(), v.fingerprint());
}

TEST(EncodeSource, AllInVocab) {
  const Vocab v = build_vocab({{"a", "b"}}, 10);
  const EncodedSource s = encode_source({"a", "b", "a"}, v);
  EXPECT_EQ(s.ids, s.extended_ids);
  EXPECT_TRUE(s.oov_list.empty());
}

TEST(EncodeSource, RepeatedOovSharesOneTemporaryId) {
  const Vocab v = build_vocab({{"a"}}, 10);
  const EncodedSource s = encode_source({"zz", "a", "zz"}, v);
  ASSERT_EQ(s.oov_list, Tokens{"zz"});
  EXPECT_EQ(s.extended_ids[0], v.size());
  EXPECT_EQ(s.extended_ids[2], v.size());
  EXPECT_EQ(s.ids[0], Vocab::kUnk);
}

TEST(EncodeSource, DistinctOovsNumberedByFirstAppearance) {
  const Vocab v = build_vocab({{"a"}}, 10);
  const EncodedSource s = encode_source({"q", "a", "p", "q"}, v);
  EXPECT_EQ(s.oov_list, (Tokens{"q", "p"}));
  EXPECT_EQ(s.extended_ids, (std::vector<int>{v.size(), v.id("a"), v.size() + 1, v.size()}));
  EXPECT_EQ(s.extended_size(v), v.size() + 2);
}

TEST(EncodeSource, ExtendedIdsDecodeBackToTheSource) {
  std::mt19937 rng(11);
  const Tokens pool = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const Vocab v = build_vocab({{"a", "b", "c"}}, 10);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens src;
    for (int i = 0, n = static_cast<int>(rng() % 12); i < n; ++i) src.push_back(pool[rng() % pool.size()]);
    const EncodedSource s = encode_source(src, v);
    ASSERT_EQ(s.ids.size(), s.extended_ids.size());
    Tokens back;
    for (int id : s.extended_ids) {
      EXPECT_NE(id, Vocab::kUnk);
      back.push_back(extended_token(id, v, s));
    }
    EXPECT_EQ(back, src);
  }
}

TEST(TargetExtendedId, PrefersVocabThenSourceThenUnk) {
  const Vocab v = build_vocab({{"a"}}, 10);
  const EncodedSource s = encode_source({"zz"}, v);
  EXPECT_EQ(target_extended_id("a", v, s), v.id("a"));
  EXPECT_EQ(target_extended_id("zz", v, s), v.size());
  EXPECT_EQ(target_extended_id("nowhere", v, s), Vocab::kUnk);
}

TEST(Fnv1a, KnownVectors) {
  // Reference values of 64-bit FNV-1a.
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace hopqa
