#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "simulst/quality_metrics.hpp"

using namespace simulst;

namespace {

std::vector<std::string> W(const std::string& s) { return text::split_whitespace(s); }

std::vector<std::string> random_sentence(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(0, max_len), sym(0, vocab - 1);
  std::vector<std::string> out(len(rng));
  for (auto& w : out) w = "w" + std::to_string(sym(rng));
  return out;
}

}  // namespace

TEST(EditAlignment, Examples) {
  const auto id = align_words(W("a b c"), W("a b c"));
  EXPECT_EQ(id.substitutions + id.insertions + id.deletions, 0u);

  const auto a = align_words(W("a b c d"), W("a x c"));
  EXPECT_EQ(a.substitutions, 1u);
  EXPECT_EQ(a.deletions, 1u);
  EXPECT_EQ(a.insertions, 0u);

  const auto ins = align_words({}, W("a"));
  EXPECT_EQ(ins.insertions, 1u);
  EXPECT_EQ(ins.reference_length, 0u);
}

TEST(EditAlignment, TraceAccountsForEveryToken) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto r = random_sentence(rng, 10, 4), h = random_sentence(rng, 10, 4);
    const auto a = align_words(r, h);
    std::size_t ref_used = 0, hyp_used = 0;
    for (auto op : a.op_trace) {
      if (op != EditOp::ins) ++ref_used;
      if (op != EditOp::del) ++hyp_used;
    }
    EXPECT_EQ(ref_used, r.size());
    EXPECT_EQ(hyp_used, h.size());
    EXPECT_EQ(a.errors(), oracle::edit_distance(r, h));
  }
}

TEST(Wer, Examples) {
  EXPECT_DOUBLE_EQ(wer(W("a b c"), W("a b c")), 0.0);
  EXPECT_DOUBLE_EQ(wer(W("a b c d"), W("a x c")), 0.5);
  EXPECT_DOUBLE_EQ(wer(W("a"), W("x y z")), 3.0);
  EXPECT_THROW(wer({}, W("a")), ArgumentError);
}

TEST(Cer, Examples) {
  EXPECT_DOUBLE_EQ(cer("same text", "same text"), 0.0);
  EXPECT_NEAR(cer("abc", "abd"), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(cer("ab", ""), 1.0);
  EXPECT_DOUBLE_EQ(cer("Hello, World!", "hello world"), 0.0);
  EXPECT_GT(cer("Hello, World!", "hello world", false), 0.0);
}

TEST(Bleu, Examples) {
  EXPECT_DOUBLE_EQ(bleu(W("the cat sat on the mat"), W("the cat sat on the mat")), 1.0);
  EXPECT_DOUBLE_EQ(bleu(W("the cat"), W("the the the")), 0.0);
  EXPECT_NEAR(bleu(W("a b c d"), W("a b c"), 3), std::exp(1.0 - 4.0 / 3.0), 1e-12);
  EXPECT_NEAR(bleu(W("a b c d"), W("a b c"), 3), 0.7165, 1e-4);
  EXPECT_DOUBLE_EQ(bleu(W("a b"), {}), 0.0);
  EXPECT_THROW(bleu({}, W("a")), ArgumentError);
}

TEST(Bleu, ClippedUnigramPrecision) {
  const auto s = ngram_stats(ngram_counts(W("the cat"), W("the the the")));
  EXPECT_NEAR(s.precisions[0], 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.precisions[1], 0.0);
}

TEST(Bleu, MatchesOracleAndCorpusPooling) {
  std::mt19937_64 rng(31);
  NGramCounts pooled;
  std::vector<std::string> all_ref, all_hyp;
  for (int i = 0; i < 400; ++i) {
    auto r = random_sentence(rng, 12, 3), h = random_sentence(rng, 12, 3);
    if (r.empty()) r.push_back("w0");
    EXPECT_NEAR(bleu(r, h), oracle::bleu(r, h), 1e-12);
    if (r.size() >= 4) {
      EXPECT_NEAR(bleu(r, r), 1.0, 1e-12);
    }
    if (i < 20) {
      pooled += ngram_counts(r, h);
      const auto c = ngram_counts(r, h);
      (void)c;
    }
  }
  // Pooling is count addition, not a mean of sentence scores.
  const auto a = ngram_counts(W("a b c d"), W("a b c d"));
  const auto b = ngram_counts(W("x y z w"), W("q r s t"));
  NGramCounts sum = a;
  sum += b;
  EXPECT_EQ(sum.matches[0], 4u);
  EXPECT_EQ(sum.totals[0], 8u);
  EXPECT_GT(bleu_from_counts(sum), 0.0);
  EXPECT_THROW(sum += NGramCounts(3), ArgumentError);
}

TEST(Bleu, ShufflingNeverRaisesBigramPrecision) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    auto r = random_sentence(rng, 10, 4);
    if (r.size() < 2) continue;
    auto h = r;
    const double p2 = ngram_stats(ngram_counts(r, h)).precisions[1];
    std::shuffle(h.begin(), h.end(), rng);
    EXPECT_LE(ngram_stats(ngram_counts(r, h)).precisions[1], p2 + 1e-12);
  }
}

TEST(LexicalSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(lexical_similarity("abc", "abc", LexicalMeasure::jaro_winkler), 1.0);
  EXPECT_DOUBLE_EQ(lexical_similarity("abc", "abc", LexicalMeasure::levenshtein_norm), 1.0);
  EXPECT_NEAR(lexical_similarity("MARTHA", "MARHTA", LexicalMeasure::jaro_winkler), 0.9611, 1e-4);
  EXPECT_DOUBLE_EQ(lexical_similarity("ab", "", LexicalMeasure::levenshtein_norm), 0.0);
}

TEST(LexicalSimilarity, MatchesTextbookOracles) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(0, 9), ch(0, 4);
  for (int i = 0; i < 2000; ++i) {
    std::string a(static_cast<std::size_t>(len(rng)), 'a'), b(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : a) c = static_cast<char>('a' + ch(rng));
    for (auto& c : b) c = static_cast<char>('a' + ch(rng));
    EXPECT_NEAR(lexical_similarity(a, b, LexicalMeasure::jaro_winkler), oracle::jaro_winkler(a, b), 1e-12) << a << " / " << b;
    EXPECT_NEAR(lexical_similarity(a, b, LexicalMeasure::levenshtein_norm), oracle::levenshtein_similarity(a, b), 1e-12);
  }
}

TEST(ProperNounScore, Examples) {
  const auto fin = proper_noun_score({"FinTech Star"}, W("A FinTech Star."), LexicalMeasure::jaro_winkler);
  EXPECT_NEAR(fin.score, 1.0, 1e-12);

  const auto alice = proper_noun_score({"Alice"}, W("bob went home"), LexicalMeasure::jaro_winkler);
  double best = 0;
  for (const auto& w : W("bob went home")) best = std::max(best, oracle::jaro_winkler("alice", w));
  EXPECT_NEAR(alice.score, best, 1e-12);
  EXPECT_LT(alice.score, 0.6);

  EXPECT_DOUBLE_EQ(proper_noun_score({"x"}, W("x"), LexicalMeasure::levenshtein_norm).score, 1.0);
  EXPECT_THROW(proper_noun_score({}, W("x"), LexicalMeasure::jaro_winkler), ArgumentError);
}

TEST(ProperNounScore, MeanAndRawSum) {
  const auto s = proper_noun_score({"Alice", "Bob"}, W("alice met carol"), LexicalMeasure::levenshtein_norm);
  ASSERT_EQ(s.per_noun.size(), 2u);
  EXPECT_DOUBLE_EQ(s.per_noun[0], 1.0);
  EXPECT_NEAR(s.raw_max_sum, s.per_noun[0] + s.per_noun[1], 1e-12);
  EXPECT_NEAR(s.score, s.raw_max_sum / 2, 1e-12);
}

TEST(ProperNounScore, AppendingANounNeverHurts) {
  std::mt19937_64 rng(10);
  const std::vector<std::string> nouns{"FinTech Star", "Alice", "New York"};
  for (int i = 0; i < 300; ++i) {
    auto out = random_sentence(rng, 8, 6);
    for (const auto& n : nouns) {
      const double before = proper_noun_score(nouns, out, LexicalMeasure::jaro_winkler).score;
      auto extended = out;
      for (const auto& w : W(n)) extended.push_back(w);
      EXPECT_GE(proper_noun_score(nouns, extended, LexicalMeasure::jaro_winkler).score, before - 1e-12);
    }
  }
}

TEST(Normalization, WordsAreFoldedAndStripped) {
  EXPECT_EQ(text::normalize_words("\"Hello,\" World! don't ..."), (std::vector<std::string>{"hello", "world", "don't"}));
}

TEST(EditDistance, AgreesWithAlignmentAndGenericWer) {
  std::mt19937_64 rng(40);
  for (int i = 0; i < 500; ++i) {
    auto r = random_sentence(rng, 40, 3), h = random_sentence(rng, 40, 3);
    EXPECT_EQ(edit_distance<std::string>(r, h), align_words(r, h).errors());
    if (r.empty()) continue;
    std::vector<int> ri, hi;
    for (const auto& w : r) ri.push_back(std::stoi(w.substr(1)));
    for (const auto& w : h) hi.push_back(std::stoi(w.substr(1)));
    EXPECT_DOUBLE_EQ(wer<int>(ri, hi), wer(r, h));
  }
}
