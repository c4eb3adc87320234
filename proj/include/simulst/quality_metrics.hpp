#pragma once

// Transcription and translation quality: edit-distance alignment, WER, CER,
// single-reference BLEU (no smoothing), lexical similarity and the proper
// noun score.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/errors.hpp"
#include "simulst/text.hpp"

namespace simulst {

enum class EditOp { match, sub, ins, del };

inline const char* to_string(EditOp op) {
  switch (op) {
    case EditOp::match: return "match";
    case EditOp::sub: return "sub";
    case EditOp::ins: return "ins";
    case EditOp::del: return "del";
  }
  return "?";
}

struct EditAlignment {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_length = 0;
  std::vector<EditOp> op_trace;

  std::size_t errors() const noexcept { return substitutions + insertions + deletions; }
};

/// Unit-cost Levenshtein alignment. On ties the backtrace prefers
/// match > substitution > deletion > insertion, so the trace is deterministic.
template <typename T>
EditAlignment align_sequences(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditAlignment out;
  out.reference_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      out.op_trace.push_back(EditOp::match);
      --i, --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      out.op_trace.push_back(EditOp::sub);
      ++out.substitutions;
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.op_trace.push_back(EditOp::del);
      ++out.deletions;
      --i;
    } else {
      out.op_trace.push_back(EditOp::ins);
      ++out.insertions;
      --j;
    }
  }
  std::reverse(out.op_trace.begin(), out.op_trace.end());
  return out;
}

inline EditAlignment align_words(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  return align_sequences<std::string>(reference, hypothesis);
}

/// Unit-cost Levenshtein distance without the backtrace (two rolling rows).
template <typename T>
std::size_t edit_distance(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t m = hyp.size();
  std::size_t small[2][33];
  std::vector<std::size_t> big;
  std::size_t* prev = small[0];
  std::size_t* cur = small[1];
  if (m >= 33) {
    big.resize(2 * (m + 1));
    prev = big.data();
    cur = big.data() + m + 1;
  }
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min(diag, std::min(prev[j], cur[j - 1]) + 1);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// WER over any token type; callers may intern words to integers first.
template <typename T>
double wer(std::span<const T> reference, std::span<const T> hypothesis) {
  if (reference.empty()) throw ArgumentError("wer: reference is empty");
  return static_cast<double>(edit_distance(reference, hypothesis)) / static_cast<double>(reference.size());
}

inline double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  return wer<std::string>(reference, hypothesis);
}

/// Character sequence used by CER: normalised words joined by single spaces,
/// or the raw code points when `normalize` is false.
inline std::u32string cer_characters(std::string_view s, bool normalize = true) {
  if (!normalize) return text::decode_utf8(s);
  return text::decode_utf8(text::join(text::normalize_words(s)));
}

inline EditAlignment align_characters(std::string_view reference, std::string_view hypothesis, bool normalize = true) {
  const auto r = cer_characters(reference, normalize);
  const auto h = cer_characters(hypothesis, normalize);
  return align_sequences<char32_t>(std::span<const char32_t>(r.data(), r.size()),
                                   std::span<const char32_t>(h.data(), h.size()));
}

inline double cer(std::string_view reference, std::string_view hypothesis, bool normalize = true) {
  const auto a = align_characters(reference, hypothesis, normalize);
  if (a.reference_length == 0) throw ArgumentError("cer: reference is empty after normalisation");
  return static_cast<double>(a.errors()) / static_cast<double>(a.reference_length);
}

// ---------------------------------------------------------------------------
// BLEU

/// Raw clipped n-gram counts; these pool additively across a corpus.
struct NGramCounts {
  std::vector<std::size_t> matches;  // index n-1
  std::vector<std::size_t> totals;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;

  explicit NGramCounts(std::size_t max_n = 4) : matches(max_n, 0), totals(max_n, 0) {}

  NGramCounts& operator+=(const NGramCounts& o) {
    if (o.matches.size() != matches.size()) throw ArgumentError("NGramCounts: max_n mismatch");
    for (std::size_t k = 0; k < matches.size(); ++k) {
      matches[k] += o.matches[k];
      totals[k] += o.totals[k];
    }
    hyp_length += o.hyp_length;
    ref_length += o.ref_length;
    return *this;
  }
};

struct NGramStats {
  std::vector<double> precisions;
  std::vector<double> weights;
  double brevity_penalty = 1.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

namespace detail {

using NGram = std::vector<std::string>;

inline std::map<NGram, std::size_t> count_ngrams(const std::vector<std::string>& words, std::size_t n) {
  std::map<NGram, std::size_t> out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++out[NGram(words.begin() + static_cast<std::ptrdiff_t>(i), words.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace detail

inline NGramCounts ngram_counts(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis,
                                std::size_t max_n = 4) {
  if (max_n < 1) throw ArgumentError("bleu: max_n must be >= 1");
  NGramCounts c(max_n);
  c.hyp_length = hypothesis.size();
  c.ref_length = reference.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto hyp = detail::count_ngrams(hypothesis, n);
    const auto ref = detail::count_ngrams(reference, n);
    for (const auto& [gram, count] : hyp) {
      const auto it = ref.find(gram);
      c.matches[n - 1] += std::min(count, it == ref.end() ? std::size_t{0} : it->second);
      c.totals[n - 1] += count;
    }
  }
  return c;
}

inline NGramStats ngram_stats(const NGramCounts& c) {
  NGramStats s;
  const std::size_t max_n = c.matches.size();
  s.hyp_length = c.hyp_length;
  s.ref_length = c.ref_length;
  for (std::size_t k = 0; k < max_n; ++k) {
    s.precisions.push_back(c.totals[k] == 0 ? 0.0
                                            : static_cast<double>(c.matches[k]) / static_cast<double>(c.totals[k]));
    s.weights.push_back(1.0 / static_cast<double>(max_n));
  }
  if (c.hyp_length == 0) {
    s.brevity_penalty = 0.0;
  } else if (c.hyp_length < c.ref_length) {
    s.brevity_penalty = std::exp(1.0 - static_cast<double>(c.ref_length) / static_cast<double>(c.hyp_length));
  }
  return s;
}

inline double bleu_from_counts(const NGramCounts& c) {
  if (c.ref_length == 0) throw ArgumentError("bleu: reference is empty");
  if (c.hyp_length == 0) return 0.0;
  const auto s = ngram_stats(c);
  double log_sum = 0.0;
  for (std::size_t k = 0; k < s.precisions.size(); ++k) {
    if (s.precisions[k] <= 0.0) return 0.0;
    log_sum += s.weights[k] * std::log(s.precisions[k]);
  }
  return s.brevity_penalty * std::exp(log_sum);
}

inline double bleu(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis,
                   std::size_t max_n = 4) {
  if (reference.empty()) throw ArgumentError("bleu: reference is empty");
  return bleu_from_counts(ngram_counts(reference, hypothesis, max_n));
}

// ---------------------------------------------------------------------------
// Lexical similarity

enum class LexicalMeasure { jaro_winkler, levenshtein_norm };

inline const char* to_string(LexicalMeasure m) {
  return m == LexicalMeasure::jaro_winkler ? "jaro_winkler" : "levenshtein_norm";
}

inline double jaro(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t window = std::max(a.size(), b.size()) / 2 > 0 ? std::max(a.size(), b.size()) / 2 - 1 : 0;
  std::vector<bool> a_hit(a.size(), false), b_hit(b.size(), false);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!b_hit[j] && a[i] == b[j]) {
        a_hit[i] = b_hit[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t half_transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!a_hit[i]) continue;
    while (!b_hit[j]) ++j;
    if (a[i] != b[j]) ++half_transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  const double t = static_cast<double>(half_transpositions) / 2.0;
  return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

inline double jaro_winkler(std::u32string_view a, std::u32string_view b, double scale = 0.1,
                           std::size_t max_prefix = 4) {
  const double j = jaro(a, b);
  std::size_t l = 0;
  while (l < max_prefix && l < a.size() && l < b.size() && a[l] == b[l]) ++l;
  return j + static_cast<double>(l) * scale * (1.0 - j);
}

inline double levenshtein_similarity(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto al = align_sequences<char32_t>(std::span<const char32_t>(a.data(), a.size()),
                                            std::span<const char32_t>(b.data(), b.size()));
  return 1.0 - static_cast<double>(al.errors()) / static_cast<double>(std::max(a.size(), b.size()));
}

inline double lexical_similarity(std::string_view a, std::string_view b, LexicalMeasure measure) {
  const auto ua = text::decode_utf8(a);
  const auto ub = text::decode_utf8(b);
  return measure == LexicalMeasure::jaro_winkler ? jaro_winkler(ua, ub) : levenshtein_similarity(ua, ub);
}

struct ProperNounScore {
  double score = 0.0;              // mean of per-noun maxima, in [0, 1]
  double raw_max_sum = 0.0;        // sum of per-noun maxima
  std::vector<double> per_noun;
};

/// For each noun phrase, the best similarity over every output window of the
/// same word length (both sides normalised). Outputs shorter than the phrase
/// are compared whole.
inline ProperNounScore proper_noun_score(const std::vector<std::string>& reference_nouns,
                                         const std::vector<std::string>& output_words, LexicalMeasure measure) {
  if (reference_nouns.empty()) throw ArgumentError("proper_noun_score: no reference nouns");
  std::vector<std::string> out;
  for (const auto& w : output_words) {
    auto n = text::normalize_word(w);
    if (!n.empty()) out.push_back(std::move(n));
  }

  ProperNounScore result;
  for (const auto& noun : reference_nouns) {
    const auto noun_words = text::normalize_words(noun);
    const std::string target = text::join(noun_words);
    const std::size_t k = std::max<std::size_t>(noun_words.size(), 1);
    double best = 0.0;
    if (!out.empty()) {
      if (out.size() <= k) {
        best = lexical_similarity(target, text::join(out), measure);
      } else {
        for (std::size_t i = 0; i + k <= out.size(); ++i) {
          const std::vector<std::string> window(out.begin() + static_cast<std::ptrdiff_t>(i),
                                                out.begin() + static_cast<std::ptrdiff_t>(i + k));
          best = std::max(best, lexical_similarity(target, text::join(window), measure));
        }
      }
    }
    result.per_noun.push_back(best);
    result.raw_max_sum += best;
  }
  result.score = result.raw_max_sum / static_cast<double>(reference_nouns.size());
  return result;
}

}  // namespace simulst
