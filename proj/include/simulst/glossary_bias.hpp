#pragma once

// Glossary biasing: glossary words are weighted by alpha and every other word
// by (1 - alpha). Distributions are renormalised afterwards; the literal
// unnormalised weights are available from glossary_weights().

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "simulst/core_model.hpp"
#include "simulst/text.hpp"

namespace simulst {

class TokenDistribution {
 public:
  explicit TokenDistribution(std::map<std::string, double> entries) : entries_(std::move(entries)) {
    double sum = 0.0;
    for (const auto& [w, p] : entries_) {
      if (!(p >= 0.0)) throw ArgumentError("probability of '" + w + "' is negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("distribution sums to " + std::to_string(sum) + ", not 1");
  }

  /// Divides by the total mass. Throws if the mass is zero.
  static TokenDistribution normalized(std::map<std::string, double> weights) {
    double sum = 0.0;
    for (const auto& [w, p] : weights) {
      if (!(p >= 0.0)) throw ArgumentError("weight of '" + w + "' is negative");
      sum += p;
    }
    if (!(sum > 0.0)) throw ArgumentError("degenerate distribution: total mass is zero");
    for (auto& [w, p] : weights) p /= sum;
    return TokenDistribution(std::move(weights));
  }

  const std::map<std::string, double>& entries() const noexcept { return entries_; }
  double at(const std::string& w) const {
    const auto it = entries_.find(w);
    return it == entries_.end() ? 0.0 : it->second;
  }

 private:
  std::map<std::string, double> entries_;
};

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("glossary alpha must lie in (0, 1), got " + std::to_string(alpha));
}

inline std::set<std::string> folded_set(const std::vector<std::string>& terms) {
  std::set<std::string> out;
  for (const auto& t : terms) out.insert(text::to_lower_ascii(t));
  return out;
}

}  // namespace detail

/// Unnormalised alpha / (1 - alpha) weights exactly as the biasing rule writes them.
inline std::map<std::string, double> glossary_weights(const TokenDistribution& dist,
                                                      const std::vector<std::string>& glossary, double alpha) {
  detail::require_alpha(alpha);
  const auto g = detail::folded_set(glossary);
  std::map<std::string, double> out;
  for (const auto& [w, p] : dist.entries()) {
    out[w] = (g.count(text::to_lower_ascii(w)) ? alpha : 1.0 - alpha) * p;
  }
  return out;
}

inline TokenDistribution apply_glossary_bias(const TokenDistribution& dist, const std::vector<std::string>& glossary,
                                             double alpha) {
  return TokenDistribution::normalized(glossary_weights(dist, glossary, alpha));
}

struct RescoreResult {
  Hypothesis hypothesis;
  bool missing_log_probs = false;
};

/// Marks tokens covered by a glossary phrase occurrence (whole words, contiguous,
/// punctuation-stripped and case-folded).
inline std::vector<bool> glossary_coverage(const TokenSeq& tokens, const std::vector<std::string>& glossary) {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(text::normalize_word(t.text));
  std::vector<bool> covered(tokens.size(), false);
  for (const auto& term : glossary) {
    const auto phrase = text::normalize_words(term);
    if (phrase.empty() || phrase.size() > words.size()) continue;
    for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; hit && k < phrase.size(); ++k) hit = words[i + k] == phrase[k];
      if (hit) {
        for (std::size_t k = 0; k < phrase.size(); ++k) covered[i + k] = true;
      }
    }
  }
  return covered;
}

/// Shifts each token log-prob by log(alpha) inside glossary phrases and by
/// log(1 - alpha) elsewhere, then recomputes avg_log_prob. Hypotheses lacking
/// token scores come back unchanged with missing_log_probs set.
inline RescoreResult rescore_hypothesis(const Hypothesis& hyp, const std::vector<std::string>& glossary, double alpha) {
  detail::require_alpha(alpha);
  if (hyp.empty()) return {hyp, false};
  if (!all_have_log_prob(hyp.tokens())) return {hyp, true};
  const auto covered = glossary_coverage(hyp.tokens(), glossary);
  const double in_shift = std::log(alpha);
  const double out_shift = std::log(1.0 - alpha);
  TokenSeq tokens = hyp.tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i].log_prob = *tokens[i].log_prob + (covered[i] ? in_shift : out_shift);
  }
  return {Hypothesis(std::move(tokens)), false};
}

/// Rescores every hypothesis and re-ranks the beam.
inline BeamSet rescore_beam(const BeamSet& beams, const std::vector<std::string>& glossary, double alpha) {
  std::vector<Hypothesis> out;
  out.reserve(beams.beam_size());
  for (const auto& h : beams.hypotheses()) out.push_back(rescore_hypothesis(h, glossary, alpha).hypothesis);
  return BeamSet(std::move(out), beams.processing_latency());
}

}  // namespace simulst
