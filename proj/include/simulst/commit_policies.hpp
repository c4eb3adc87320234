#pragma once

// Prefix-commitment strategies. Every function here is pure; agreement is
// exact token-text equality and ignores log probabilities.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "simulst/core_model.hpp"

namespace simulst {

class PolicyState {
 public:
  explicit PolicyState(std::size_t window = 2) : window_(window) {}

  void record(BeamSet beams) { history_.push_back(std::move(beams)); }

  const std::vector<BeamSet>& history() const noexcept { return history_; }
  std::size_t window() const noexcept { return window_; }

  /// The last `window` beam sets, oldest first. Empty while the window is not yet full.
  std::span<const BeamSet> current_window() const {
    if (window_ == 0 || history_.size() < window_) return {};
    return std::span<const BeamSet>(history_).subspan(history_.size() - window_);
  }

 private:
  std::vector<BeamSet> history_;
  std::size_t window_;
};

/// All but the last n tokens of `best`.
inline TokenSeq hold_n(const Hypothesis& best, std::size_t n) {
  const auto& w = best.tokens();
  const std::size_t keep = w.size() > n ? w.size() - n : 0;
  return TokenSeq(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(keep));
}

/// Longest prefix shared by every sequence; the returned tokens are taken from the first one.
inline TokenSeq longest_common_prefix(std::span<const TokenSeq> sequences) {
  if (sequences.empty()) throw ArgumentError("longest_common_prefix needs at least one sequence");
  const TokenSeq& first = sequences.front();
  std::size_t len = first.size();
  for (const auto& seq : sequences.subspan(1)) {
    std::size_t k = 0;
    const std::size_t limit = std::min(len, seq.size());
    while (k < limit && seq[k].text == first[k].text) ++k;
    len = k;
    if (len == 0) break;
  }
  return TokenSeq(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(len));
}

inline TokenSeq longest_common_prefix(const std::vector<TokenSeq>& sequences) {
  return longest_common_prefix(std::span<const TokenSeq>(sequences));
}

/// Local agreement: LCP of the best hypotheses of the last n beam sets.
/// Tokens are taken from the most recent best hypothesis.
inline TokenSeq la_n(const PolicyState& state) {
  const auto window = state.current_window();
  if (window.empty()) return {};
  std::vector<TokenSeq> bests;
  bests.reserve(window.size());
  for (auto it = window.rbegin(); it != window.rend(); ++it) bests.push_back(it->best().tokens());
  return longest_common_prefix(bests);
}

/// Shared prefix: LCP over every hypothesis of every beam set in the window.
/// Beam sizes may differ between chunks.
inline TokenSeq sp_n(const PolicyState& state) {
  const auto window = state.current_window();
  if (window.empty()) return {};
  std::vector<TokenSeq> all;
  for (auto it = window.rbegin(); it != window.rend(); ++it) {
    for (const auto& h : it->hypotheses()) all.push_back(h.tokens());
  }
  return longest_common_prefix(all);
}

/// Evaluates the configured policy on `state`. hold_n reads the latest best hypothesis.
inline TokenSeq apply_policy(const PolicyChoice& choice, const PolicyState& state) {
  switch (choice.kind) {
    case PolicyKind::hold_n:
      if (state.history().empty()) return {};
      return hold_n(state.history().back().best(), choice.n);
    case PolicyKind::la_n:
      return la_n(state);
    case PolicyKind::sp_n:
      return sp_n(state);
  }
  return {};
}

inline bool is_text_prefix(const TokenSeq& prefix, const TokenSeq& seq) {
  if (prefix.size() > seq.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i].text != seq[i].text) return false;
  }
  return true;
}

/// The part of `candidate` beyond `committed`, or nothing if the two disagree.
inline TokenSeq clip_to_committed(const TokenSeq& candidate, const TokenSeq& committed) {
  if (!is_text_prefix(committed, candidate)) return {};
  return TokenSeq(candidate.begin() + static_cast<std::ptrdiff_t>(committed.size()), candidate.end());
}

}  // namespace simulst
