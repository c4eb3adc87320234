#pragma once

// Domain value types shared by every module. Time is kept as integer frame
// counts; seconds appear only through FrameTimeline::time_of.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "simulst/errors.hpp"
#include "simulst/text.hpp"

namespace simulst {

using Seconds = double;
using FrameIndex = std::int64_t;

class FrameTimeline {
 public:
  static constexpr Seconds kDefaultInterval = 0.35;

  explicit FrameTimeline(Seconds frame_interval = kDefaultInterval, FrameIndex total_frames = 0,
                         Seconds origin = 0.0)
      : frame_interval_(frame_interval), total_frames_(total_frames), origin_(origin) {
    if (!(frame_interval > 0.0) || !std::isfinite(frame_interval)) {
      throw ArgumentError("frame_interval must be positive, got " + std::to_string(frame_interval));
    }
    if (total_frames < 0) throw ArgumentError("total_frames must be non-negative");
  }

  Seconds frame_interval() const noexcept { return frame_interval_; }
  FrameIndex total_frames() const noexcept { return total_frames_; }
  Seconds origin() const noexcept { return origin_; }

  Seconds time_of(FrameIndex k) const {
    if (k < 0 || k > total_frames_) {
      throw BoundsError("frame " + std::to_string(k) + " outside timeline [0, " +
                        std::to_string(total_frames_) + "]");
    }
    return origin_ + static_cast<Seconds>(k) * frame_interval_;
  }

  /// Nearest frame boundary to `t`; inverse of time_of on the grid.
  FrameIndex frame_at(Seconds t) const {
    return static_cast<FrameIndex>(std::llround((t - origin_) / frame_interval_));
  }

  /// Number of whole frames that have elapsed by `t` (a frame k is complete at time_of(k + 1)).
  FrameIndex frames_elapsed(Seconds t) const {
    const auto n = static_cast<FrameIndex>(std::floor((t - origin_) / frame_interval_ + 1e-9));
    return std::clamp<FrameIndex>(n, 0, total_frames_);
  }

  Seconds duration_of(FrameIndex frames) const { return static_cast<Seconds>(frames) * frame_interval_; }

  bool operator==(const FrameTimeline&) const = default;

 private:
  Seconds frame_interval_;
  FrameIndex total_frames_;
  Seconds origin_;
};

/// Half-open [start_frame, end_frame) interval on the frame grid.
class ChunkSpan {
 public:
  ChunkSpan(FrameIndex start_frame, FrameIndex end_frame) : start_(start_frame), end_(end_frame) {
    if (start_frame < 0 || start_frame >= end_frame) {
      throw ArgumentError("invalid span [" + std::to_string(start_frame) + ", " + std::to_string(end_frame) +
                          "): need 0 <= start < end");
    }
  }

  FrameIndex start_frame() const noexcept { return start_; }
  FrameIndex end_frame() const noexcept { return end_; }
  FrameIndex frame_count() const noexcept { return end_ - start_; }

  std::string to_string() const { return "[" + std::to_string(start_) + ", " + std::to_string(end_) + ")"; }

  auto operator<=>(const ChunkSpan&) const = default;

 private:
  FrameIndex start_;
  FrameIndex end_;
};

inline Seconds span_duration(const ChunkSpan& span, const FrameTimeline& timeline) {
  if (span.end_frame() > timeline.total_frames()) {
    throw BoundsError("span " + span.to_string() + " exceeds timeline of " +
                      std::to_string(timeline.total_frames()) + " frames");
  }
  return timeline.duration_of(span.frame_count());
}

struct Token {
  std::string text;
  std::optional<double> log_prob;

  Token(std::string t, std::optional<double> lp = std::nullopt) : text(std::move(t)), log_prob(lp) {
    if (text.empty()) throw ArgumentError("token text must be non-empty");
    for (char c : text) {
      if (text::is_space(static_cast<unsigned char>(c))) {
        throw ArgumentError("token text contains whitespace: '" + text + "'");
      }
    }
    if (log_prob && !(*log_prob <= 0.0)) {
      throw ArgumentError("token log_prob must be <= 0, got " + std::to_string(*log_prob));
    }
  }

  bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

inline std::string concat_text(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i].text;
  }
  return out;
}

/// Whitespace tokenisation of provider text; punctuation stays attached to words.
inline TokenSeq tokenize(std::string_view s) {
  TokenSeq out;
  for (auto& w : text::split_whitespace(s)) out.emplace_back(std::move(w));
  return out;
}

inline std::vector<std::string> token_texts(const TokenSeq& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

inline bool all_have_log_prob(const TokenSeq& tokens) {
  return !tokens.empty() &&
         std::all_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.log_prob.has_value(); });
}

inline double mean_log_prob(const TokenSeq& tokens) {
  double sum = 0.0;
  for (const auto& t : tokens) sum += *t.log_prob;
  return sum / static_cast<double>(tokens.size());
}

class Hypothesis {
 public:
  Hypothesis() = default;

  /// avg_log_prob is the token mean when every token is scored, otherwise 0.
  explicit Hypothesis(TokenSeq tokens) : tokens_(std::move(tokens)) {
    avg_log_prob_ = all_have_log_prob(tokens_) ? mean_log_prob(tokens_) : 0.0;
  }

  Hypothesis(TokenSeq tokens, double avg_log_prob) : tokens_(std::move(tokens)), avg_log_prob_(avg_log_prob) {
    if (!(avg_log_prob <= 0.0)) {
      throw ArgumentError("avg_log_prob must be <= 0, got " + std::to_string(avg_log_prob));
    }
    if (all_have_log_prob(tokens_) && std::abs(mean_log_prob(tokens_) - avg_log_prob) > 1e-9) {
      throw ArgumentError("avg_log_prob " + std::to_string(avg_log_prob) + " disagrees with token mean " +
                          std::to_string(mean_log_prob(tokens_)));
    }
  }

  const TokenSeq& tokens() const noexcept { return tokens_; }
  double avg_log_prob() const noexcept { return avg_log_prob_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  std::string text() const { return concat_text(tokens_); }

  bool operator==(const Hypothesis&) const = default;

 private:
  TokenSeq tokens_;
  double avg_log_prob_ = 0.0;
};

/// A recognizer response: hypotheses best-first plus the simulated compute time.
class BeamSet {
 public:
  BeamSet(std::vector<Hypothesis> hypotheses, Seconds processing_latency)
      : hypotheses_(std::move(hypotheses)), processing_latency_(processing_latency) {
    if (hypotheses_.empty()) throw ArgumentError("beam set must hold at least one hypothesis");
    if (!(processing_latency >= 0.0)) throw ArgumentError("processing_latency must be >= 0");
    std::stable_sort(hypotheses_.begin(), hypotheses_.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.avg_log_prob() > b.avg_log_prob(); });
  }

  const std::vector<Hypothesis>& hypotheses() const noexcept { return hypotheses_; }
  const Hypothesis& best() const noexcept { return hypotheses_.front(); }
  std::size_t beam_size() const noexcept { return hypotheses_.size(); }
  Seconds processing_latency() const noexcept { return processing_latency_; }

  bool operator==(const BeamSet&) const = default;

 private:
  std::vector<Hypothesis> hypotheses_;
  Seconds processing_latency_;
};

struct CommitEvent {
  Token token;
  Seconds commit_time;
  ChunkSpan source_span;
  bool forced = false;

  bool operator==(const CommitEvent&) const = default;
};

/// Append-only record of committed tokens. Rejects (never reorders) out-of-order events.
class CommitLog {
 public:
  explicit CommitLog(FrameTimeline timeline) : timeline_(timeline) {}

  void append(CommitEvent event) {
    const Seconds earliest = timeline_.time_of(event.source_span.end_frame());
    if (event.commit_time < earliest - 1e-9) {
      throw InvariantError("commit at " + std::to_string(event.commit_time) + " s precedes its source span " +
                           event.source_span.to_string() + " ending at " + std::to_string(earliest) + " s");
    }
    if (!events_.empty() && event.commit_time < events_.back().commit_time) {
      throw InvariantError("commit times must be non-decreasing");
    }
    events_.push_back(std::move(event));
  }

  const std::vector<CommitEvent>& events() const noexcept { return events_; }
  const FrameTimeline& timeline() const noexcept { return timeline_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  TokenSeq tokens() const {
    TokenSeq out;
    out.reserve(events_.size());
    for (const auto& e : events_) out.push_back(e.token);
    return out;
  }

  std::vector<Seconds> commit_times() const {
    std::vector<Seconds> out;
    out.reserve(events_.size());
    for (const auto& e : events_) out.push_back(e.commit_time);
    return out;
  }

  std::string text() const { return concat_text(tokens()); }

  bool operator==(const CommitLog&) const = default;

 private:
  FrameTimeline timeline_;
  std::vector<CommitEvent> events_;
};

/// Source/target alignment links, 1-indexed: (source j, target i).
class AlignmentSet {
 public:
  using Pair = std::pair<std::int64_t, std::int64_t>;

  AlignmentSet() = default;
  AlignmentSet(std::initializer_list<Pair> pairs) : AlignmentSet(std::vector<Pair>(pairs)) {}
  explicit AlignmentSet(const std::vector<Pair>& pairs) {
    for (const auto& p : pairs) {
      if (p.first < 1 || p.second < 1) {
        throw ArgumentError("alignment indices are 1-based, got (" + std::to_string(p.first) + ", " +
                            std::to_string(p.second) + ")");
      }
      if (!pairs_.insert(p).second) {
        throw ArgumentError("duplicate alignment pair (" + std::to_string(p.first) + ", " +
                            std::to_string(p.second) + ")");
      }
    }
  }

  const std::set<Pair>& pairs() const noexcept { return pairs_; }
  bool empty() const noexcept { return pairs_.empty(); }

  bool has_target(std::int64_t i) const {
    return std::any_of(pairs_.begin(), pairs_.end(), [i](const Pair& p) { return p.second == i; });
  }

 private:
  std::set<Pair> pairs_;
};

enum class PolicyKind { hold_n, la_n, sp_n };

struct PolicyChoice {
  PolicyKind kind = PolicyKind::la_n;
  std::size_t n = 2;

  bool operator==(const PolicyChoice&) const = default;
};

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::hold_n: return "hold_n";
    case PolicyKind::la_n: return "la_n";
    case PolicyKind::sp_n: return "sp_n";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string_view s) {
  const auto l = text::to_lower_ascii(s);
  if (l == "hold_n" || l == "hold") return PolicyKind::hold_n;
  if (l == "la_n" || l == "la") return PolicyKind::la_n;
  if (l == "sp_n" || l == "sp") return PolicyKind::sp_n;
  throw ArgumentError("unknown policy '" + std::string(s) + "' (expected hold_n, la_n or sp_n)");
}

struct SessionConfig {
  Seconds min_duration_threshold = 0.7;
  Seconds max_uncommitted_duration = 1.7;
  Seconds lookback_delta = 0.1;
  bool lookback_enabled = false;
  PolicyChoice policy{};
  Seconds chunk_interval = 0.35;
  std::optional<double> log_prob_threshold;
  double cps_max = 30.0;
  double cps_min = 2.0;
  double punct_ratio_max = 0.5;
  std::vector<std::string> glossary;
  double glossary_alpha = 0.9;

  void validate() const {
    if (!(chunk_interval > 0.0)) throw ArgumentError("chunk_interval must be > 0");
    if (min_duration_threshold < chunk_interval - 1e-9) {
      throw ArgumentError("min_duration_threshold must be >= chunk_interval");
    }
    if (!(max_uncommitted_duration > min_duration_threshold)) {
      throw ArgumentError("max_uncommitted_duration must exceed min_duration_threshold");
    }
    if (!(glossary_alpha > 0.0 && glossary_alpha < 1.0)) throw ArgumentError("glossary_alpha must lie in (0, 1)");
    if (lookback_delta < 0.0) throw ArgumentError("lookback_delta must be >= 0");
    if (policy.kind != PolicyKind::hold_n && policy.n < 1) throw ArgumentError("la_n/sp_n need n >= 1");
    if (cps_min < 0.0 || cps_max < cps_min) throw ArgumentError("need 0 <= cps_min <= cps_max");
    if (punct_ratio_max < 0.0) throw ArgumentError("punct_ratio_max must be >= 0");
  }

  bool operator==(const SessionConfig&) const = default;
};

}  // namespace simulst
