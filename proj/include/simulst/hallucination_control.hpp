#pragma once

// Output-level hallucination detectors and the hallucination rate over an
// externally supplied source/target alignment.

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/core_model.hpp"
#include "simulst/text.hpp"

namespace simulst {

enum class DetectionReason { cps_high, cps_low, punct_ratio, log_prob, short_input };

inline const char* to_string(DetectionReason r) {
  switch (r) {
    case DetectionReason::cps_high: return "cps_high";
    case DetectionReason::cps_low: return "cps_low";
    case DetectionReason::punct_ratio: return "punct_ratio";
    case DetectionReason::log_prob: return "log_prob";
    case DetectionReason::short_input: return "short_input";
  }
  return "?";
}

inline constexpr DetectionReason kAllDetectionReasons[] = {
    DetectionReason::cps_high, DetectionReason::cps_low, DetectionReason::punct_ratio, DetectionReason::log_prob,
    DetectionReason::short_input};

struct DetectionVerdict {
  std::set<DetectionReason> reasons;
  double cps = 0.0;
  double punct_ratio = 0.0;

  bool flagged() const noexcept { return !reasons.empty(); }
  bool has(DetectionReason r) const { return reasons.count(r) != 0; }

  bool operator==(const DetectionVerdict&) const = default;
};

/// Inputs at or below this duration are considered short.
inline constexpr Seconds kShortInputDuration = 0.7;

/// Non-whitespace code points per second.
inline double chars_per_second(std::string_view s, Seconds duration) {
  if (!(duration > 0.0)) throw ArgumentError("chars_per_second needs duration > 0");
  std::size_t count = 0;
  for (char32_t c : text::decode_utf8(s)) {
    if (!text::is_space(c)) ++count;
  }
  return static_cast<double>(count) / duration;
}

inline double punctuation_word_ratio(std::string_view s) {
  const auto words = text::split_whitespace(s);
  if (words.empty()) return 0.0;
  std::size_t marks = 0;
  for (char32_t c : text::decode_utf8(s)) {
    if (text::is_punctuation(c)) ++marks;
  }
  return static_cast<double>(marks) / static_cast<double>(words.size());
}

/// Multi-signal check of one hypothesis against the span it was decoded from.
/// short_input only ever accompanies another reason; silence (cps == 0) is never flagged.
inline DetectionVerdict detect(const Hypothesis& hyp, Seconds span_duration, const SessionConfig& config) {
  DetectionVerdict v;
  const std::string s = hyp.text();
  v.cps = chars_per_second(s, span_duration);
  v.punct_ratio = punctuation_word_ratio(s);

  if (v.cps > config.cps_max) v.reasons.insert(DetectionReason::cps_high);
  if (v.cps > 0.0 && v.cps < config.cps_min) v.reasons.insert(DetectionReason::cps_low);
  if (v.punct_ratio > config.punct_ratio_max) v.reasons.insert(DetectionReason::punct_ratio);
  if (config.log_prob_threshold && hyp.avg_log_prob() < *config.log_prob_threshold) {
    v.reasons.insert(DetectionReason::log_prob);
  }
  if (!v.reasons.empty() && span_duration <= kShortInputDuration + 1e-9) {
    v.reasons.insert(DetectionReason::short_input);
  }
  return v;
}

/// 1 when target index i has no alignment link, else 0.
inline int hallucination_indicator(std::int64_t i, const AlignmentSet& h) {
  if (i < 1) throw ArgumentError("target index is 1-based, got " + std::to_string(i));
  return h.has_target(i) ? 0 : 1;
}

inline double hallucination_rate(std::size_t output_len, const AlignmentSet& h) {
  if (output_len == 0) throw ArgumentError("hallucination rate is undefined for empty output");
  std::size_t sum = 0;
  for (std::size_t i = 1; i <= output_len; ++i) sum += hallucination_indicator(static_cast<std::int64_t>(i), h);
  return static_cast<double>(sum) / static_cast<double>(output_len);
}

}  // namespace simulst
