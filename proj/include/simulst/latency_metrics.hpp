#pragma once

// Latency metrics over a committed token stream.
//
// Offsets written (i - 1) / lambda are in source-token units. They are turned
// into seconds by multiplying with the mean source-token duration
// source_duration / |X|, so every lagging value is directly comparable with
// the wall-clock commit times. Pass source_duration == |X| for unit offsets.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simulst/core_model.hpp"

namespace simulst {

struct LatencyInput {
  std::vector<Seconds> commit_times;          // one per target token, |Y| = size()
  std::size_t source_token_count = 0;         // |X|
  std::size_t reference_target_count = 0;     // |Y*|, only needed by LAAL
  Seconds source_duration = 0.0;
  std::vector<Seconds> segment_durations_source;
  std::vector<Seconds> segment_durations_target;
  Seconds processing_total = 0.0;

  std::size_t target_token_count() const noexcept { return commit_times.size(); }
};

namespace detail {

inline void require_latency_input(const LatencyInput& in, const char* what) {
  if (in.source_token_count == 0) throw ArgumentError(std::string(what) + ": source token count must be >= 1");
  if (in.commit_times.empty()) throw ArgumentError(std::string(what) + ": need at least one target token");
  if (in.source_duration < 0.0) throw ArgumentError(std::string(what) + ": source_duration must be >= 0");
  if (!std::is_sorted(in.commit_times.begin(), in.commit_times.end())) {
    throw ArgumentError(std::string(what) + ": commit times must be non-decreasing");
  }
}

inline Seconds source_token_seconds(const LatencyInput& in) {
  return in.source_duration / static_cast<double>(in.source_token_count);
}

// Mean of commit_times[i] - i / lambda (0-based i), offsets scaled to seconds.
inline Seconds lagging(const LatencyInput& in, double lambda) {
  const Seconds unit = source_token_seconds(in);
  double sum = 0.0;
  for (std::size_t i = 0; i < in.commit_times.size(); ++i) {
    sum += in.commit_times[i] - static_cast<double>(i) / lambda * unit;
  }
  return sum / static_cast<double>(in.commit_times.size());
}

}  // namespace detail

/// Expected target/source length ratio |Y| / |X|.
inline double length_ratio(const LatencyInput& in) {
  return static_cast<double>(in.target_token_count()) / static_cast<double>(in.source_token_count);
}

inline Seconds average_lagging(const LatencyInput& in) {
  detail::require_latency_input(in, "average_lagging");
  return detail::lagging(in, length_ratio(in));
}

/// DAL with the read distribution collapsed onto the observed trajectory:
/// term t is tau[t] - (read_counts[t] - 1) / lambda.
inline Seconds differentiable_average_lagging(const LatencyInput& in, const std::vector<Seconds>& tau,
                                              const std::vector<std::size_t>& read_counts) {
  detail::require_latency_input(in, "differentiable_average_lagging");
  if (tau.size() != read_counts.size() || tau.empty()) {
    throw ArgumentError("differentiable_average_lagging: tau and read_counts must be non-empty and equal length");
  }
  const double lambda = length_ratio(in);
  const Seconds unit = detail::source_token_seconds(in);
  double sum = 0.0;
  for (std::size_t t = 0; t < tau.size(); ++t) {
    if (read_counts[t] < 1) throw ArgumentError("differentiable_average_lagging: read counts are >= 1");
    sum += tau[t] - static_cast<double>(read_counts[t] - 1) / lambda * unit;
  }
  return sum / static_cast<double>(tau.size());
}

/// Session-level DAL trajectory: target step t reads t source units and its
/// delay is the commit time pushed forward to keep at least one ideal step
/// (unit / lambda) after the previous delay.
struct DalTrajectory {
  std::vector<Seconds> tau;
  std::vector<std::size_t> read_counts;
};

inline DalTrajectory dal_trajectory(const LatencyInput& in) {
  detail::require_latency_input(in, "dal_trajectory");
  const Seconds step = detail::source_token_seconds(in) / length_ratio(in);
  DalTrajectory out;
  for (std::size_t t = 0; t < in.commit_times.size(); ++t) {
    Seconds d = in.commit_times[t];
    if (t > 0) d = std::max(d, out.tau.back() + step);
    out.tau.push_back(d);
    out.read_counts.push_back(t + 1);
  }
  return out;
}

inline Seconds differentiable_average_lagging(const LatencyInput& in) {
  const auto traj = dal_trajectory(in);
  return differentiable_average_lagging(in, traj.tau, traj.read_counts);
}

inline double average_proportion(const LatencyInput& in) {
  const auto& src = in.segment_durations_source;
  const auto& tgt = in.segment_durations_target;
  if (src.empty() || tgt.empty()) throw ArgumentError("average_proportion: segment lists must be non-empty");
  if (src.size() != tgt.size()) throw ArgumentError("average_proportion: segment lists differ in length");
  double s = 0.0, t = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] < 0.0 || tgt[i] < 0.0) throw ArgumentError("average_proportion: durations must be >= 0");
    s += src[i];
    t += tgt[i];
  }
  if (!(s > 0.0)) throw ArgumentError("average_proportion: total source duration is zero");
  return t / s;
}

/// Linear interpolation across the source: t_expected(y_i) = i / |Y| * source_duration.
inline std::vector<Seconds> default_expected_times(const LatencyInput& in) {
  std::vector<Seconds> out;
  const auto n = static_cast<double>(in.target_token_count());
  for (std::size_t i = 1; i <= in.target_token_count(); ++i) {
    out.push_back(static_cast<double>(i) / n * in.source_duration);
  }
  return out;
}

inline Seconds average_target_delay(const LatencyInput& in, const std::vector<Seconds>& expected_times) {
  if (in.commit_times.empty()) throw ArgumentError("average_target_delay: need at least one target token");
  if (expected_times.size() != in.commit_times.size()) {
    throw ArgumentError("average_target_delay: expected_times length differs from |Y|");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < expected_times.size(); ++i) sum += in.commit_times[i] - expected_times[i];
  return sum / static_cast<double>(expected_times.size());
}

inline Seconds average_target_delay(const LatencyInput& in) {
  return average_target_delay(in, default_expected_times(in));
}

/// AL with lambda_adaptive = max(|Y|, |Y*|) / |X|.
inline Seconds length_adaptive_al(const LatencyInput& in) {
  detail::require_latency_input(in, "length_adaptive_al");
  if (in.reference_target_count == 0) throw ArgumentError("length_adaptive_al: reference target count must be >= 1");
  const double lambda = static_cast<double>(std::max(in.target_token_count(), in.reference_target_count)) /
                        static_cast<double>(in.source_token_count);
  return detail::lagging(in, lambda);
}

inline double real_time_factor(Seconds processing, Seconds audio) {
  if (!(audio > 0.0)) throw ArgumentError("real_time_factor: audio duration must be > 0");
  return processing / audio;
}

}  // namespace simulst
