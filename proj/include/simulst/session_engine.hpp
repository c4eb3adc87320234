#pragma once

// Streaming session loop on a virtual clock.
//
// Frames arrive on a feed; the engine waits until at least
// min_duration_threshold of unprocessed audio exists, asks the recognizer for
// [processed_upto, frames_available) (optionally extended backwards by the
// lookback), blocks the clock for the response latency, discards responses the
// hallucination detector flags and runs the commit policy on the rest.
//
// Recognizer hypotheses are placed onto the running transcript before the
// policy sees them ("splicing"): a hypothesis that restates part of the
// transcript (a revision, or lookback context) replaces the transcript from
// the point where it starts to agree; a hypothesis that agrees nowhere is
// appended. Policies therefore always compare transcripts of the whole
// session, and committed text is a prefix of every spliced hypothesis.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simulst/asr_backend.hpp"
#include "simulst/commit_policies.hpp"
#include "simulst/core_model.hpp"
#include "simulst/glossary_bias.hpp"
#include "simulst/hallucination_control.hpp"

namespace simulst {

inline constexpr double kTimeEps = 1e-9;

/// Arrival schedule of the frames. Frame k can never arrive before it is complete, at (k + 1) * interval.
class FrameFeed {
 public:
  FrameFeed(Seconds frame_interval, std::vector<Seconds> arrival_times)
      : timeline_(frame_interval, static_cast<FrameIndex>(arrival_times.size())), arrivals_(std::move(arrival_times)) {
    for (std::size_t k = 0; k < arrivals_.size(); ++k) {
      if (arrivals_[k] < timeline_.time_of(static_cast<FrameIndex>(k + 1)) - 1e-6) {
        throw ArgumentError("frame " + std::to_string(k) + " arrives at " + std::to_string(arrivals_[k]) +
                            " s, before it is complete");
      }
      if (k > 0 && arrivals_[k] < arrivals_[k - 1]) throw ArgumentError("frame arrivals must be time-ordered");
    }
  }

  static FrameFeed uniform(Seconds frame_interval, FrameIndex total_frames) {
    FrameTimeline tl(frame_interval, total_frames);
    std::vector<Seconds> arrivals;
    arrivals.reserve(static_cast<std::size_t>(total_frames));
    for (FrameIndex k = 1; k <= total_frames; ++k) arrivals.push_back(tl.time_of(k));
    return FrameFeed(frame_interval, std::move(arrivals));
  }

  const FrameTimeline& timeline() const noexcept { return timeline_; }
  const std::vector<Seconds>& arrivals() const noexcept { return arrivals_; }
  FrameIndex size() const noexcept { return static_cast<FrameIndex>(arrivals_.size()); }
  Seconds arrival(FrameIndex k) const { return arrivals_.at(static_cast<std::size_t>(k)); }

 private:
  FrameTimeline timeline_;
  std::vector<Seconds> arrivals_;
};

/// key=value lines: frame_interval_s first, then either total_frames=N or one arrival_s=T per frame.
inline FrameFeed parse_feed(std::istream& in, const std::string& source = "<feed>") {
  std::optional<Seconds> interval;
  std::optional<FrameIndex> total;
  std::vector<Seconds> arrivals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key=value");
    const auto key = text::trim(t.substr(0, eq));
    const auto value = text::parse_double(t.substr(eq + 1));
    if (!value) throw ParseError(source, lineno, "malformed number for '" + key + "'");
    if (key == "frame_interval_s") {
      if (!(*value > 0.0)) throw ParseError(source, lineno, "frame_interval_s must be > 0");
      interval = *value;
    } else if (key == "total_frames") {
      if (*value < 0 || std::floor(*value) != *value) throw ParseError(source, lineno, "total_frames must be a count");
      total = static_cast<FrameIndex>(*value);
    } else if (key == "arrival_s") {
      arrivals.push_back(*value);
    } else {
      throw ParseError(source, lineno, "unknown key '" + key + "'");
    }
  }
  if (!interval) throw ParseError(source, 0, "missing frame_interval_s");
  if (total && !arrivals.empty()) throw ParseError(source, 0, "give either total_frames or arrival_s lines, not both");
  try {
    if (total) return FrameFeed::uniform(*interval, *total);
    return FrameFeed(*interval, std::move(arrivals));
  } catch (const ArgumentError& e) {
    throw ParseError(source, 0, e.what());
  }
}

inline FrameFeed load_feed(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open feed file");
  return parse_feed(in, path);
}

/// Moves the span start back by round((previous_duration + delta) / interval) frames, clamped at 0.
inline ChunkSpan lookback_extend(const ChunkSpan& span, Seconds previous_duration, Seconds delta,
                                 const FrameTimeline& timeline) {
  if (delta < 0.0) throw ArgumentError("lookback delta must be >= 0");
  const auto back = static_cast<FrameIndex>(std::llround((previous_duration + delta) / timeline.frame_interval()));
  return ChunkSpan(std::max<FrameIndex>(0, span.start_frame() - std::max<FrameIndex>(back, 0)), span.end_frame());
}

/// Places `hyp` on the running transcript committed ++ pending (see file comment).
inline TokenSeq splice_onto_transcript(const TokenSeq& committed, const TokenSeq& pending, const TokenSeq& hyp) {
  TokenSeq context = committed;
  context.insert(context.end(), pending.begin(), pending.end());
  for (auto& t : context) t.log_prob.reset();

  std::size_t best_pos = context.size();
  std::size_t best_len = 0;
  for (std::size_t p = 0; p < context.size(); ++p) {
    std::size_t len = 0;
    while (p + len < context.size() && len < hyp.size() && context[p + len].text == hyp[len].text) ++len;
    if (len == 0) continue;
    // A placement inside the committed region must restate the rest of it.
    if (p < committed.size() && len < committed.size() - p) continue;
    if (len >= best_len) {
      best_len = len;
      best_pos = p;
    }
  }
  TokenSeq out(context.begin(), context.begin() + static_cast<std::ptrdiff_t>(best_pos));
  out.insert(out.end(), hyp.begin(), hyp.end());
  return out;
}

struct SessionEvent {
  Seconds time;
  std::string kind;
  std::string detail;

  bool operator==(const SessionEvent&) const = default;
};

/// Age of the oldest uncommitted material, sampled right after each step's recognizer call.
/// blocked is the recognizer time inside that age window, during which the engine cannot commit.
struct UncommittedSample {
  Seconds clock;
  Seconds age;
  Seconds processing_latency;
  Seconds blocked = 0.0;

  bool operator==(const UncommittedSample&) const = default;
};

struct SessionState {
  Seconds clock = 0.0;
  FrameIndex frames_available = 0;
  FrameIndex processed_upto = 0;
  TokenSeq committed;
  std::optional<Hypothesis> pending_best;  // latest accepted best, spliced onto the transcript
  std::optional<ChunkSpan> pending_span;
  std::optional<ChunkSpan> last_request_span;
  std::optional<FrameIndex> previous_chunk_frames;
  std::optional<Seconds> uncommitted_since;
  PolicyState policy_state;
  std::vector<SessionEvent> event_log;

  TokenSeq pending_tokens() const {
    if (!pending_best) return {};
    const auto& all = pending_best->tokens();
    if (all.size() <= committed.size()) return {};
    return TokenSeq(all.begin() + static_cast<std::ptrdiff_t>(committed.size()), all.end());
  }
};

struct SessionResult {
  CommitLog commit_log;
  std::vector<std::pair<RecognizerRequest, BeamSet>> requests;
  std::vector<Seconds> new_audio_durations;  // per request, excluding lookback context
  std::vector<DetectionVerdict> detections;
  std::size_t forced_commits = 0;
  std::size_t flush_commits = 0;
  Seconds total_processing = 0.0;
  std::vector<UncommittedSample> uncommitted_samples;
  std::vector<SessionEvent> event_log;

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(
        std::count_if(detections.begin(), detections.end(), [](const DetectionVerdict& v) { return v.flagged(); }));
  }

  Seconds max_call_latency() const {
    Seconds m = 0.0;
    for (const auto& [req, beams] : requests) m = std::max(m, beams.processing_latency());
    return m;
  }

  bool operator==(const SessionResult&) const = default;
};

class Session {
 public:
  Session(SessionConfig config, FrameFeed feed, const Recognizer& backend)
      : config_(std::move(config)), feed_(std::move(feed)), backend_(backend), log_(feed_.timeline()) {
    config_.validate();
    if (std::abs(feed_.timeline().frame_interval() - config_.chunk_interval) > 1e-12 ||
        std::abs(backend_.frame_interval() - config_.chunk_interval) > 1e-12) {
      throw ArgumentError("feed, backend and config disagree on the frame interval");
    }
    state_.policy_state = PolicyState(config_.policy.kind == PolicyKind::hold_n ? 1 : config_.policy.n);
  }

  /// Advances the session to `now` (>= current clock). Returns the tokens committed during the step.
  std::vector<CommitEvent> step(Seconds now) {
    if (now < state_.clock - kTimeEps) {
      throw ArgumentError("step time " + std::to_string(now) + " precedes session clock " + std::to_string(state_.clock));
    }
    state_.clock = std::max(state_.clock, now);
    ingest();

    std::vector<CommitEvent> emitted;
    Seconds latency = 0.0;
    const FrameIndex unprocessed = state_.frames_available - state_.processed_upto;
    if (unprocessed > 0) {
      if (timeline().duration_of(unprocessed) >= config_.min_duration_threshold - kTimeEps) {
        latency = recognize_and_commit(ChunkSpan(state_.processed_upto, state_.frames_available), emitted);
      } else {
        log_event("below_threshold", std::to_string(unprocessed) + " frame(s) waiting");
      }
    }

    if (state_.uncommitted_since) {
      const Seconds since = *state_.uncommitted_since;
      result_.uncommitted_samples.push_back({state_.clock, state_.clock - since, latency, busy_time_since(since)});
    }

    if (emitted.empty() && state_.uncommitted_since &&
        state_.clock - *state_.uncommitted_since > config_.max_uncommitted_duration + kTimeEps) {
      const auto pending = state_.pending_tokens();
      if (!pending.empty()) {
        commit(pending, *state_.pending_span, true, emitted);
        ++result_.forced_commits;
        log_event("forced_commit", std::to_string(pending.size()) + " token(s)");
      }
    }
    update_uncommitted_since(!emitted.empty());
    return emitted;
  }

  /// Stream end: one last call over any residual audio regardless of the duration threshold,
  /// then the pending remainder is committed.
  std::vector<CommitEvent> flush() {
    ingest();
    std::vector<CommitEvent> emitted;
    if (state_.processed_upto < state_.frames_available) {
      log_event("flush", "residual " + ChunkSpan(state_.processed_upto, state_.frames_available).to_string());
      recognize_and_commit(ChunkSpan(state_.processed_upto, state_.frames_available), emitted);
    }
    const auto pending = state_.pending_tokens();
    if (!pending.empty()) {
      commit(pending, *state_.pending_span, true, emitted);
      ++result_.flush_commits;
      log_event("flush_commit", std::to_string(pending.size()) + " token(s)");
    }
    update_uncommitted_since(!emitted.empty());
    return emitted;
  }

  /// Next time the loop should wake: the next frame arrival or the forced-commit deadline.
  std::optional<Seconds> next_wakeup() const {
    std::optional<Seconds> next;
    if (state_.frames_available < feed_.size()) next = feed_.arrival(state_.frames_available);
    if (state_.uncommitted_since && !state_.pending_tokens().empty()) {
      const Seconds deadline = *state_.uncommitted_since + config_.max_uncommitted_duration + 2 * kTimeEps;
      if (deadline > state_.clock && (!next || deadline < *next)) next = deadline;
    }
    return next;
  }

  bool all_frames_ingested() const { return state_.frames_available >= feed_.size(); }

  const SessionState& state() const noexcept { return state_; }
  const SessionConfig& config() const noexcept { return config_; }
  const FrameTimeline& timeline() const noexcept { return feed_.timeline(); }

  SessionResult result() const {
    SessionResult r = result_;
    r.commit_log = log_;
    r.event_log = state_.event_log;
    return r;
  }

 private:
  void ingest() {
    while (state_.frames_available < feed_.size() &&
           feed_.arrival(state_.frames_available) <= state_.clock + kTimeEps) {
      if (!state_.uncommitted_since) state_.uncommitted_since = feed_.arrival(state_.frames_available);
      ++state_.frames_available;
    }
  }

  // Returns the processing latency spent (0 when the call was suppressed).
  Seconds recognize_and_commit(const ChunkSpan& candidate, std::vector<CommitEvent>& emitted) {
    ChunkSpan span = candidate;
    if (config_.lookback_enabled && state_.previous_chunk_frames) {
      span = lookback_extend(candidate, timeline().duration_of(*state_.previous_chunk_frames), config_.lookback_delta,
                             timeline());
    }
    if (state_.last_request_span && *state_.last_request_span == span) {
      log_event("suppressed_identical", span.to_string());
      return 0.0;
    }

    const RecognizerRequest request{span, span != candidate, state_.clock};
    BeamSet raw = call_backend(request);
    const Seconds latency = raw.processing_latency();
    state_.clock += latency;
    result_.total_processing += latency;
    result_.requests.emplace_back(request, raw);
    result_.new_audio_durations.push_back(span_duration(candidate, timeline()));
    state_.last_request_span = span;
    state_.previous_chunk_frames = candidate.frame_count();
    state_.processed_upto = candidate.end_frame();
    log_event("call", span.to_string() + " latency=" + std::to_string(latency));

    const BeamSet beams = config_.glossary.empty() ? raw : rescore_beam(raw, config_.glossary, config_.glossary_alpha);
    const auto verdict = detect(beams.best(), span_duration(span, timeline()), config_);
    result_.detections.push_back(verdict);
    if (verdict.flagged()) {
      std::string why;
      for (auto r : verdict.reasons) why += std::string(why.empty() ? "" : ",") + to_string(r);
      log_event("flagged", span.to_string() + " " + why);
      return latency;
    }

    const auto pending = state_.pending_tokens();
    std::vector<Hypothesis> spliced;
    spliced.reserve(beams.beam_size());
    for (const auto& h : beams.hypotheses()) {
      spliced.emplace_back(splice_onto_transcript(state_.committed, pending, h.tokens()), h.avg_log_prob());
    }
    BeamSet lifted(std::move(spliced), latency);
    state_.pending_best = lifted.best();
    state_.pending_span = span;
    state_.policy_state.record(std::move(lifted));

    const auto candidate_prefix = apply_policy(config_.policy, state_.policy_state);
    commit(clip_to_committed(candidate_prefix, state_.committed), span, false, emitted);
    return latency;
  }

  BeamSet call_backend(const RecognizerRequest& request) {
    const std::string where = "session at t=" + std::to_string(state_.clock) + " s, span " + request.span.to_string();
    try {
      return backend_.recognize(request);
    } catch (const MissingRecordError& e) {
      throw MissingRecordError(where + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw ArgumentError(where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }

  void commit(const TokenSeq& tokens, const ChunkSpan& span, bool forced, std::vector<CommitEvent>& emitted) {
    for (const auto& t : tokens) {
      CommitEvent e{t, state_.clock, span, forced};
      log_.append(e);
      state_.committed.push_back(t);
      emitted.push_back(std::move(e));
    }
    if (!tokens.empty() && !forced) log_event("commit", concat_text(tokens));
  }

  // Frames that arrived while the recognizer was busy count even before the next ingest.
  void update_uncommitted_since(bool committed_now) {
    const bool pending = !state_.pending_tokens().empty();
    const bool waiting = state_.processed_upto < feed_.size() &&
                         feed_.arrival(state_.processed_upto) <= state_.clock + kTimeEps;
    if (!pending && !waiting) {
      state_.uncommitted_since.reset();
    } else if (committed_now) {
      state_.uncommitted_since = state_.clock;
    } else if (!state_.uncommitted_since) {
      state_.uncommitted_since = pending ? state_.clock : feed_.arrival(state_.processed_upto);
    }
  }

  Seconds busy_time_since(Seconds since) const {
    Seconds busy = 0.0;
    for (auto it = result_.requests.rbegin(); it != result_.requests.rend(); ++it) {
      const Seconds start = it->first.wall_time;
      const Seconds end = start + it->second.processing_latency();
      if (end <= since) break;
      busy += end - std::max(start, since);
    }
    return busy;
  }

  void log_event(std::string kind, std::string detail) {
    state_.event_log.push_back({state_.clock, std::move(kind), std::move(detail)});
  }

  SessionConfig config_;
  FrameFeed feed_;
  const Recognizer& backend_;
  SessionState state_;
  SessionResult result_{CommitLog(FrameTimeline()), {}, {}, {}, 0, 0, 0.0, {}, {}};
  CommitLog log_;
};

/// Drives a session to feed exhaustion, then flushes. Deterministic in (feed, config, backend).
inline SessionResult run_session(const FrameFeed& feed, const SessionConfig& config, const Recognizer& backend) {
  Session session(config, feed, backend);
  while (!session.all_frames_ingested()) {
    const auto wake = session.next_wakeup();
    session.step(std::max(session.state().clock, wake.value_or(session.state().clock)));
  }
  // Let the last frames reach the recognizer before flushing.
  session.step(session.state().clock);
  session.flush();
  return session.result();
}

}  // namespace simulst
