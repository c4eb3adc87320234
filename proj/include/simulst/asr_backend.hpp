#pragma once

// Recognizer backends queried by the session engine. Both are immutable after
// construction and answer deterministically: the same span (and seed) always
// produces a bit-identical BeamSet.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulst/core_model.hpp"

namespace simulst {

struct RecognizerRequest {
  ChunkSpan span;
  bool lookback_applied = false;
  Seconds wall_time = 0.0;

  bool operator==(const RecognizerRequest&) const = default;
};

class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual BeamSet recognize(const RecognizerRequest& request) const = 0;
  virtual Seconds frame_interval() const = 0;
  /// Number of frames the backend can describe, used when no explicit feed is given.
  virtual FrameIndex natural_frame_count() const = 0;
};

// ---------------------------------------------------------------------------
// Trace replay

struct TraceRecord {
  ChunkSpan span;
  BeamSet beam;
};

namespace detail {

inline FrameIndex quantize(double seconds, Seconds interval, const std::string& source, std::size_t line,
                           const char* field) {
  if (!std::isfinite(seconds) || seconds < 0.0) {
    throw ParseError(source, line, std::string(field) + " must be a finite non-negative number");
  }
  const double frames = seconds / interval;
  const double rounded = std::round(frames);
  if (std::abs(frames - rounded) > 1e-6) {
    throw ParseError(source, line, std::string(field) + "=" + std::to_string(seconds) +
                                       " is not on the " + std::to_string(interval) + " s frame grid");
  }
  return static_cast<FrameIndex>(rounded);
}

inline Hypothesis hypothesis_from_json(const nlohmann::json& j) {
  TokenSeq tokens;
  for (const auto& t : j.at("tokens")) {
    std::optional<double> lp;
    if (t.contains("logprob") && !t.at("logprob").is_null()) lp = t.at("logprob").get<double>();
    tokens.emplace_back(t.at("text").get<std::string>(), lp);
  }
  if (j.contains("avg_logprob")) return Hypothesis(std::move(tokens), j.at("avg_logprob").get<double>());
  return Hypothesis(std::move(tokens));
}

inline nlohmann::ordered_json hypothesis_to_json(const Hypothesis& h) {
  nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
  for (const auto& t : h.tokens()) {
    nlohmann::ordered_json jt;
    jt["text"] = t.text;
    if (t.log_prob) jt["logprob"] = *t.log_prob;
    tokens.push_back(std::move(jt));
  }
  nlohmann::ordered_json out;
  out["tokens"] = std::move(tokens);
  out["avg_logprob"] = h.avg_log_prob();
  return out;
}

}  // namespace detail

class TraceBackend final : public Recognizer {
 public:
  TraceBackend(Seconds frame_interval, std::vector<TraceRecord> records) : frame_interval_(frame_interval) {
    for (auto& r : records) {
      const auto key = std::make_pair(r.span.start_frame(), r.span.end_frame());
      if (!records_.emplace(key, std::move(r)).second) {
        throw ArgumentError("duplicate trace record for span [" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ")");
      }
    }
  }

  BeamSet recognize(const RecognizerRequest& request) const override {
    const auto it = records_.find({request.span.start_frame(), request.span.end_frame()});
    if (it == records_.end()) {
      throw MissingRecordError("trace has no record for span " + request.span.to_string());
    }
    return it->second.beam;
  }

  Seconds frame_interval() const override { return frame_interval_; }

  FrameIndex natural_frame_count() const override {
    FrameIndex n = 0;
    for (const auto& [key, r] : records_) n = std::max(n, key.second);
    return n;
  }

  std::size_t size() const noexcept { return records_.size(); }

  std::vector<TraceRecord> records() const {
    std::vector<TraceRecord> out;
    for (const auto& [key, r] : records_) out.push_back(r);
    return out;
  }

 private:
  Seconds frame_interval_;
  std::map<std::pair<FrameIndex, FrameIndex>, TraceRecord> records_;
};

/// One JSON object per line: start_s, end_s, latency_s, beam[{tokens[{text, logprob?}], avg_logprob}].
inline std::string trace_record_to_line(const TraceRecord& r, Seconds frame_interval) {
  nlohmann::ordered_json j;
  j["start_s"] = static_cast<double>(r.span.start_frame()) * frame_interval;
  j["end_s"] = static_cast<double>(r.span.end_frame()) * frame_interval;
  j["latency_s"] = r.beam.processing_latency();
  nlohmann::ordered_json beam = nlohmann::ordered_json::array();
  for (const auto& h : r.beam.hypotheses()) beam.push_back(detail::hypothesis_to_json(h));
  j["beam"] = std::move(beam);
  return j.dump();
}

inline TraceBackend parse_trace(std::istream& in, Seconds frame_interval, const std::string& source = "<trace>") {
  std::vector<TraceRecord> records;
  std::map<std::pair<FrameIndex, FrameIndex>, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto start = detail::quantize(j.at("start_s").get<double>(), frame_interval, source, lineno, "start_s");
      const auto end = detail::quantize(j.at("end_s").get<double>(), frame_interval, source, lineno, "end_s");
      if (start >= end) throw ParseError(source, lineno, "span start must precede end");
      const auto [it, fresh] = seen.emplace(std::make_pair(start, end), lineno);
      if (!fresh) {
        throw ParseError(source, lineno, "duplicate span, first defined on line " + std::to_string(it->second));
      }
      std::vector<Hypothesis> hyps;
      for (const auto& h : j.at("beam")) hyps.push_back(detail::hypothesis_from_json(h));
      records.push_back({ChunkSpan(start, end), BeamSet(std::move(hyps), j.at("latency_s").get<double>())});
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return TraceBackend(frame_interval, std::move(records));
}

inline TraceBackend load_trace(const std::string& path, Seconds frame_interval) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open trace file");
  return parse_trace(in, frame_interval, path);
}

// ---------------------------------------------------------------------------
// Synthetic hallucination model

struct ScriptWord {
  Seconds end_time;
  std::string word;
  std::optional<Seconds> latency_override;
};

struct SyntheticModelConfig {
  Seconds base_latency = 0.15;
  Seconds hallucination_latency = 1.882;
  Seconds hallucination_threshold = 0.7;
  double hallucination_prob = 1.0;
  std::vector<std::string> canned_outputs{"Thanks for watching.", "Thank you for watching. Have a great day."};
  double hallucination_avg_log_prob = -0.15;
  double valid_log_prob = -0.35;
  std::size_t beam_size = 2;
  Seconds latency_jitter = 0.0;  // uniform +/- jitter on valid outputs; 0 disables
  std::uint64_t seed = 0;

  void validate() const {
    if (base_latency < 0.0 || hallucination_latency < 0.0) throw ArgumentError("latencies must be >= 0");
    if (!(hallucination_prob >= 0.0 && hallucination_prob <= 1.0)) {
      throw ArgumentError("hallucination_prob must lie in [0, 1]");
    }
    if (canned_outputs.empty()) throw ArgumentError("need at least one canned output");
    if (beam_size < 1) throw ArgumentError("beam_size must be >= 1");
    if (latency_jitter < 0.0 || latency_jitter > base_latency) throw ArgumentError("latency_jitter must lie in [0, base_latency]");
    if (hallucination_avg_log_prob > 0.0 || valid_log_prob > 0.0) throw ArgumentError("log probabilities must be <= 0");
  }

  bool operator==(const SyntheticModelConfig&) const = default;
};

namespace detail {

// Uniform [0, 1) draw keyed by (seed, span, salt); independent of call order.
inline double keyed_uniform(std::uint64_t seed, FrameIndex start, FrameIndex end, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(end),
                    static_cast<std::uint32_t>(salt)};
  std::mt19937_64 gen(seq);
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace detail

class SyntheticBackend final : public Recognizer {
 public:
  SyntheticBackend(std::vector<ScriptWord> script, SyntheticModelConfig config, Seconds frame_interval)
      : script_(std::move(script)), config_(std::move(config)), frame_interval_(frame_interval) {
    config_.validate();
    if (!(frame_interval > 0.0)) throw ArgumentError("frame_interval must be > 0");
    for (std::size_t i = 0; i < script_.size(); ++i) {
      if (script_[i].end_time < 0.0) throw ArgumentError("script end times must be >= 0");
      if (i > 0 && script_[i].end_time < script_[i - 1].end_time) {
        throw ArgumentError("script end times must be non-decreasing (word " + std::to_string(i + 1) + ")");
      }
      (void)Token(script_[i].word);  // validates the word text
    }
  }

  /// Frame during which a word ends (a word ending on a boundary belongs to the earlier frame).
  FrameIndex word_frame(const ScriptWord& w) const {
    const auto k = static_cast<FrameIndex>(std::ceil(w.end_time / frame_interval_ - 1e-9)) - 1;
    return std::max<FrameIndex>(k, 0);
  }

  std::vector<ScriptWord> words_in(const ChunkSpan& span) const {
    std::vector<ScriptWord> out;
    for (const auto& w : script_) {
      const auto f = word_frame(w);
      if (f >= span.start_frame() && f < span.end_frame()) out.push_back(w);
    }
    return out;
  }

  /// Hallucination fires only for spans strictly shorter than the threshold.
  bool hallucinates(const ChunkSpan& span) const {
    const Seconds duration = static_cast<Seconds>(span.frame_count()) * frame_interval_;
    if (!(duration < config_.hallucination_threshold - 1e-9)) return false;
    return detail::keyed_uniform(config_.seed, span.start_frame(), span.end_frame(), 1) < config_.hallucination_prob;
  }

  BeamSet recognize(const RecognizerRequest& request) const override {
    const auto& span = request.span;
    if (hallucinates(span)) {
      const auto pick = static_cast<std::size_t>(
          detail::keyed_uniform(config_.seed, span.start_frame(), span.end_frame(), 2) *
          static_cast<double>(config_.canned_outputs.size()));
      const auto& canned = config_.canned_outputs[std::min(pick, config_.canned_outputs.size() - 1)];
      TokenSeq tokens;
      for (auto& w : text::split_whitespace(canned)) tokens.emplace_back(std::move(w), config_.hallucination_avg_log_prob);
      return BeamSet({Hypothesis(std::move(tokens), config_.hallucination_avg_log_prob)}, config_.hallucination_latency);
    }

    const auto words = words_in(span);
    Seconds latency = config_.base_latency;
    if (config_.latency_jitter > 0.0) {
      const double u = detail::keyed_uniform(config_.seed, span.start_frame(), span.end_frame(), 3);
      latency += (2.0 * u - 1.0) * config_.latency_jitter;
    }
    for (const auto& w : words) {
      if (w.latency_override) latency = std::max(latency, *w.latency_override);
    }

    // Beam entry b drops the last b words and scores progressively lower.
    std::vector<Hypothesis> beam;
    for (std::size_t b = 0; b < config_.beam_size; ++b) {
      const double lp = config_.valid_log_prob - 0.2 * static_cast<double>(b);
      TokenSeq tokens;
      const std::size_t keep = words.size() > b ? words.size() - b : 0;
      for (std::size_t i = 0; i < keep; ++i) tokens.emplace_back(words[i].word, lp);
      beam.emplace_back(std::move(tokens), lp);
    }
    return BeamSet(std::move(beam), latency);
  }

  Seconds frame_interval() const override { return frame_interval_; }

  FrameIndex natural_frame_count() const override {
    if (script_.empty()) return 0;
    return word_frame(script_.back()) + 1;
  }

  const std::vector<ScriptWord>& script() const noexcept { return script_; }
  const SyntheticModelConfig& config() const noexcept { return config_; }

 private:
  std::vector<ScriptWord> script_;
  SyntheticModelConfig config_;
  Seconds frame_interval_;
};

/// Script lines: end_time_s<TAB>word[<TAB>latency_override_s]. Blank lines and '#' comments are skipped.
inline std::vector<ScriptWord> parse_script(std::istream& in, const std::string& source = "<script>") {
  std::vector<ScriptWord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(source, lineno, "expected end_time_s<TAB>word[<TAB>latency_override_s]");
    }
    ScriptWord w;
    const auto end_time = text::parse_double(fields[0]);
    if (!end_time) throw ParseError(source, lineno, "malformed end time '" + fields[0] + "'");
    w.end_time = *end_time;
    if (fields.size() == 3) {
      w.latency_override = text::parse_double(fields[2]);
      if (!w.latency_override) throw ParseError(source, lineno, "malformed latency override '" + fields[2] + "'");
    }
    w.word = text::trim(fields[1]);
    if (w.word.empty() || w.word.find_first_of(" \t") != std::string::npos) {
      throw ParseError(source, lineno, "word must be a single non-empty token");
    }
    if (!out.empty() && w.end_time < out.back().end_time) {
      throw ParseError(source, lineno, "end times must be non-decreasing");
    }
    if (w.latency_override && *w.latency_override < 0.0) throw ParseError(source, lineno, "latency must be >= 0");
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<ScriptWord> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open script file");
  return parse_script(in, path);
}

inline SyntheticBackend synthesize_script(std::vector<ScriptWord> script, SyntheticModelConfig config,
                                          Seconds frame_interval = FrameTimeline::kDefaultInterval) {
  return SyntheticBackend(std::move(script), std::move(config), frame_interval);
}

}  // namespace simulst
