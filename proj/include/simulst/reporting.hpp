#pragma once

// Run configuration files, session scorecards and the plain-text formats the
// command-line tool reads and writes.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simulst/asr_backend.hpp"
#include "simulst/core_model.hpp"
#include "simulst/hallucination_control.hpp"
#include "simulst/latency_metrics.hpp"
#include "simulst/quality_metrics.hpp"
#include "simulst/session_engine.hpp"
#include "simulst/text.hpp"

namespace simulst {

/// Shortest text that parses back to the same double; "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw InvariantError("cannot format double");
  return std::string(buf.data(), ptr);
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

inline std::vector<std::string> read_lines_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_lines(in);
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  SessionConfig session;
  SyntheticModelConfig model;
  std::optional<std::string> glossary_file;
  std::optional<std::size_t> glossary_size;

  bool operator==(const RunConfig&) const = default;
};

struct ParameterInfo {
  std::string name;
  bool numeric;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline double number_or_throw(const std::string& name, const std::string& value) {
  const auto v = text::parse_double(value);
  if (!v || !std::isfinite(*v)) throw ArgumentError(name + ": expected a number, got '" + value + "'");
  return *v;
}

inline std::size_t count_or_throw(const std::string& name, const std::string& value) {
  const double v = number_or_throw(name, value);
  if (v < 0 || std::floor(v) != v || v > 1e15) throw ArgumentError(name + ": expected a count, got '" + value + "'");
  return static_cast<std::size_t>(v);
}

inline bool bool_or_throw(const std::string& name, const std::string& value) {
  const auto v = text::to_lower_ascii(text::trim(value));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ArgumentError(name + ": expected a boolean, got '" + value + "'");
}

inline ParameterInfo seconds_param(std::string name, Seconds SessionConfig::*field) {
  return {name, true,
          [name, field](RunConfig& c, const std::string& v) { c.session.*field = number_or_throw(name, v); },
          [field](const RunConfig& c) { return format_double(c.session.*field); }};
}

inline ParameterInfo model_param(std::string name, double SyntheticModelConfig::*field) {
  return {name, true, [name, field](RunConfig& c, const std::string& v) { c.model.*field = number_or_throw(name, v); },
          [field](const RunConfig& c) { return format_double(c.model.*field); }};
}

}  // namespace detail

/// Every key accepted in config files and by sweeps, in snapshot order.
inline const std::vector<ParameterInfo>& parameter_table() {
  using detail::model_param;
  using detail::seconds_param;
  static const std::vector<ParameterInfo> table = [] {
    std::vector<ParameterInfo> t;
    t.push_back(seconds_param("MIN_DURATION_THRESHOLD", &SessionConfig::min_duration_threshold));
    t.push_back(seconds_param("MAX_UNCOMMITTED_DURATION", &SessionConfig::max_uncommitted_duration));
    t.push_back(seconds_param("CHUNKSIZE", &SessionConfig::chunk_interval));
    t.push_back({"LOOKBACK_ENABLED", true,
                 [](RunConfig& c, const std::string& v) {
                   c.session.lookback_enabled = detail::bool_or_throw("LOOKBACK_ENABLED", v);
                 },
                 [](const RunConfig& c) { return std::string(c.session.lookback_enabled ? "1" : "0"); }});
    t.push_back(seconds_param("LOOKBACK_DELTA", &SessionConfig::lookback_delta));
    t.push_back({"POLICY", false,
                 [](RunConfig& c, const std::string& v) { c.session.policy.kind = parse_policy_kind(text::trim(v)); },
                 [](const RunConfig& c) { return std::string(to_string(c.session.policy.kind)); }});
    t.push_back({"POLICY_N", true,
                 [](RunConfig& c, const std::string& v) { c.session.policy.n = detail::count_or_throw("POLICY_N", v); },
                 [](const RunConfig& c) { return std::to_string(c.session.policy.n); }});
    t.push_back({"LOCAL_AGREEMENT", true,
                 [](RunConfig& c, const std::string& v) {
                   c.session.policy.kind = PolicyKind::la_n;
                   c.session.policy.n = detail::count_or_throw("LOCAL_AGREEMENT", v);
                 },
                 [](const RunConfig& c) {
                   return c.session.policy.kind == PolicyKind::la_n ? std::to_string(c.session.policy.n)
                                                                    : std::string("none");
                 }});
    t.push_back({"LOG_PROB_THRESHOLD", true,
                 [](RunConfig& c, const std::string& v) {
                   if (text::to_lower_ascii(text::trim(v)) == "none") {
                     c.session.log_prob_threshold.reset();
                   } else {
                     c.session.log_prob_threshold = detail::number_or_throw("LOG_PROB_THRESHOLD", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.session.log_prob_threshold ? format_double(*c.session.log_prob_threshold)
                                                       : std::string("none");
                 }});
    t.push_back(seconds_param("CPS_MAX", &SessionConfig::cps_max));
    t.push_back(seconds_param("CPS_MIN", &SessionConfig::cps_min));
    t.push_back(seconds_param("PUNCT_RATIO_MAX", &SessionConfig::punct_ratio_max));
    t.push_back(seconds_param("GLOSSARY_ALPHA", &SessionConfig::glossary_alpha));
    t.push_back({"GLOSSARY_SIZE", true,
                 [](RunConfig& c, const std::string& v) {
                   if (text::to_lower_ascii(text::trim(v)) == "none") {
                     c.glossary_size.reset();
                   } else {
                     c.glossary_size = detail::count_or_throw("GLOSSARY_SIZE", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.glossary_size ? std::to_string(*c.glossary_size) : std::string("none");
                 }});
    t.push_back({"GLOSSARY_FILE", false,
                 [](RunConfig& c, const std::string& v) {
                   const auto p = text::trim(v);
                   if (p.empty() || text::to_lower_ascii(p) == "none") {
                     c.glossary_file.reset();
                   } else {
                     c.glossary_file = p;
                   }
                 },
                 [](const RunConfig& c) { return c.glossary_file.value_or("none"); }});
    t.push_back({"SEED", true,
                 [](RunConfig& c, const std::string& v) { c.model.seed = detail::count_or_throw("SEED", v); },
                 [](const RunConfig& c) { return std::to_string(c.model.seed); }});
    t.push_back(model_param("BASE_LATENCY", &SyntheticModelConfig::base_latency));
    t.push_back(model_param("HALLUCINATION_LATENCY", &SyntheticModelConfig::hallucination_latency));
    t.push_back(model_param("HALLUCINATION_THRESHOLD", &SyntheticModelConfig::hallucination_threshold));
    t.push_back(model_param("HALLUCINATION_PROB", &SyntheticModelConfig::hallucination_prob));
    t.push_back(model_param("LATENCY_JITTER", &SyntheticModelConfig::latency_jitter));
    t.push_back({"BEAM_SIZE", true,
                 [](RunConfig& c, const std::string& v) { c.model.beam_size = detail::count_or_throw("BEAM_SIZE", v); },
                 [](const RunConfig& c) { return std::to_string(c.model.beam_size); }});
    return t;
  }();
  return table;
}

inline const ParameterInfo* find_parameter(const std::string& name) {
  const auto key = text::to_upper_ascii(text::trim(name));
  for (const auto& p : parameter_table()) {
    if (p.name == key) return &p;
  }
  return nullptr;
}

inline std::string parameter_names(bool numeric_only = false) {
  std::string out;
  for (const auto& p : parameter_table()) {
    if (numeric_only && !p.numeric) continue;
    out += (out.empty() ? "" : ", ") + p.name;
  }
  return out;
}

inline void set_parameter(RunConfig& config, const std::string& name, const std::string& value) {
  const auto* p = find_parameter(name);
  if (!p) throw ArgumentError("unknown parameter '" + name + "' (valid: " + parameter_names() + ")");
  p->set(config, value);
}

inline void validate(const RunConfig& config) {
  config.session.validate();
  config.model.validate();
}

/// KEY=value lines; keys are case-insensitive, '#' starts a comment line.
inline RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>") {
  RunConfig config;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto t = text::trim(lines[i]);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(source, i + 1, "expected KEY=value");
    try {
      set_parameter(config, text::trim(t.substr(0, eq)), text::trim(t.substr(eq + 1)));
    } catch (const Error& e) {
      throw ParseError(source, i + 1, e.what());
    }
  }
  try {
    validate(config);
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  return config;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open config file");
  return parse_run_config(in, path);
}

inline std::string run_config_to_text(const RunConfig& config) {
  std::string out;
  for (const auto& p : parameter_table()) {
    if (p.name == "LOCAL_AGREEMENT") continue;  // implied by POLICY and POLICY_N
    out += p.name + "=" + p.get(config) + "\n";
  }
  return out;
}

/// One glossary term (word or phrase) per line; blank lines and '#' comments skipped.
inline std::vector<std::string> parse_glossary(std::istream& in) {
  std::vector<std::string> out;
  for (const auto& line : read_lines(in)) {
    const auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.push_back(t);
  }
  return out;
}

inline std::vector<std::string> load_glossary(const std::string& path, std::optional<std::size_t> limit = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open glossary file");
  auto terms = parse_glossary(in);
  if (limit && terms.size() > *limit) terms.resize(*limit);
  return terms;
}

// ---------------------------------------------------------------------------
// Session scorecard

struct ReportInputs {
  Seconds source_duration = 0.0;
  std::size_t source_token_count = 0;  // |X|
  std::optional<std::vector<std::string>> reference_words;
  std::optional<std::vector<std::string>> nouns;
  LexicalMeasure pn_measure = LexicalMeasure::jaro_winkler;
  bool normalize = true;
};

struct Metrics {
  std::optional<double> AL, DAL, LAAL, ATD, AP, HR, HR_raw, WER, CER, BLEU, PN, PN_raw, RTF;
};

inline const std::array<Seconds, 5> kLatencyBucketEdges{0.1, 0.2, 0.5, 1.0, 2.0};

struct MetricReport {
  std::string session_id;
  std::string backend;
  RunConfig config;
  Metrics metrics;
  std::size_t target_token_count = 0;
  std::size_t source_token_count = 0;
  Seconds source_duration = 0.0;
  std::size_t request_count = 0;
  std::map<std::string, std::size_t> detections;  // reason name -> count
  std::size_t flagged_calls = 0;
  std::size_t forced_commits = 0;
  std::size_t flush_commits = 0;
  std::array<std::size_t, kLatencyBucketEdges.size() + 1> latency_histogram{};
  std::string output_text;
  bool normalized = true;
  LexicalMeasure pn_measure = LexicalMeasure::jaro_winkler;
};

inline std::vector<std::string> scoring_words(const std::string& s, bool normalize) {
  return normalize ? text::normalize_words(s) : text::split_whitespace(s);
}

/// Share of hypothesis words the edit alignment leaves unmatched to any reference word (insertions).
inline double unaligned_rate(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  if (hypothesis.empty()) throw ArgumentError("hallucination rate is undefined for empty output");
  const auto a = align_words(reference, hypothesis);
  return static_cast<double>(a.insertions) / static_cast<double>(hypothesis.size());
}

/// Commit-log timing in the shape the latency metrics consume. AP pairs each
/// request's new audio with the output committed on its behalf.
inline LatencyInput latency_input(const SessionResult& result, Seconds source_duration,
                                  std::size_t source_token_count, std::size_t reference_target_count = 0) {
  LatencyInput in;
  in.commit_times = result.commit_log.commit_times();
  in.source_token_count = source_token_count;
  in.reference_target_count = reference_target_count;
  in.source_duration = source_duration;
  in.processing_total = result.total_processing;
  const Seconds unit = source_token_count ? source_duration / static_cast<double>(source_token_count) : 0.0;
  std::map<std::pair<FrameIndex, FrameIndex>, std::size_t> per_span;
  for (const auto& e : result.commit_log.events()) ++per_span[{e.source_span.start_frame(), e.source_span.end_frame()}];
  for (std::size_t r = 0; r < result.requests.size(); ++r) {
    const auto& span = result.requests[r].first.span;
    const auto it = per_span.find({span.start_frame(), span.end_frame()});
    in.segment_durations_source.push_back(result.new_audio_durations.at(r));
    in.segment_durations_target.push_back(it == per_span.end() ? 0.0 : static_cast<double>(it->second) * unit);
  }
  return in;
}

inline MetricReport build_report(const SessionResult& result, const ReportInputs& inputs, const RunConfig& config,
                                 std::string session_id, std::string backend) {
  MetricReport r;
  r.session_id = std::move(session_id);
  r.backend = std::move(backend);
  r.config = config;
  r.source_duration = inputs.source_duration;
  r.source_token_count = inputs.source_token_count;
  r.request_count = result.requests.size();
  r.flagged_calls = result.flagged_count();
  r.forced_commits = result.forced_commits;
  r.flush_commits = result.flush_commits;
  r.output_text = result.commit_log.text();
  r.target_token_count = result.commit_log.size();
  r.normalized = inputs.normalize;
  r.pn_measure = inputs.pn_measure;

  for (auto reason : kAllDetectionReasons) r.detections[to_string(reason)] = 0;
  for (const auto& v : result.detections) {
    for (auto reason : v.reasons) ++r.detections[to_string(reason)];
  }
  for (const auto& [req, beams] : result.requests) {
    std::size_t b = 0;
    while (b < kLatencyBucketEdges.size() && beams.processing_latency() > kLatencyBucketEdges[b]) ++b;
    ++r.latency_histogram[b];
  }

  auto& m = r.metrics;
  if (inputs.source_duration > 0.0) m.RTF = real_time_factor(result.total_processing, inputs.source_duration);

  const auto hyp_words = scoring_words(r.output_text, inputs.normalize);
  const std::size_t ref_len = inputs.reference_words ? inputs.reference_words->size() : 0;
  if (r.target_token_count > 0 && inputs.source_token_count > 0) {
    const auto in = latency_input(result, inputs.source_duration, inputs.source_token_count, ref_len);
    m.AL = average_lagging(in);
    m.DAL = differentiable_average_lagging(in);
    m.ATD = average_target_delay(in);
    if (!in.segment_durations_source.empty()) m.AP = average_proportion(in);
    if (ref_len > 0) m.LAAL = length_adaptive_al(in);
  }

  if (inputs.reference_words) {
    const auto& ref = *inputs.reference_words;
    if (!ref.empty()) {
      m.WER = wer(ref, hyp_words);
      m.CER = cer(text::join(ref), text::join(hyp_words), false);
      m.BLEU = bleu(ref, hyp_words);
    }
    if (!hyp_words.empty()) m.HR = unaligned_rate(ref, hyp_words);
    std::vector<std::string> raw_words;
    for (const auto& [req, beams] : result.requests) {
      for (auto& w : scoring_words(beams.best().text(), inputs.normalize)) raw_words.push_back(std::move(w));
    }
    if (!raw_words.empty()) m.HR_raw = unaligned_rate(ref, raw_words);
  }
  if (inputs.nouns && !inputs.nouns->empty()) {
    const auto pn = proper_noun_score(*inputs.nouns, text::split_whitespace(r.output_text), inputs.pn_measure);
    m.PN = pn.score;
    m.PN_raw = pn.raw_max_sum;
  }
  return r;
}

inline nlohmann::ordered_json provenance_json(const MetricReport& r) {
  nlohmann::ordered_json p;
  p["lagging_units"] = "lagging offsets in source-token units scaled by source_duration/|X| to seconds";
  p["atd_expected_times"] = "ATD expected time t_i = i/|Y| * source_duration";
  p["laal_lambda"] = "LAAL lambda = max(|Y|, |Y*|)/|X|";
  p["normalization"] = r.normalized ? "WER/CER/BLEU/HR on case-folded words with edge punctuation stripped" : "raw whitespace tokens";
  p["bleu"] = "BLEU unsmoothed, n-gram counts pooled before the formula";
  p["proper_nouns"] = std::string("PN = mean of per-noun window maxima (") + to_string(r.pn_measure) +
            "); PN_raw = sum of maxima";
  p["glossary_rescoring"] = "glossary rescoring shifts token log-probs by log(alpha) / log(1 - alpha)";
  p["dal_trajectory"] = "tau[t] = max(commit_time[t], tau[t-1] + (source_duration/|X|)/lambda), read count t";
  p["HR"] = "share of output words the edit alignment inserts; HR_raw over every call's best hypothesis";
  p["AP"] = "per-call new audio vs. output committed for that call at source_duration/|X| per token";
  return p;
}

inline nlohmann::ordered_json report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["session_id"] = r.session_id;
  j["backend"] = r.backend;
  nlohmann::ordered_json cfg;
  for (const auto& p : parameter_table()) {
    if (p.name == "LOCAL_AGREEMENT") continue;
    cfg[p.name] = p.get(r.config);
  }
  nlohmann::ordered_json glossary = nlohmann::ordered_json::array();
  for (const auto& g : r.config.session.glossary) glossary.push_back(g);
  cfg["GLOSSARY_TERMS"] = glossary;
  j["config"] = cfg;

  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  const auto put = [&m](const char* name, const std::optional<double>& v) {
    if (v) m[name] = *v;
  };
  put("AL", r.metrics.AL);
  put("DAL", r.metrics.DAL);
  put("LAAL", r.metrics.LAAL);
  put("ATD", r.metrics.ATD);
  put("AP", r.metrics.AP);
  put("HR", r.metrics.HR);
  put("HR_raw", r.metrics.HR_raw);
  put("WER", r.metrics.WER);
  put("CER", r.metrics.CER);
  put("BLEU", r.metrics.BLEU);
  put("PN", r.metrics.PN);
  put("PN_raw", r.metrics.PN_raw);
  put("RTF", r.metrics.RTF);
  j["metrics"] = m;
  j["provenance"] = provenance_json(r);

  j["source_duration"] = r.source_duration;
  j["source_token_count"] = r.source_token_count;
  j["target_token_count"] = r.target_token_count;
  j["request_count"] = r.request_count;
  j["flagged_calls"] = r.flagged_calls;
  nlohmann::ordered_json det;
  for (auto reason : kAllDetectionReasons) det[to_string(reason)] = r.detections.at(to_string(reason));
  j["detections"] = det;
  j["forced_commits"] = r.forced_commits;
  j["flush_commits"] = r.flush_commits;
  nlohmann::ordered_json hist;
  for (std::size_t b = 0; b < r.latency_histogram.size(); ++b) {
    const std::string label =
        b < kLatencyBucketEdges.size() ? "<=" + format_double(kLatencyBucketEdges[b])
                                       : ">" + format_double(kLatencyBucketEdges.back());
    hist[label] = r.latency_histogram[b];
  }
  j["latency_histogram"] = hist;
  j["output"] = r.output_text;
  return j;
}

inline std::string report_to_text(const MetricReport& r) { return report_to_json(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Commit-log dump (JSON lines): one header line, then one line per commit.

struct CommitLogDump {
  Seconds frame_interval = FrameTimeline::kDefaultInterval;
  Seconds source_duration = 0.0;
  std::size_t source_token_count = 0;
  std::size_t reference_target_count = 0;
  Seconds processing_total = 0.0;
  std::vector<CommitEvent> events;
};

inline std::string commit_log_to_jsonl(const CommitLogDump& d) {
  nlohmann::ordered_json h;
  h["kind"] = "header";
  h["frame_interval"] = d.frame_interval;
  h["source_duration"] = d.source_duration;
  h["source_token_count"] = d.source_token_count;
  h["reference_target_count"] = d.reference_target_count;
  h["processing_total"] = d.processing_total;
  std::string out = h.dump() + "\n";
  for (const auto& e : d.events) {
    nlohmann::ordered_json j;
    j["kind"] = "commit";
    j["token"] = e.token.text;
    if (e.token.log_prob) j["log_prob"] = *e.token.log_prob;
    j["commit_time"] = e.commit_time;
    j["span"] = {e.source_span.start_frame(), e.source_span.end_frame()};
    j["forced"] = e.forced;
    out += j.dump() + "\n";
  }
  return out;
}

inline CommitLogDump parse_commit_log(std::istream& in, const std::string& source = "<commit-log>") {
  CommitLogDump d;
  bool header = false;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        d.frame_interval = j.at("frame_interval").get<double>();
        d.source_duration = j.at("source_duration").get<double>();
        d.source_token_count = j.at("source_token_count").get<std::size_t>();
        d.reference_target_count = j.at("reference_target_count").get<std::size_t>();
        d.processing_total = j.at("processing_total").get<double>();
        header = true;
      } else if (kind == "commit") {
        std::optional<double> lp;
        if (j.contains("log_prob")) lp = j.at("log_prob").get<double>();
        const auto& span = j.at("span");
        d.events.push_back({Token(j.at("token").get<std::string>(), lp), j.at("commit_time").get<double>(),
                            ChunkSpan(span.at(0).get<FrameIndex>(), span.at(1).get<FrameIndex>()),
                            j.at("forced").get<bool>()});
      } else {
        throw ParseError(source, i + 1, "unknown record kind '" + kind + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, i + 1, e.what());
    }
  }
  if (!header) throw ParseError(source, 0, "missing header record");
  return d;
}

// ---------------------------------------------------------------------------
// Table-1-style rows: model<TAB>BLEU<TAB>AL<TAB>AP<TAB>DAL, "nan" for missing.

struct Table1Row {
  std::string model;
  std::optional<double> bleu, al, ap, dal;

  bool operator==(const Table1Row&) const = default;
};

inline const char* kTable1Header = "model\tBLEU\tAL\tAP\tDAL";

inline std::string table1_row_to_line(const Table1Row& row) {
  if (row.model.empty() || row.model.find_first_of("\t\n\r") != std::string::npos) {
    throw ArgumentError("model name must be non-empty and free of tabs and newlines");
  }
  const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
  return row.model + "\t" + cell(row.bleu) + "\t" + cell(row.al) + "\t" + cell(row.ap) + "\t" + cell(row.dal);
}

inline Table1Row parse_table1_row(const std::string& line, const std::string& source = "<table>", std::size_t lineno = 0) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, '\t')) f.push_back(cell);
  if (!line.empty() && line.back() == '\t') f.emplace_back();
  if (f.size() != 5) throw ParseError(source, lineno, "expected 5 tab-separated columns, got " + std::to_string(f.size()));
  Table1Row row;
  row.model = f[0];
  if (row.model.empty()) throw ParseError(source, lineno, "empty model name");
  const auto num = [&](const std::string& s) -> std::optional<double> {
    if (text::to_lower_ascii(text::trim(s)) == "nan") return std::nullopt;
    const auto v = text::parse_double(s);
    if (!v || std::isnan(*v)) throw ParseError(source, lineno, "malformed number '" + s + "'");
    return v;
  };
  row.bleu = num(f[1]);
  row.al = num(f[2]);
  row.ap = num(f[3]);
  row.dal = num(f[4]);
  return row;
}

inline std::string table1_to_text(const std::vector<Table1Row>& rows) {
  std::string out = std::string(kTable1Header) + "\n";
  for (const auto& r : rows) out += table1_row_to_line(r) + "\n";
  return out;
}

inline std::vector<Table1Row> parse_table1(std::istream& in, const std::string& source = "<table>") {
  const auto lines = read_lines(in);
  std::vector<Table1Row> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i].front() == '#') continue;
    if (i == 0 && lines[i] == kTable1Header) continue;
    rows.push_back(parse_table1_row(lines[i], source, i + 1));
  }
  return rows;
}

inline Table1Row table1_row(const MetricReport& r) {
  return {r.session_id, r.metrics.BLEU, r.metrics.AL, r.metrics.AP, r.metrics.DAL};
}

// ---------------------------------------------------------------------------
// Offline scoring inputs

/// One line of `j-i` pairs (1-based source j, target i) per segment; an empty line is an empty alignment.
inline std::vector<AlignmentSet> parse_alignments(std::istream& in, const std::string& source = "<alignment>") {
  std::vector<AlignmentSet> out;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<AlignmentSet::Pair> pairs;
    for (const auto& item : text::split_whitespace(lines[i])) {
      const auto dash = item.find('-');
      std::int64_t j = 0, k = 0;
      const auto* b = item.data();
      const auto* e = item.data() + item.size();
      if (dash == std::string::npos || std::from_chars(b, b + dash, j).ptr != b + dash ||
          std::from_chars(b + dash + 1, e, k).ptr != e) {
        throw ParseError(source, i + 1, "malformed alignment pair '" + item + "'");
      }
      pairs.emplace_back(j, k);
    }
    try {
      out.emplace_back(pairs);
    } catch (const ArgumentError& e) {
      throw ParseError(source, i + 1, e.what());
    }
  }
  return out;
}

/// Noun phrases separated by '|', one line per segment.
inline std::vector<std::vector<std::string>> parse_noun_lines(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : lines) {
    std::vector<std::string> nouns;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, '|')) {
      auto t = text::trim(item);
      if (!t.empty()) nouns.push_back(std::move(t));
    }
    out.push_back(std::move(nouns));
  }
  return out;
}

}  // namespace simulst
