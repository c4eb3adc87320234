#pragma once

// Subcommand bodies for the simulst tool. Argument parsing lives in
// tools/simulst.cpp; everything here takes plain option structs so the
// commands can be driven from tests.
//
// Exit codes: 0 success, 1 internal invariant violation, 2 input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simulst/asr_backend.hpp"
#include "simulst/reporting.hpp"
#include "simulst/session_engine.hpp"

namespace simulst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

inline constexpr const char* kReportDirEnv = "SIMULST_REPORT_DIR";

/// Relative output paths are placed under $SIMULST_REPORT_DIR when it is set.
inline std::filesystem::path output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kReportDirEnv); dir && *dir) return std::filesystem::path(dir) / p;
  }
  return p;
}

inline void write_output(const std::optional<std::string>& path, const std::string& content, std::ostream& fallback) {
  if (!path) {
    fallback << content;
    return;
  }
  const auto p = output_path(*path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + p.string());
  out << content;
  if (!out) throw ArgumentError("failed writing " + p.string());
}

/// Maps library exceptions onto exit codes and prints the diagnostic.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

struct SessionInputs {
  std::string backend;  // "trace:PATH" or "synthetic:PATH"
  std::optional<std::string> config_path;
  std::optional<std::string> reference_path;
  std::optional<std::string> nouns_path;
  std::optional<std::string> feed_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the config file
  bool normalize = true;
  LexicalMeasure pn_measure = LexicalMeasure::jaro_winkler;
};

/// Everything one session needs, loaded once and reusable across grid points.
struct LoadedInputs {
  RunConfig config;
  std::string backend_kind;
  std::string backend_path;
  std::vector<ScriptWord> script;
  std::optional<std::vector<std::string>> reference_words;
  std::optional<std::vector<std::string>> nouns;
  std::optional<FrameFeed> feed;
  std::filesystem::path config_dir;
};

inline LoadedInputs load_inputs(const SessionInputs& in) {
  LoadedInputs li;
  const auto colon = in.backend.find(':');
  if (colon == std::string::npos) throw ArgumentError("--backend must be trace:PATH or synthetic:PATH");
  li.backend_kind = in.backend.substr(0, colon);
  li.backend_path = in.backend.substr(colon + 1);
  if (li.backend_kind != "trace" && li.backend_kind != "synthetic") {
    throw ArgumentError("unknown backend '" + li.backend_kind + "' (expected trace or synthetic)");
  }
  if (li.backend_path.empty()) throw ArgumentError("--backend is missing a path");

  if (in.config_path) {
    li.config = load_run_config(*in.config_path);
    li.config_dir = std::filesystem::path(*in.config_path).parent_path();
  }
  for (const auto& [k, v] : in.overrides) set_parameter(li.config, k, v);
  if (in.seed) li.config.model.seed = *in.seed;
  validate(li.config);

  if (li.backend_kind == "synthetic") li.script = load_script(li.backend_path);
  if (in.reference_path) {
    std::string all;
    for (const auto& line : read_lines_file(*in.reference_path)) all += line + "\n";
    li.reference_words = scoring_words(all, in.normalize);
  }
  if (in.nouns_path) {
    std::vector<std::string> nouns;
    for (auto& row : parse_noun_lines(read_lines_file(*in.nouns_path))) {
      for (auto& n : row) nouns.push_back(std::move(n));
    }
    li.nouns = std::move(nouns);
  }
  if (in.feed_path) li.feed = load_feed(*in.feed_path);
  return li;
}

/// Loads GLOSSARY_FILE (relative paths fall back to the config file's directory).
inline RunConfig with_glossary(const LoadedInputs& li, RunConfig config) {
  if (config.glossary_file) {
    std::filesystem::path g(*config.glossary_file);
    if (g.is_relative() && !li.config_dir.empty() && !std::filesystem::exists(g)) g = li.config_dir / g;
    config.session.glossary = load_glossary(g.string(), config.glossary_size);
  }
  return config;
}

struct SessionOutcome {
  SessionResult result;
  ReportInputs report_inputs;
};

/// Builds the backend for `config` and runs one session.
inline SessionOutcome run_loaded(const LoadedInputs& li, RunConfig config, const SessionInputs& opts) {
  config = with_glossary(li, std::move(config));
  validate(config);
  const Seconds interval = config.session.chunk_interval;

  std::unique_ptr<Recognizer> backend;
  if (li.backend_kind == "trace") {
    backend = std::make_unique<TraceBackend>(load_trace(li.backend_path, interval));
  } else {
    backend = std::make_unique<SyntheticBackend>(li.script, config.model, interval);
  }
  const FrameFeed feed = li.feed ? *li.feed : FrameFeed::uniform(interval, backend->natural_frame_count());
  if (feed.size() == 0) throw ArgumentError("nothing to stream: the feed has no frames");

  SessionOutcome out{run_session(feed, config.session, *backend), {}};
  auto& ri = out.report_inputs;
  ri.source_duration = feed.timeline().duration_of(feed.size());
  ri.reference_words = li.reference_words;
  ri.nouns = li.nouns;
  ri.normalize = opts.normalize;
  ri.pn_measure = opts.pn_measure;
  if (li.reference_words && !li.reference_words->empty()) {
    ri.source_token_count = li.reference_words->size();
  } else if (!li.script.empty()) {
    ri.source_token_count = li.script.size();
  } else {
    ri.source_token_count = out.result.commit_log.size();
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RunOptions {
  SessionInputs inputs;
  std::optional<std::string> report_path;  // stdout when absent
  std::optional<std::string> commit_log_path;
  std::string session_id = "session";
};

inline int cmd_run(const RunOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto li = load_inputs(opts.inputs);
    const auto config = with_glossary(li, li.config);
    auto outcome = run_loaded(li, config, opts.inputs);
    const auto report = build_report(outcome.result, outcome.report_inputs, config, opts.session_id, opts.inputs.backend);
    const std::string text = report_to_text(report);
    std::string dump;
    if (opts.commit_log_path) {
      CommitLogDump d;
      d.frame_interval = config.session.chunk_interval;
      d.source_duration = outcome.report_inputs.source_duration;
      d.source_token_count = outcome.report_inputs.source_token_count;
      d.reference_target_count = li.reference_words ? li.reference_words->size() : 0;
      d.processing_total = outcome.result.total_processing;
      d.events = outcome.result.commit_log.events();
      dump = commit_log_to_jsonl(d);
    }
    write_output(opts.report_path, text, out);
    if (opts.commit_log_path) write_output(opts.commit_log_path, dump, out);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

struct SweepOptions {
  SessionInputs inputs;
  std::vector<SweepAxis> axes;
  std::optional<std::string> output_path;  // stdout when absent
  bool parallel = true;
};

inline const std::vector<std::string>& sweep_metric_columns() {
  static const std::vector<std::string> cols{"AL", "DAL", "WER", "BLEU", "HR", "HR_raw", "PN", "PN_raw", "forced_commits"};
  return cols;
}

/// Row-major enumeration: the last axis varies fastest.
inline std::vector<std::vector<std::string>> sweep_grid(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::string>> grid{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& point : grid) {
      for (const auto& v : axis.values) {
        auto p = point;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

inline int cmd_sweep(const SweepOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (opts.axes.empty()) throw ArgumentError("sweep needs at least one --param/--values pair");
    std::vector<std::string> names;
    for (const auto& axis : opts.axes) {
      const auto* p = find_parameter(axis.name);
      if (!p || !p->numeric) {
        throw ArgumentError("unknown sweep parameter '" + axis.name + "' (valid: " + parameter_names(true) + ")");
      }
      if (axis.values.empty()) throw ArgumentError("no values given for " + p->name);
      names.push_back(p->name);
    }
    const auto li = load_inputs(opts.inputs);
    const auto grid = sweep_grid(opts.axes);

    // Validate every point before any session runs.
    std::vector<RunConfig> configs;
    for (const auto& point : grid) {
      RunConfig c = li.config;
      for (std::size_t a = 0; a < point.size(); ++a) set_parameter(c, names[a], point[a]);
      validate(c);
      configs.push_back(std::move(c));
    }

    const auto run_point = [&](std::size_t i) {
      auto outcome = run_loaded(li, configs[i], opts.inputs);
      return build_report(outcome.result, outcome.report_inputs, with_glossary(li, configs[i]), "grid" + std::to_string(i),
                          opts.inputs.backend);
    };
    std::vector<MetricReport> reports;
    if (opts.parallel) {
      std::vector<std::future<MetricReport>> futures;
      for (std::size_t i = 0; i < configs.size(); ++i) futures.push_back(std::async(std::launch::async, run_point, i));
      for (auto& f : futures) reports.push_back(f.get());
    } else {
      for (std::size_t i = 0; i < configs.size(); ++i) reports.push_back(run_point(i));
    }

    std::string tsv;
    for (const auto& n : names) tsv += n + "\t";
    tsv += text::join(sweep_metric_columns(), "\t") + "\n";
    const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& m = reports[i].metrics;
      for (std::size_t a = 0; a < names.size(); ++a) tsv += find_parameter(names[a])->get(configs[i]) + "\t";
      tsv += cell(m.AL) + "\t" + cell(m.DAL) + "\t" + cell(m.WER) + "\t" + cell(m.BLEU) + "\t" + cell(m.HR) + "\t" +
             cell(m.HR_raw) + "\t" + cell(m.PN) + "\t" + cell(m.PN_raw) + "\t" +
             std::to_string(reports[i].forced_commits) + "\n";
    }
    write_output(opts.output_path, tsv, out);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct ScoreOptions {
  std::string hypothesis_path;
  std::string reference_path;
  std::optional<std::string> nouns_path;
  std::optional<std::string> alignment_path;
  bool hr = false;
  bool normalize = true;
  LexicalMeasure pn_measure = LexicalMeasure::jaro_winkler;
  std::optional<std::string> output_path;
  std::optional<std::uint64_t> seed;  // accepted for symmetry; scoring is deterministic
};

inline int cmd_score(const ScoreOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (opts.hr && !opts.alignment_path) throw ArgumentError("--hr needs --alignment");
    const auto hyps = read_lines_file(opts.hypothesis_path);
    const auto refs = read_lines_file(opts.reference_path);
    if (hyps.size() != refs.size()) {
      throw ArgumentError("hypothesis and reference files differ in line count (" + std::to_string(hyps.size()) +
                          " vs " + std::to_string(refs.size()) + ")");
    }
    std::optional<std::vector<std::vector<std::string>>> nouns;
    if (opts.nouns_path) {
      nouns = parse_noun_lines(read_lines_file(*opts.nouns_path));
      if (nouns->size() != hyps.size()) throw ArgumentError("nouns file line count differs from hypothesis file");
    }
    std::optional<std::vector<AlignmentSet>> alignments;
    if (opts.hr) {
      std::ifstream in(*opts.alignment_path);
      if (!in) throw ParseError(*opts.alignment_path, 0, "cannot open alignment file");
      alignments = parse_alignments(in, *opts.alignment_path);
      if (alignments->size() != hyps.size()) throw ArgumentError("alignment file line count differs from hypothesis file");
    }

    const auto cell = [](std::optional<double> v) { return v ? format_double(*v) : std::string("nan"); };
    std::string tsv = "segment\tWER\tCER\tBLEU";
    if (nouns) tsv += "\tPN\tPN_raw";
    if (alignments) tsv += "\tHR";
    tsv += "\n";

    std::size_t word_errors = 0, word_ref = 0, char_errors = 0, char_ref = 0;
    NGramCounts pooled;
    double pn_sum = 0.0;
    std::size_t pn_count = 0, hr_unaligned = 0, hr_len = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const auto h = scoring_words(hyps[i], opts.normalize);
      const auto r = scoring_words(refs[i], opts.normalize);
      const auto wa = align_words(r, h);
      const auto ca = align_characters(text::join(r), text::join(h), false);
      word_errors += wa.errors();
      word_ref += r.size();
      char_errors += ca.errors();
      char_ref += ca.reference_length;
      const auto counts = ngram_counts(r, h);
      pooled += counts;
      tsv += std::to_string(i + 1) + "\t" +
             cell(r.empty() ? std::nullopt : std::optional<double>(static_cast<double>(wa.errors()) / r.size())) + "\t" +
             cell(ca.reference_length == 0 ? std::nullopt
                                           : std::optional<double>(static_cast<double>(ca.errors()) / ca.reference_length)) +
             "\t" + cell(r.empty() ? std::nullopt : std::optional<double>(bleu_from_counts(counts)));
      if (nouns) {
        if ((*nouns)[i].empty()) {
          tsv += "\tnan\tnan";
        } else {
          const auto pn = proper_noun_score((*nouns)[i], text::split_whitespace(hyps[i]), opts.pn_measure);
          pn_sum += pn.raw_max_sum;
          pn_count += pn.per_noun.size();
          tsv += "\t" + cell(pn.score) + "\t" + cell(pn.raw_max_sum);
        }
      }
      if (alignments) {
        const auto len = text::split_whitespace(hyps[i]).size();
        if (len == 0) {
          tsv += "\tnan";
        } else {
          const double hr = hallucination_rate(len, (*alignments)[i]);
          hr_unaligned += static_cast<std::size_t>(std::llround(hr * static_cast<double>(len)));
          hr_len += len;
          tsv += "\t" + cell(hr);
        }
      }
      tsv += "\n";
    }

    tsv += "corpus\t" +
           cell(word_ref ? std::optional<double>(static_cast<double>(word_errors) / word_ref) : std::nullopt) + "\t" +
           cell(char_ref ? std::optional<double>(static_cast<double>(char_errors) / char_ref) : std::nullopt) + "\t" +
           cell(pooled.ref_length == 0 ? std::nullopt : std::optional<double>(bleu_from_counts(pooled)));
    if (nouns) {
      tsv += "\t" + cell(pn_count ? std::optional<double>(pn_sum / pn_count) : std::nullopt) + "\t" +
             cell(pn_count ? std::optional<double>(pn_sum) : std::nullopt);
    }
    if (alignments) tsv += "\t" + cell(hr_len ? std::optional<double>(static_cast<double>(hr_unaligned) / hr_len) : std::nullopt);
    tsv += "\n";
    write_output(opts.output_path, tsv, out);
    return kExitOk;
  });
}

}  // namespace simulst::cli
