// simulst: run, sweep and score simultaneous-translation front-end sessions.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simulst/cli.hpp"

namespace {

using namespace simulst;

void add_session_inputs(CLI::App* app, cli::SessionInputs& in, std::vector<std::string>& sets, std::string& measure,
                        bool& no_normalize) {
  app->add_option("--backend", in.backend, "trace:PATH or synthetic:PATH")->required();
  app->add_option("--config", in.config_path, "KEY=value run configuration");
  app->add_option("--reference", in.reference_path, "reference transcript (enables quality metrics)");
  app->add_option("--nouns", in.nouns_path, "proper nouns, one per line or '|'-separated");
  app->add_option("--feed", in.feed_path, "frame arrival schedule (default: uniform over the backend's audio)");
  app->add_option("--seed", in.seed, "synthetic backend seed");
  app->add_option("--set", sets, "override a config key, KEY=VALUE (repeatable)");
  app->add_option("--pn-measure", measure, "jaro_winkler or levenshtein_norm")
      ->check(CLI::IsMember({"jaro_winkler", "levenshtein_norm"}));
  app->add_flag("--no-normalize", no_normalize, "score raw whitespace tokens");
}

void finish_session_inputs(cli::SessionInputs& in, const std::vector<std::string>& sets, const std::string& measure,
                           bool no_normalize) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects KEY=VALUE, got '" + s + "'");
    in.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  in.pn_measure = measure == "levenshtein_norm" ? LexicalMeasure::levenshtein_norm : LexicalMeasure::jaro_winkler;
  in.normalize = !no_normalize;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simultaneous speech translation front-end simulator"};
  app.require_subcommand(1);

  cli::RunOptions run;
  std::vector<std::string> run_sets;
  std::string run_measure = "jaro_winkler";
  bool run_raw = false;
  auto* run_cmd = app.add_subcommand("run", "run one session and write its report");
  add_session_inputs(run_cmd, run.inputs, run_sets, run_measure, run_raw);
  run_cmd->add_option("--report", run.report_path, "report path (default: stdout)");
  run_cmd->add_option("--commit-log", run.commit_log_path, "JSON-lines dump of every commit");
  run_cmd->add_option("--session-id", run.session_id, "session id recorded in the report");

  cli::SweepOptions sweep;
  std::vector<std::string> sweep_sets, sweep_params, sweep_values;
  std::string sweep_measure = "jaro_winkler";
  bool sweep_raw = false, sweep_serial = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "run one session per grid point and write a TSV");
  add_session_inputs(sweep_cmd, sweep.inputs, sweep_sets, sweep_measure, sweep_raw);
  sweep_cmd->add_option("--param", sweep_params, "parameter to sweep (repeatable)")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values, one list per --param")->required();
  sweep_cmd->add_option("--out", sweep.output_path, "TSV path (default: stdout)");
  sweep_cmd->add_flag("--serial", sweep_serial, "run grid points one at a time");

  cli::ScoreOptions score;
  std::string score_measure = "jaro_winkler";
  bool score_raw = false;
  auto* score_cmd = app.add_subcommand("score", "score hypothesis lines against reference lines");
  score_cmd->add_option("--hyp", score.hypothesis_path, "hypothesis file, one segment per line")->required();
  score_cmd->add_option("--ref", score.reference_path, "reference file, one segment per line")->required();
  score_cmd->add_option("--nouns", score.nouns_path, "'|'-separated proper nouns per line");
  score_cmd->add_option("--alignment", score.alignment_path, "1-based j-i alignment pairs per line");
  score_cmd->add_flag("--hr", score.hr, "report hallucination rate (needs --alignment)");
  score_cmd->add_option("--out", score.output_path, "TSV path (default: stdout)");
  score_cmd->add_option("--seed", score.seed, "accepted for uniformity; scoring is deterministic");
  score_cmd->add_option("--pn-measure", score_measure, "jaro_winkler or levenshtein_norm")
      ->check(CLI::IsMember({"jaro_winkler", "levenshtein_norm"}));
  score_cmd->add_flag("--no-normalize", score_raw, "score raw whitespace tokens");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitInput;
  }

  if (*run_cmd) {
    try {
      finish_session_inputs(run.inputs, run_sets, run_measure, run_raw);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kExitInput;
    }
    return cli::cmd_run(run);
  }
  if (*sweep_cmd) {
    try {
      finish_session_inputs(sweep.inputs, sweep_sets, sweep_measure, sweep_raw);
      if (sweep_params.size() != sweep_values.size()) throw ArgumentError("each --param needs exactly one --values");
      for (std::size_t i = 0; i < sweep_params.size(); ++i) {
        cli::SweepAxis axis{sweep_params[i], {}};
        std::stringstream ss(sweep_values[i]);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!text::trim(item).empty()) axis.values.push_back(text::trim(item));
        }
        sweep.axes.push_back(std::move(axis));
      }
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kExitInput;
    }
    sweep.parallel = !sweep_serial;
    return cli::cmd_sweep(sweep);
  }
  score.normalize = !score_raw;
  score.pn_measure = score_measure == "levenshtein_norm" ? LexicalMeasure::levenshtein_norm : LexicalMeasure::jaro_winkler;
  return cli::cmd_score(score);
}
