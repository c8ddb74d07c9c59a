// ccd: run, sweep and replay clinical contrastive decoding experiments.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ccd/error.hpp"
#include "ccd/experiment.hpp"
#include "ccd/format.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> alpha, beta, gamma, tau, episodes, seed, expert, ablation, threads,
      mode, max_tokens;
  std::optional<std::string> trace, step_trace, out;
  std::vector<std::string> set;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key = value config file");
    app->add_option("--alpha", alpha, "SCD weight in [0, 1]");
    app->add_option("--beta", beta, "ECD weight in [0, 1]");
    app->add_option("--gamma", gamma, "plausibility likelihood ratio (> 1) or 'off'");
    app->add_option("--tau", tau, "anchor threshold");
    app->add_option("--episodes", episodes, "number of episodes");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--expert", expert, "noisy | random | file");
    app->add_option("--ablation", ablation, "full | scd-only | ecd-only | off");
    app->add_option("--mode", mode, "greedy | sample");
    app->add_option("--max-tokens", max_tokens, "generation cap");
    app->add_option("--threads", threads, "episode worker threads");
    app->add_option("--trace", trace, "write the dual-branch trace of episode 0");
    app->add_option("--step-trace", step_trace, "write per-stage logits of episode 0");
    app->add_option("--out", out, "directory for episodes.csv, aggregate.csv, config.txt");
    app->add_option("--set", set, "extra key=value override (repeatable)");
  }

  ccd::ExperimentConfig resolve() const {
    ccd::ExperimentConfig cfg;
    if (!config.empty()) cfg = ccd::load_config(config);
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"alpha", &alpha},       {"beta", &beta},         {"gamma", &gamma},
        {"tau", &tau},           {"episodes", &episodes}, {"seed", &seed},
        {"expert", &expert},     {"ablation", &ablation}, {"mode", &mode},
        {"max_tokens", &max_tokens}, {"threads", &threads}, {"trace", &trace},
        {"step_trace", &step_trace}, {"out", &out},
    };
    for (const auto& s : set) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ccd::Error("--set expects key=value, got '" + s + "'");
      ccd::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flags) {
      if (*value) ccd::set_config_value(cfg, key, **value);
    }
    cfg.validate();
    return cfg;
  }
};

void print_report(const ccd::AggregateReport& r, std::ostream& out) {
  out << "precision " << ccd::format_fixed(r.precision) << "  recall "
      << ccd::format_fixed(r.recall) << "  f1 " << ccd::format_fixed(r.f1) << "  fp_rate "
      << ccd::format_fixed(r.fp_rate) << "  fn_rate " << ccd::format_fixed(r.fn_rate)
      << "  rouge_l " << ccd::format_fixed(r.rouge_l) << '\n';
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
  if (!f) throw ccd::Error("cannot write " + name + " in '" + dir + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical contrastive decoding experiments on the synthetic report world"};
  app.require_subcommand(1);

  Overrides run_opts, sweep_opts, prior_opts, replay_opts;

  auto* run = app.add_subcommand("run", "single experiment; prints the CSV row");
  run_opts.attach(run);
  bool print_config = false;
  run->add_flag("--print-config", print_config, "echo the effective config to stderr");

  auto* sweep = app.add_subcommand("sweep", "vary one of alpha, beta, gamma");
  sweep_opts.attach(sweep);
  std::string axis = "alpha";
  std::string values;
  sweep->add_option("--axis", axis, "alpha | beta | gamma")->required();
  sweep->add_option("--values", values, "comma-separated grid (default: 0,0.25,0.5,0.75,1 or 2,5,10,off)");

  auto* prior = app.add_subcommand("random-prior", "noisy vs random expert on shared seeds");
  prior_opts.attach(prior);

  auto* replay = app.add_subcommand("replay", "decode from a recorded logits trace");
  replay_opts.attach(replay);
  std::string replay_in;
  replay->add_option("--input,--in", replay_in, "recorded trace file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = run_opts.resolve();
      const auto result = ccd::run_experiment(cfg);
      if (print_config) std::cerr << ccd::dump_config(cfg);
      if (!cfg.out_dir.empty()) ccd::write_outputs(result, cfg.out_dir);
      std::cout << ccd::csv_header() << ccd::csv_row(cfg, result.aggregate);
      print_report(result.aggregate, std::cerr);
    } else if (sweep->parsed()) {
      const auto cfg = sweep_opts.resolve();
      const auto ax = ccd::sweep_axis_from_string(axis);
      const auto grid = values.empty() ? ccd::SweepGrid::defaults(ax) : ccd::SweepGrid::parse(ax, values);
      const auto csv = ccd::sweep_csv(ccd::run_sweep(cfg, grid));
      if (!cfg.out_dir.empty()) {
        write_text(cfg.out_dir, "sweep_" + axis + ".csv", csv);
        write_text(cfg.out_dir, "config.txt", ccd::dump_config(cfg));
      }
      std::cout << csv;
    } else if (prior->parsed()) {
      const auto cfg = prior_opts.resolve();
      const auto r = ccd::run_random_prior_test(cfg);
      const auto csv = ccd::random_prior_csv(r);
      if (!cfg.out_dir.empty()) {
        write_text(cfg.out_dir, "random_prior.csv", csv);
        write_text(cfg.out_dir, "config.txt", ccd::dump_config(cfg));
      }
      std::cout << csv;
    } else if (replay->parsed()) {
      // `replay --trace <file>` reads the trace rather than writing one.
      std::string path = replay_in;
      Overrides opts = replay_opts;
      if (path.empty() && opts.trace) path = *std::exchange(opts.trace, std::nullopt);
      if (path.empty()) path = opts.resolve().replay_trace;
      if (path.empty()) throw ccd::Error("replay needs --trace <file>");
      auto cfg = opts.resolve();
      std::ifstream in(path);
      if (!in) throw ccd::Error("cannot open trace '" + path + "'");
      const auto trace = ccd::read_trace(in);
      const auto gen = ccd::replay_trace(cfg, trace);
      std::cout << ccd::serialize_generation(gen) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "ccd: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
