#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/backends.hpp"
#include "ccd/engine.hpp"
#include "ccd/metrics.hpp"
#include "ccd/trace.hpp"
#include "ccd/world.hpp"

namespace ccd {

enum class ExpertKind { noisy, random, file };
enum class BackendKind { toy, replay };

std::string_view to_string(ExpertKind k);
ExpertKind expert_kind_from_string(std::string_view text);
std::string_view to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view text);

struct ExperimentConfig {
  WorldParams world;
  ToyModelParams model;  // fn_bias / fp_bias are taken from `world`
  BackendKind backend = BackendKind::toy;
  std::string replay_trace;  // input trace when backend = replay

  ExpertKind expert = ExpertKind::noisy;
  double expert_sigma = 0.0;
  double expert_flip_rate = 0.0;
  std::string expert_file;  // label set when expert = file

  DecodeConfig decode;
  std::size_t episodes = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  std::string out_dir;          // per-episode and aggregate files; empty = none
  std::string trace_path;       // dual-branch logits trace of episode 0
  std::string step_trace_path;  // per-stage logits of episode 0

  void validate() const;
  ToyModelParams effective_model() const;
};

// Flat `key = value` document; '#' starts a comment. Unknown keys and
// malformed values throw ccd::Error naming the line.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
// Applies one key/value pair with the same rules as the config file.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
// Effective configuration in the file syntax.
std::string dump_config(const ExperimentConfig& cfg);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpisodeResult> episodes;
  AggregateReport aggregate;
};

// Episode i uses seed + i for its world, expert and sampling streams.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Fixed column order shared by single runs, sweeps and robustness tests.
std::string csv_header();
std::string csv_row(const ExperimentConfig& cfg, const AggregateReport& report);

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

enum class SweepAxis { alpha, beta, gamma };
std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view text);

// nullopt on the gamma axis means the plausibility cap is disabled.
using SweepValue = std::optional<double>;

struct SweepGrid {
  SweepAxis axis = SweepAxis::alpha;
  std::vector<SweepValue> values;

  static SweepGrid defaults(SweepAxis axis);
  // Comma-separated numbers; "off"/"null" allowed on the gamma axis.
  static SweepGrid parse(SweepAxis axis, std::string_view list);
  void validate() const;
};

struct SweepPoint {
  SweepValue value;
  ExperimentConfig config;
  AggregateReport report;
};

// One run per grid value, everything else fixed; sorted by value with a
// disabled gamma last.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const SweepGrid& grid);
std::string sweep_csv(const std::vector<SweepPoint>& points);

struct RandomPriorResult {
  ExperimentResult informed;  // the configured (noisy) expert
  ExperimentResult random;    // random expert on the same case stream
};

RandomPriorResult run_random_prior_test(const ExperimentConfig& base);
std::string random_prior_csv(const RandomPriorResult& r);

// Runs the engine over a recorded trace, using the trace's labels (or the
// configured label file) and the configured decoding settings.
Generation replay_trace(const ExperimentConfig& cfg, const LogitsTrace& trace);

}  // namespace ccd
