#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccd/error.hpp"
#include "ccd/experiment.hpp"

using namespace ccd;

namespace {

ExperimentConfig small(std::size_t episodes = 30) {
  ExperimentConfig cfg;
  cfg.seed = 17;
  cfg.episodes = episodes;
  return cfg;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "seed = 5\n"
      "episodes=12   # trailing\n"
      "alpha = 0.25\n"
      "gamma = off\n"
      "ablation = scd-only\n"
      "world.prevalence = 0.1\n"
      "top_k = 3\n");
  const auto cfg = parse_config(in);
  CHECK(cfg.seed == 5);
  CHECK(cfg.episodes == 12);
  CHECK(cfg.decode.alpha == 0.25);
  CHECK_FALSE(cfg.decode.gamma.enabled());
  CHECK(cfg.decode.ablation == Ablation::scd_only);
  CHECK(cfg.world.prevalence == std::vector<double>(14, 0.1));
  CHECK(cfg.decode.processors.top_k == 3);

  std::istringstream unknown("bogus = 1\n");
  CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("unknown config key 'bogus'"), Error);
  std::istringstream malformed("alpha = lots\n");
  CHECK_THROWS_WITH_AS(parse_config(malformed), doctest::Contains("line 1"), Error);
  std::istringstream no_eq("alpha\n");
  CHECK_THROWS_AS(parse_config(no_eq), Error);

  ExperimentConfig bad;
  set_config_value(bad, "alpha", "2");
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(set_config_value(bad, "gamma", "1"), Error);
}

TEST_CASE("dump_config parses back to the same config") {
  auto cfg = small();
  cfg.decode.gamma = PlausibilityConstraint::disabled();
  cfg.decode.alpha = 0.125;
  cfg.world.prevalence[2] = 0.7;
  std::istringstream in(dump_config(cfg));
  const auto back = parse_config(in);
  CHECK(dump_config(back) == dump_config(cfg));
}

TEST_CASE("single-episode baseline row") {
  auto cfg = small(1);
  cfg.decode.ablation = Ablation::off;
  const auto r = run_experiment(cfg);
  CHECK(r.episodes.size() == 1);
  const auto row = csv_row(cfg, r.aggregate);
  CHECK(row.rfind("17,1,0.5,0.5,10,0.5,off,noisy,", 0) == 0);
  CHECK(csv_header() ==
        "seed,episodes,alpha,beta,gamma,tau,ablation,expert,precision,recall,f1,fp_rate,fn_rate,rouge_l,"
        "mean_tokens\n");
}

TEST_CASE("runs are deterministic and independent of the worker count") {
  auto cfg = small(40);
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  cfg.threads = 4;
  const auto c = run_experiment(cfg);
  CHECK(csv_row(a.config, a.aggregate) == csv_row(b.config, b.aggregate));
  CHECK(csv_row(a.config, a.aggregate) == csv_row(c.config, c.aggregate));
  for (std::size_t i = 0; i < a.episodes.size(); ++i) CHECK(a.episodes[i].generated == c.episodes[i].generated);
}

TEST_CASE("full beats baseline on the standard world") {
  auto cfg = small(60);
  const auto full = run_experiment(cfg);
  cfg.decode.ablation = Ablation::off;
  const auto base = run_experiment(cfg);
  CHECK(full.aggregate.f1 > base.aggregate.f1);
}

TEST_CASE("sweeps") {
  const auto cfg = small(10);
  const auto two = run_sweep(cfg, SweepGrid::parse(SweepAxis::alpha, "1,0"));
  REQUIRE(two.size() == 2);
  CHECK(*two[0].value == 0.0);
  CHECK(*two[1].value == 1.0);
  CHECK(count_lines(sweep_csv(two)) == 3);

  const auto g = run_sweep(cfg, SweepGrid::defaults(SweepAxis::gamma));
  REQUIRE(g.size() == 4);
  CHECK_FALSE(g.back().value.has_value());
  const auto text = sweep_csv(g);
  CHECK(text.find(",off,") != std::string::npos);
  CHECK(text == sweep_csv(run_sweep(cfg, SweepGrid::defaults(SweepAxis::gamma))));

  CHECK_THROWS_AS(SweepGrid::parse(SweepAxis::beta, "0.5,1.5"), Error);
  CHECK_THROWS_AS(SweepGrid::parse(SweepAxis::alpha, "off"), Error);
  CHECK_THROWS_AS(SweepGrid::parse(SweepAxis::gamma, "1"), Error);
  CHECK_THROWS_AS(SweepGrid::parse(SweepAxis::gamma, ""), Error);
}

TEST_CASE("random prior pairs share the case stream") {
  const auto r = run_random_prior_test(small(25));
  CHECK(r.informed.config.expert == ExpertKind::noisy);
  CHECK(r.random.config.expert == ExpertKind::random);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(r.informed.episodes[i].reference == r.random.episodes[i].reference);
    CHECK(r.informed.episodes[i].truth == r.random.episodes[i].truth);
  }
  CHECK(count_lines(random_prior_csv(r)) == 3);
  CHECK(r.random.aggregate.f1 <= r.informed.aggregate.f1);
}

TEST_CASE("output files and trace capture") {
  const auto dir = std::filesystem::temp_directory_path() / "ccd_unit_outputs";
  std::filesystem::remove_all(dir);
  auto cfg = small(5);
  cfg.trace_path = (dir / "trace.jsonl").string();
  cfg.step_trace_path = (dir / "steps.jsonl").string();
  const auto r = run_experiment(cfg);
  write_outputs(r, dir);
  for (const char* f : {"aggregate.csv", "episodes.csv", "config.txt", "trace.jsonl", "steps.jsonl"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream tin(dir / "trace.jsonl");
  const auto trace = read_trace(tin);
  const auto g = replay_trace(cfg, trace);
  CHECK(g.text == r.episodes[0].generated);
  std::filesystem::remove_all(dir);
}

TEST_CASE("file expert and bad paths") {
  auto cfg = small(3);
  cfg.expert = ExpertKind::file;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.expert_file = "/nonexistent/labels.jsonl";
  CHECK_THROWS_AS(run_experiment(cfg), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/x.conf"), Error);
  auto replay = small(3);
  replay.backend = BackendKind::replay;
  replay.replay_trace = "t.jsonl";
  CHECK_THROWS_AS(run_experiment(replay), Error);
}
