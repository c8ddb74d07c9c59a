// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ccd/engine.hpp"
#include "ccd/experiment.hpp"
#include "ccd/format.hpp"
#include "ccd/trace.hpp"
#include "oracle.hpp"

using namespace ccd;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Standard miscalibrated world with a noiseless expert at the default weights.
ExperimentConfig standard_world() {
  ExperimentConfig cfg;
  cfg.seed = 20240611;
  cfg.episodes = 200;
  cfg.world = WorldParams{};
  cfg.world.fn_bias = 0.6;
  cfg.world.fp_bias = 0.4;
  cfg.expert = ExpertKind::noisy;
  cfg.expert_sigma = 0.0;
  cfg.expert_flip_rate = 0.0;
  return cfg;
}

// Frozen regression goldens for the standard world (seed 20240611, 200 episodes).
struct Golden {
  Ablation ablation;
  const char* precision;
  const char* recall;
  const char* f1;
  const char* fp_rate;
};
constexpr Golden kGoldens[] = {
    {Ablation::off, "0.969336", "0.701603", "0.814020", "0.009050"},
    {Ablation::full, "0.986618", "1.000000", "0.993264", "0.005530"},
    {Ablation::scd_only, "0.843750", "0.832306", "0.837989", "0.062846"},
    {Ablation::ecd_only, "0.989024", "1.000000", "0.994482", "0.004525"},
};

// ---------------------------------------------------------------------------

Outcome reduction_identity() {
  const auto t0 = Clock::now();
  const ToyReportModel model(build_toy_lexicon(chexpert_ontology()), ToyModelParams{});
  const auto& lex = model.lexicon();
  const std::uint64_t seed = 20240611;
  std::size_t mismatches = 0, tokens = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng wr = make_rng(seed + i, Stream::world);
    const auto c = sample_case(WorldParams{}, lex, wr, i);
    ToyModelBackend backend(model, c);
    const NoisyExpert expert(lex.ontology, 0.0, 0.0, seed);
    DecodeConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    cfg.mode = DecodeMode::greedy;
    cfg.seed = seed + i;
    const auto fused = generate(backend, expert, c, c.prompt, lex.token_map, cfg);
    const auto plain = generate_plain(backend, c.prompt, cfg);
    tokens += plain.tokens.size();
    if (fused.tokens != plain.tokens) ++mismatches;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "100 episodes, " << tokens << " tokens, " << mismatches << " mismatches, " << secs << " s";
  return {mismatches == 0 && secs < 10.0, d.str()};
}

Outcome step_oracle() {
  Rng rng(0x5eed);
  auto real = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); };
  double worst = 0.0;
  std::size_t steps = 0, token_mismatch = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t n = 2 + pick(11);  // vocab 2..12
    std::vector<std::string> toks{"<eos>"};
    std::vector<TokenKind> kinds{TokenKind::eos};
    for (std::size_t i = 1; i < n; ++i) {
      toks.push_back("t" + std::to_string(i));
      kinds.push_back(TokenKind::word);
    }
    // Raw per-(step, branch) logits, fixed up front.
    std::vector<std::vector<double>> raw(8, std::vector<double>(n));
    for (auto& r : raw) {
      for (auto& v : r) v = rng.uniform() < 0.1 ? kBanned : real(-6.0, 6.0);
      r[1 + pick(n - 1)] = real(-1.0, 1.0);
    }
    LogitsTrace trace;
    trace.vocab = Vocabulary(toks, kinds, 0);
    for (std::size_t s = 0; s < 4; ++s) {
      trace.records.push_back({s, Branch::original, raw[2 * s]});
      trace.records.push_back({s, Branch::anchored, raw[2 * s + 1]});
    }
    // Labels over random token subsets (may overlap).
    const std::size_t m = 1 + pick(4);
    ClinicalLabelSet labels;
    oracle::Inputs in;
    for (std::size_t l = 0; l < m; ++l) {
      const std::string name = "L" + std::to_string(l);
      const double u = rng.uniform();
      const double s = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : (u < 0.3 ? 0.5 : rng.uniform()));
      labels.labels.push_back({name, s});
      in.labels.push_back({name, s});
      std::vector<TokenId> ids{static_cast<TokenId>(pick(n))};
      if (rng.uniform() < 0.5) ids.push_back(static_cast<TokenId>(pick(n)));
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      trace.token_map[name] = ids;
      in.token_map[name] = std::vector<int>(ids.begin(), ids.end());
    }
    DecodeConfig cfg;
    const double u = rng.uniform();
    cfg.alpha = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : rng.uniform());
    const double v = rng.uniform();
    cfg.beta = v < 0.1 ? 0.0 : (v < 0.2 ? 1.0 : rng.uniform());
    const double gsel = rng.uniform();
    std::optional<double> gamma;
    if (gsel < 0.2) {
      cfg.gamma = PlausibilityConstraint::disabled();
    } else {
      gamma = gsel < 0.4 ? 2.0 : (gsel < 0.6 ? 5.0 : (gsel < 0.8 ? 10.0 : real(1.1, 30.0)));
      cfg.gamma = PlausibilityConstraint::likelihood_ratio(*gamma);
    }
    cfg.tau = 1.0;  // no anchor tokens: the toy vocabulary here has none
    cfg.max_tokens = 4;
    cfg.record_steps = true;
    if (rng.uniform() < 0.5) cfg.processors.temperature = real(0.3, 2.5);
    if (rng.uniform() < 0.5) cfg.processors.top_k = 1 + pick(n);
    if (rng.uniform() < 0.5) cfg.processors.top_p = real(0.1, 1.0);
    if (rng.uniform() < 0.5) cfg.processors.repetition_penalty = real(1.0, 2.5);
    if (rng.uniform() < 0.5) cfg.processors.min_length = pick(5);

    ReplayBackend backend(trace);
    Generation gen;
    try {
      gen = generate_with_labels(backend, labels, {}, trace.token_map, cfg);
    } catch (const std::exception& e) {
      // Degenerate processor output is an accepted error; count nothing.
      continue;
    }
    in.alpha = cfg.alpha;
    in.beta = cfg.beta;
    in.gamma = gamma;
    in.temperature = cfg.processors.temperature;
    in.top_k = cfg.processors.top_k;
    in.top_p = cfg.processors.top_p;
    in.rho = cfg.processors.repetition_penalty;
    in.min_length = cfg.processors.min_length;
    in.eos = 0;
    for (std::size_t s = 0; s < gen.steps.size(); ++s) {
      in.z_o = raw[2 * s];
      in.z_c = raw[2 * s + 1];
      in.history.assign(gen.tokens.begin(), gen.tokens.begin() + static_cast<long>(s));
      const auto expect = oracle::fused(in);
      worst = std::max(worst, oracle::max_abs_diff(expect.ccd, gen.steps[s].ccd.values()));
      if (oracle::greedy(expect.ccd) != gen.steps[s].chosen) ++token_mismatch;
      ++steps;
    }
  }
  std::ostringstream d;
  d << "500 instances, " << steps << " steps, max abs err " << worst << ", token mismatches "
    << token_mismatch;
  return {worst <= 1e-9 && token_mismatch == 0 && steps >= 500, d.str()};
}

Outcome clipping_bound() {
  std::size_t violations = 0, saturated = 0, points = 0;
  for (double gamma : {2.0, 5.0, 10.0}) {
    const auto c = PlausibilityConstraint::likelihood_ratio(gamma);
    const double cap = std::log(gamma);
    const double boundary = gamma / (gamma + 1.0);
    for (int i = 0; i <= 10000; ++i) {
      const double s = 1e-6 + (1.0 - 2e-6) * static_cast<double>(i) / 10000.0;
      const double b = clip_bias(label_bias(s), c);
      ++points;
      if (!(std::abs(b) <= cap + 1e-12)) ++violations;
      if (s >= boundary) {
        ++saturated;
        if (b != cap) ++violations;
      }
    }
  }
  std::ostringstream d;
  d << points << " points, " << saturated << " at or above the boundary, " << violations << " violations";
  return {violations == 0, d.str()};
}

Outcome processor_examples() {
  std::vector<std::string> failed;
  auto expect = [&](const char* name, const LogitVector& got, const LogitVector& want) {
    if (!(got == want)) failed.push_back(name);
  };
  const std::vector<TokenId> h01{0, 1}, h0{0};
  expect("penalty", apply_repetition_penalty(LogitVector{2, -2, 1}, h01, 2.0), LogitVector{1, -4, 1});
  expect("penalty rho=1", apply_repetition_penalty(LogitVector{2, -2, 1}, h01, 1.0), LogitVector{2, -2, 1});
  expect("penalty zero", apply_repetition_penalty(LogitVector{0}, h0, 5.0), LogitVector{0});
  ProcessorConfig ml;
  ml.min_length = 3;
  ml.eos_token_id = 0;
  expect("min_length bans", enforce_min_length(LogitVector{1, 2}, 0, ml), LogitVector{kBanned, 2});
  expect("min_length met", enforce_min_length(LogitVector{1, 2}, 3, ml), LogitVector{1, 2});
  ml.min_length = 0;
  expect("min_length off", enforce_min_length(LogitVector{1, 2}, 10, ml), LogitVector{1, 2});
  expect("top_k 1", apply_top_k(LogitVector{0.1, 0.7, 0.2}, 1), LogitVector{kBanned, 0.7, kBanned});
  expect("top_k 0", apply_top_k(LogitVector{0.1, 0.7, 0.2}, 0), LogitVector{0.1, 0.7, 0.2});
  expect("top_k tie", apply_top_k(LogitVector{3, 3, 1}, 1), LogitVector{3, kBanned, kBanned});
  const LogitVector p3{std::log(0.5), std::log(0.3), std::log(0.2)};
  expect("top_p 1", apply_top_p(p3, 1.0), p3);
  expect("top_p tiny", apply_top_p(p3, 1e-9), LogitVector{p3[0], kBanned, kBanned});
  expect("top_p 0.8", apply_top_p(p3, 0.8), LogitVector{p3[0], p3[1], kBanned});
  ProcessorConfig t;
  t.temperature = 2.0;
  expect("temperature", run_stack(LogitVector{2, 0}, {}, 0, t), LogitVector{1, 0});
  ProcessorConfig pk;
  pk.repetition_penalty = 2.0;
  pk.top_k = 1;
  expect("penalty+top_k", run_stack(LogitVector{2, 1.5}, h0, 1, pk), LogitVector{kBanned, 1.5});

  Rng rng(3);
  std::size_t identity_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    LogitVector z(1 + static_cast<std::size_t>(rng.uniform() * 30));
    for (auto& v : z) v = rng.uniform() < 0.1 ? kBanned : 20.0 * rng.uniform() - 10.0;
    z[0] = 0.0;
    std::vector<TokenId> h;
    for (int k = 0; k < 5; ++k) h.push_back(static_cast<TokenId>(rng.uniform() * static_cast<double>(z.size())));
    if (!(run_stack(z, h, h.size(), ProcessorConfig{}) == z)) ++identity_fail;
  }
  if (identity_fail) failed.push_back("identity stack");
  std::ostringstream d;
  d << "14 documented examples, 1000 identity-stack vectors";
  for (const auto& f : failed) d << "; failed: " << f;
  return {failed.empty(), d.str()};
}

Outcome directional_efficacy() {
  const auto t0 = Clock::now();
  std::vector<AggregateReport> r;
  for (Ablation a : {Ablation::off, Ablation::full, Ablation::scd_only, Ablation::ecd_only}) {
    auto cfg = standard_world();
    cfg.decode.ablation = a;
    r.push_back(run_experiment(cfg).aggregate);
  }
  const double secs = seconds_since(t0);
  const auto& base = r[0];
  const auto& full = r[1];
  const auto& scd = r[2];
  const auto& ecd = r[3];
  const bool a = full.f1 > base.f1;
  const bool b = scd.recall > base.recall;
  const bool c = ecd.fp_rate < scd.fp_rate;

  bool goldens = true;
  std::ostringstream g;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& k = kGoldens[i];
    const auto& x = r[i];
    const bool ok = format_fixed(x.precision) == k.precision && format_fixed(x.recall) == k.recall &&
                    format_fixed(x.f1) == k.f1 && format_fixed(x.fp_rate) == k.fp_rate;
    if (!ok) {
      goldens = false;
      g << "; golden drift " << to_string(k.ablation) << ": {" << format_fixed(x.precision) << ", "
        << format_fixed(x.recall) << ", " << format_fixed(x.f1) << ", " << format_fixed(x.fp_rate) << "}";
    }
  }
  std::ostringstream d;
  d << "(a) f1 full " << format_fixed(full.f1) << " > base " << format_fixed(base.f1) << (a ? " ok" : " NO")
    << "; (b) recall scd " << format_fixed(scd.recall) << " > base " << format_fixed(base.recall)
    << (b ? " ok" : " NO") << "; (c) fp_rate ecd " << format_fixed(ecd.fp_rate) << " < scd "
    << format_fixed(scd.fp_rate) << (c ? " ok" : " NO") << "; goldens " << (goldens ? "match" : "differ")
    << "; " << secs << " s" << g.str();
  return {a && b && c && goldens && secs < 60.0, d.str()};
}

Outcome sweep_shape() {
  const auto base = standard_world();
  std::vector<std::string> problems;
  std::size_t rows = 0;
  for (SweepAxis axis : {SweepAxis::alpha, SweepAxis::beta, SweepAxis::gamma}) {
    const auto grid = SweepGrid::defaults(axis);
    const auto first = sweep_csv(run_sweep(base, grid));
    const auto second = sweep_csv(run_sweep(base, grid));
    if (first != second) problems.push_back(std::string(to_string(axis)) + " rerun differs");
    std::istringstream lines(first);
    std::string line;
    std::getline(lines, line);
    if (line + "\n" != csv_header()) problems.push_back("header");
    std::vector<std::string> values;
    while (std::getline(lines, line)) {
      std::vector<std::string> cols;
      std::stringstream ls(line);
      std::string col;
      while (std::getline(ls, col, ',')) cols.push_back(col);
      if (cols.size() != 15) problems.push_back("column count");
      const std::size_t idx = axis == SweepAxis::alpha ? 2 : (axis == SweepAxis::beta ? 3 : 4);
      values.push_back(cols.size() > idx ? cols[idx] : "?");
      ++rows;
    }
    const std::vector<std::string> want =
        axis == SweepAxis::gamma ? std::vector<std::string>{"2", "5", "10", "off"}
                                 : std::vector<std::string>{"0", "0.25", "0.5", "0.75", "1"};
    if (values != want) problems.push_back(std::string(to_string(axis)) + " grid/order");
  }
  std::ostringstream d;
  d << "alpha 5 + beta 5 + gamma 4 = " << rows << " rows, each axis run twice";
  for (const auto& p : problems) d << "; " << p;
  return {problems.empty() && rows == 14, d.str()};
}

Outcome random_prior() {
  auto base = standard_world();
  const auto pair = run_random_prior_test(base);
  base.decode.ablation = Ablation::off;
  const auto baseline = run_experiment(base).aggregate;
  const double informed = pair.informed.aggregate.f1;
  const double random = pair.random.aggregate.f1;
  const double gain = informed - baseline.f1;
  const double degradation = informed - random;
  const bool pass = gain > 0.0 && degradation < 0.5 * gain;
  std::ostringstream d;
  d << "f1 baseline " << format_fixed(baseline.f1) << ", noiseless " << format_fixed(informed) << ", random "
    << format_fixed(random) << "; degradation " << format_fixed(degradation) << " = "
    << format_fixed(gain > 0 ? 100.0 * degradation / gain : 0.0, 1) << "% of gain " << format_fixed(gain)
    << " (bound 50%); random vs baseline " << format_fixed(random - baseline.f1, 6);
  return {pass, d.str()};
}

Outcome trace_replay() {
  const ToyReportModel model(build_toy_lexicon(chexpert_ontology()), ToyModelParams{});
  const auto& lex = model.lexicon();
  Rng wr = make_rng(20240611, Stream::world);
  const auto c = sample_case(WorldParams{}, lex, wr, 0);
  const NoisyExpert expert(lex.ontology, 0.2, 0.05, 20240611);
  DecodeConfig cfg;
  cfg.mode = DecodeMode::sample;
  cfg.seed = 20240611;
  cfg.max_tokens = 20;
  cfg.processors.min_length = 20;
  cfg.processors.temperature = 1.3;
  cfg.record_steps = true;

  LogitsTrace trace;
  trace.token_map = lex.token_map;
  trace.prompt = c.prompt;
  trace.labels = expert.predict(c);
  ToyModelBackend live(model, c);
  RecordingBackend rec(live, trace);
  const auto original = generate(rec, expert, c, c.prompt, lex.token_map, cfg);

  const auto text = serialize_trace(trace);
  const auto parsed = parse_trace(text);
  const bool stable = serialize_trace(parsed) == text && parsed == trace;
  ReplayBackend replay(parsed, lex.vocab);
  const auto again = generate_with_labels(replay, *parsed.labels, parsed.prompt, parsed.token_map, cfg);
  const bool identical = serialize_generation(again) == serialize_generation(original);
  std::ostringstream d;
  d << trace.steps() << "-step trace (" << text.size() << " bytes), replay "
    << (identical ? "byte-identical" : "DIFFERS") << ", round-trip " << (stable ? "byte-stable" : "UNSTABLE");
  return {trace.steps() == 20 && identical && stable, d.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"reduction-identity", reduction_identity},
      {"step-oracle", step_oracle},
      {"clipping-bound", clipping_bound},
      {"processor-bit-exactness", processor_examples},
      {"directional-efficacy", directional_efficacy},
      {"sweep-shape", sweep_shape},
      {"random-prior-robustness", random_prior},
      {"trace-replay", trace_replay},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << '\n';
  return failures ? 1 : 0;
}
