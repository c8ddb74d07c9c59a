#include "ccd/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "ccd/error.hpp"
#include "ccd/format.hpp"
#include "ccd/toy_lexicon.hpp"

namespace ccd {

std::string_view to_string(ExpertKind k) {
  switch (k) {
    case ExpertKind::noisy: return "noisy";
    case ExpertKind::random: return "random";
    case ExpertKind::file: return "file";
  }
  return "noisy";
}

ExpertKind expert_kind_from_string(std::string_view text) {
  if (text == "noisy") return ExpertKind::noisy;
  if (text == "random") return ExpertKind::random;
  if (text == "file" || text == "replay-file") return ExpertKind::file;
  throw Error("unknown expert '" + std::string(text) + "'");
}

std::string_view to_string(BackendKind k) { return k == BackendKind::toy ? "toy" : "replay"; }

BackendKind backend_kind_from_string(std::string_view text) {
  if (text == "toy") return BackendKind::toy;
  if (text == "replay") return BackendKind::replay;
  throw Error("unknown backend '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  world.validate();
  effective_model().validate();
  decode.validate();
  if (episodes == 0) throw Error("episodes must be > 0");
  if (threads == 0) throw Error("threads must be > 0");
  if (!(expert_sigma >= 0.0)) throw Error("expert.sigma must be >= 0");
  if (!(expert_flip_rate >= 0.0 && expert_flip_rate <= 1.0)) {
    throw Error("expert.flip_rate must be in [0, 1]");
  }
  if (expert == ExpertKind::file && expert_file.empty()) {
    throw Error("expert = file needs expert.file");
  }
  if (backend == BackendKind::replay && replay_trace.empty()) {
    throw Error("backend = replay needs replay_trace");
  }
}

ToyModelParams ExperimentConfig::effective_model() const {
  ToyModelParams m = model;
  m.fn_bias = world.fn_bias;
  m.fp_bias = world.fp_bias;
  return m;
}

// ---------------------------------------------------------------------------
// Config file

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out)) {
    throw Error("'" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  if (!parse_int(v, out)) {
    throw Error("'" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool is_off(std::string_view v) { return v == "off" || v == "null" || v == "none"; }

PlausibilityConstraint gamma_from(std::string_view key, std::string_view v) {
  if (is_off(v)) return PlausibilityConstraint::disabled();
  return PlausibilityConstraint::likelihood_ratio(to_double(key, v));
}

std::string gamma_text(const PlausibilityConstraint& g) {
  return g.enabled() ? format_double(g.gamma()) : "off";
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](auto& c, auto k, auto v) { c.seed = to_int<std::uint64_t>(k, v); }},
      {"episodes", [](auto& c, auto k, auto v) { c.episodes = to_int<std::size_t>(k, v); }},
      {"threads", [](auto& c, auto k, auto v) { c.threads = to_int<std::size_t>(k, v); }},
      {"world.n_symptoms",
       [](auto& c, auto k, auto v) {
         const double p = c.world.prevalence.empty() ? 0.3 : c.world.prevalence.front();
         c.world.n_symptoms = to_int<std::size_t>(k, v);
         c.world.set_uniform_prevalence(p);
       }},
      {"world.prevalence",
       [](auto& c, auto k, auto v) {
         std::vector<double> vals;
         std::stringstream ss{std::string(v)};
         std::string item;
         while (std::getline(ss, item, ',')) vals.push_back(to_double(k, trim(item)));
         if (vals.size() == 1) {
           c.world.set_uniform_prevalence(vals.front());
         } else {
           c.world.prevalence = std::move(vals);
         }
       }},
      {"world.distractor_rate", [](auto& c, auto k, auto v) { c.world.distractor_rate = to_double(k, v); }},
      {"world.fn_bias", [](auto& c, auto k, auto v) { c.world.fn_bias = to_double(k, v); }},
      {"world.fp_bias", [](auto& c, auto k, auto v) { c.world.fp_bias = to_double(k, v); }},
      {"model.salience_scale", [](auto& c, auto k, auto v) { c.model.salience_scale = to_double(k, v); }},
      {"model.distractor_gain", [](auto& c, auto k, auto v) { c.model.distractor_gain = to_double(k, v); }},
      {"backend", [](auto& c, auto, auto v) { c.backend = backend_kind_from_string(v); }},
      {"replay_trace", [](auto& c, auto, auto v) { c.replay_trace = std::string(v); }},
      {"expert", [](auto& c, auto, auto v) { c.expert = expert_kind_from_string(v); }},
      {"expert.sigma", [](auto& c, auto k, auto v) { c.expert_sigma = to_double(k, v); }},
      {"expert.flip_rate", [](auto& c, auto k, auto v) { c.expert_flip_rate = to_double(k, v); }},
      {"expert.file", [](auto& c, auto, auto v) { c.expert_file = std::string(v); }},
      {"alpha", [](auto& c, auto k, auto v) { c.decode.alpha = to_double(k, v); }},
      {"beta", [](auto& c, auto k, auto v) { c.decode.beta = to_double(k, v); }},
      {"gamma", [](auto& c, auto k, auto v) { c.decode.gamma = gamma_from(k, v); }},
      {"tau", [](auto& c, auto k, auto v) { c.decode.tau = to_double(k, v); }},
      {"bias_scope", [](auto& c, auto, auto v) { c.decode.bias_scope = bias_scope_from_string(v); }},
      {"mode", [](auto& c, auto, auto v) { c.decode.mode = decode_mode_from_string(v); }},
      {"max_tokens", [](auto& c, auto k, auto v) { c.decode.max_tokens = to_int<std::size_t>(k, v); }},
      {"ablation", [](auto& c, auto, auto v) { c.decode.ablation = ablation_from_string(v); }},
      {"anchor_prefix", [](auto& c, auto, auto v) { c.decode.anchor_prefix = std::string(v); }},
      {"temperature", [](auto& c, auto k, auto v) { c.decode.processors.temperature = to_double(k, v); }},
      {"top_k", [](auto& c, auto k, auto v) { c.decode.processors.top_k = to_int<std::size_t>(k, v); }},
      {"top_p", [](auto& c, auto k, auto v) { c.decode.processors.top_p = to_double(k, v); }},
      {"repetition_penalty",
       [](auto& c, auto k, auto v) { c.decode.processors.repetition_penalty = to_double(k, v); }},
      {"min_length",
       [](auto& c, auto k, auto v) { c.decode.processors.min_length = to_int<std::size_t>(k, v); }},
      {"eos_token_id",
       [](auto& c, auto k, auto v) { c.decode.processors.eos_token_id = to_int<TokenId>(k, v); }},
      {"out", [](auto& c, auto, auto v) { c.out_dir = std::string(v); }},
      {"trace", [](auto& c, auto, auto v) { c.trace_path = std::string(v); }},
      {"step_trace", [](auto& c, auto, auto v) { c.step_trace_path = std::string(v); }},
  };
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, trim(value));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set_config_value(base, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& d = c.decode;
  const auto& p = d.processors;
  out << "seed = " << c.seed << '\n'
      << "episodes = " << c.episodes << '\n'
      << "world.n_symptoms = " << c.world.n_symptoms << '\n'
      << "world.prevalence = ";
  for (std::size_t i = 0; i < c.world.prevalence.size(); ++i) {
    out << (i ? "," : "") << format_double(c.world.prevalence[i]);
  }
  out << '\n'
      << "world.distractor_rate = " << format_double(c.world.distractor_rate) << '\n'
      << "world.fn_bias = " << format_double(c.world.fn_bias) << '\n'
      << "world.fp_bias = " << format_double(c.world.fp_bias) << '\n'
      << "model.salience_scale = " << format_double(c.model.salience_scale) << '\n'
      << "model.distractor_gain = " << format_double(c.model.distractor_gain) << '\n'
      << "backend = " << to_string(c.backend) << '\n'
      << "expert = " << to_string(c.expert) << '\n'
      << "expert.sigma = " << format_double(c.expert_sigma) << '\n'
      << "expert.flip_rate = " << format_double(c.expert_flip_rate) << '\n'
      << "alpha = " << format_double(d.alpha) << '\n'
      << "beta = " << format_double(d.beta) << '\n'
      << "gamma = " << gamma_text(d.gamma) << '\n'
      << "tau = " << format_double(d.tau) << '\n'
      << "bias_scope = " << to_string(d.bias_scope) << '\n'
      << "mode = " << to_string(d.mode) << '\n'
      << "max_tokens = " << d.max_tokens << '\n'
      << "ablation = " << to_string(d.ablation) << '\n'
      << "anchor_prefix = " << d.anchor_prefix << '\n'
      << "temperature = " << format_double(p.temperature) << '\n'
      << "top_k = " << p.top_k << '\n'
      << "top_p = " << format_double(p.top_p) << '\n'
      << "repetition_penalty = " << format_double(p.repetition_penalty) << '\n'
      << "min_length = " << p.min_length << '\n';
  if (c.expert == ExpertKind::file) out << "expert.file = " << c.expert_file << '\n';
  if (c.backend == BackendKind::replay) out << "replay_trace = " << c.replay_trace << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Runs

namespace {

std::unique_ptr<ExpertBackend> make_expert(const ExperimentConfig& cfg,
                                           const std::vector<std::string>& ontology) {
  switch (cfg.expert) {
    case ExpertKind::noisy:
      return std::make_unique<NoisyExpert>(ontology, cfg.expert_sigma, cfg.expert_flip_rate, cfg.seed);
    case ExpertKind::random:
      return std::make_unique<RandomExpert>(ontology, cfg.seed);
    case ExpertKind::file: {
      std::ifstream in(cfg.expert_file);
      if (!in) throw Error("cannot open label file '" + cfg.expert_file + "'");
      return std::make_unique<FixedExpert>(read_label_set(in));
    }
  }
  throw Error("unreachable expert kind");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.backend != BackendKind::toy) {
    throw Error("run_experiment needs the toy backend; use replay for recorded traces");
  }
  const ToyReportModel model(build_toy_lexicon(chexpert_ontology(cfg.world.n_symptoms)),
                             cfg.effective_model());
  const ToyLexicon& lex = model.lexicon();
  const auto expert = make_expert(cfg, lex.ontology);

  ExperimentResult result;
  result.config = cfg;
  result.episodes.resize(cfg.episodes);

  LogitsTrace trace;
  std::string step_trace;
  auto run_episode = [&](std::size_t idx) {
    const std::uint64_t episode_seed = cfg.seed + idx;
    Rng world_rng = make_rng(episode_seed, Stream::world);
    const LatentCase c = sample_case(cfg.world, lex, world_rng, idx);
    DecodeConfig decode = cfg.decode;
    decode.seed = episode_seed;
    ToyModelBackend backend(model, c);
    Generation gen;
    if (idx == 0 && (!cfg.trace_path.empty() || !cfg.step_trace_path.empty())) {
      decode.record_steps = !cfg.step_trace_path.empty();
      RecordingBackend recorder(backend, trace);
      trace.token_map = lex.token_map;
      trace.prompt = c.prompt;
      if (cfg.decode.ablation != Ablation::off) trace.labels = expert->predict(c);
      gen = generate(recorder, *expert, c, c.prompt, lex.token_map, decode);
      std::ostringstream st;
      write_step_trace(st, gen);
      step_trace = st.str();
    } else {
      gen = generate(backend, *expert, c, c.prompt, lex.token_map, decode);
    }
    result.episodes[idx] = score_episode(c.id, gen.text, reference_report(c, lex.ontology), c.truth,
                                         gen.tokens.size(), lex.ontology);
  };

  const std::size_t workers = std::min(cfg.threads, cfg.episodes);
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.episodes; ++i) run_episode(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cfg.episodes; i += workers) run_episode(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  if (!cfg.trace_path.empty()) write_file(cfg.trace_path, serialize_trace(trace));
  if (!cfg.step_trace_path.empty()) write_file(cfg.step_trace_path, step_trace);
  result.aggregate = aggregate(result.episodes);
  return result;
}

std::string csv_header() {
  return "seed,episodes,alpha,beta,gamma,tau,ablation,expert,precision,recall,f1,fp_rate,fn_rate,"
         "rouge_l,mean_tokens\n";
}

std::string csv_row(const ExperimentConfig& cfg, const AggregateReport& r) {
  std::ostringstream out;
  const auto& d = cfg.decode;
  out << cfg.seed << ',' << r.episodes << ',' << format_double(d.alpha) << ','
      << format_double(d.beta) << ',' << gamma_text(d.gamma) << ',' << format_double(d.tau) << ','
      << to_string(d.ablation) << ',' << to_string(cfg.expert) << ',' << format_fixed(r.precision)
      << ',' << format_fixed(r.recall) << ',' << format_fixed(r.f1) << ','
      << format_fixed(r.fp_rate) << ',' << format_fixed(r.fn_rate) << ','
      << format_fixed(r.rouge_l) << ',' << format_fixed(r.mean_tokens) << '\n';
  return out.str();
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "aggregate.csv", csv_header() + csv_row(result.config, result.aggregate));
  std::ostringstream ep;
  ep << "case_id,tp,fp,fn,tn,rouge_l,tokens,generated,reference\n";
  for (const auto& e : result.episodes) {
    ep << e.case_id << ',' << e.tp << ',' << e.fp << ',' << e.fn << ',' << e.tn << ','
       << format_fixed(e.rouge_l) << ',' << e.tokens << ',' << csv_quote(e.generated) << ','
       << csv_quote(e.reference) << '\n';
  }
  write_file(dir / "episodes.csv", ep.str());
  write_file(dir / "config.txt", dump_config(result.config));
}

// ---------------------------------------------------------------------------
// Sweeps

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::beta: return "beta";
    case SweepAxis::gamma: return "gamma";
  }
  return "alpha";
}

SweepAxis sweep_axis_from_string(std::string_view text) {
  if (text == "alpha") return SweepAxis::alpha;
  if (text == "beta") return SweepAxis::beta;
  if (text == "gamma") return SweepAxis::gamma;
  throw Error("unknown sweep axis '" + std::string(text) + "'");
}

SweepGrid SweepGrid::defaults(SweepAxis axis) {
  if (axis == SweepAxis::gamma) return {axis, {2.0, 5.0, 10.0, std::nullopt}};
  return {axis, {0.0, 0.25, 0.5, 0.75, 1.0}};
}

SweepGrid SweepGrid::parse(SweepAxis axis, std::string_view list) {
  SweepGrid g{axis, {}};
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = trim(item);
    if (v.empty()) continue;
    if (axis == SweepAxis::gamma && is_off(v)) {
      g.values.push_back(std::nullopt);
    } else {
      g.values.push_back(to_double(to_string(axis), v));
    }
  }
  g.validate();
  return g;
}

void SweepGrid::validate() const {
  if (values.empty()) throw Error("sweep grid is empty");
  for (const auto& v : values) {
    if (axis == SweepAxis::gamma) {
      if (v && !(*v > 1.0)) throw Error("gamma sweep values must be > 1 or off");
    } else if (!v || !(*v >= 0.0 && *v <= 1.0)) {
      throw Error(std::string(to_string(axis)) + " sweep values must be in [0, 1]");
    }
  }
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const SweepGrid& grid) {
  grid.validate();
  auto values = grid.values;
  // nullopt (cap disabled) sorts after every finite gamma.
  std::stable_sort(values.begin(), values.end(), [](const SweepValue& a, const SweepValue& b) {
    if (!a || !b) return a.has_value() && !b.has_value();
    return *a < *b;
  });
  std::vector<SweepPoint> points;
  for (const auto& v : values) {
    ExperimentConfig cfg = base;
    cfg.trace_path.clear();
    cfg.step_trace_path.clear();
    switch (grid.axis) {
      case SweepAxis::alpha: cfg.decode.alpha = *v; break;
      case SweepAxis::beta: cfg.decode.beta = *v; break;
      case SweepAxis::gamma:
        cfg.decode.gamma = v ? PlausibilityConstraint::likelihood_ratio(*v)
                             : PlausibilityConstraint::disabled();
        break;
    }
    auto result = run_experiment(cfg);
    points.push_back({v, std::move(cfg), result.aggregate});
  }
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = csv_header();
  for (const auto& p : points) out += csv_row(p.config, p.report);
  return out;
}

RandomPriorResult run_random_prior_test(const ExperimentConfig& base) {
  ExperimentConfig informed = base;
  if (informed.expert == ExpertKind::random) informed.expert = ExpertKind::noisy;
  ExperimentConfig random = base;
  random.expert = ExpertKind::random;
  random.trace_path.clear();
  random.step_trace_path.clear();
  return {run_experiment(informed), run_experiment(random)};
}

std::string random_prior_csv(const RandomPriorResult& r) {
  return csv_header() + csv_row(r.informed.config, r.informed.aggregate) +
         csv_row(r.random.config, r.random.aggregate);
}

Generation replay_trace(const ExperimentConfig& cfg, const LogitsTrace& trace) {
  ReplayBackend backend(trace);
  ClinicalLabelSet labels;
  if (cfg.expert == ExpertKind::file) {
    std::ifstream in(cfg.expert_file);
    if (!in) throw Error("cannot open label file '" + cfg.expert_file + "'");
    labels = read_label_set(in);
  } else if (trace.labels) {
    labels = *trace.labels;
  } else if (cfg.decode.ablation != Ablation::off) {
    throw Error("trace carries no expert labels; pass a label file (expert = file)");
  }
  DecodeConfig decode = cfg.decode;
  decode.seed = cfg.seed;
  return generate_with_labels(backend, labels, trace.prompt, trace.token_map, decode);
}

}  // namespace ccd
