#include "ccd/engine.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ccd/error.hpp"
#include "ccd/format.hpp"

namespace ccd {

std::string_view to_string(DecodeMode m) { return m == DecodeMode::greedy ? "greedy" : "sample"; }

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::scd_only: return "scd-only";
    case Ablation::ecd_only: return "ecd-only";
    case Ablation::off: return "off";
  }
  return "full";
}

std::string_view to_string(BiasScope s) { return s == BiasScope::all ? "all" : "selected"; }

DecodeMode decode_mode_from_string(std::string_view text) {
  if (text == "greedy") return DecodeMode::greedy;
  if (text == "sample") return DecodeMode::sample;
  throw Error("unknown decode mode '" + std::string(text) + "'");
}

Ablation ablation_from_string(std::string_view text) {
  if (text == "full") return Ablation::full;
  if (text == "scd-only" || text == "scd_only") return Ablation::scd_only;
  if (text == "ecd-only" || text == "ecd_only") return Ablation::ecd_only;
  if (text == "off") return Ablation::off;
  throw Error("unknown ablation '" + std::string(text) + "'");
}

BiasScope bias_scope_from_string(std::string_view text) {
  if (text == "all") return BiasScope::all;
  if (text == "selected") return BiasScope::selected;
  throw Error("unknown bias scope '" + std::string(text) + "'");
}

void DecodeConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must be in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must be in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("tau must be in [0, 1]");
  if (max_tokens == 0) throw Error("max_tokens must be > 0");
  processors.validate();
}

FusionWeights effective_weights(const DecodeConfig& cfg) {
  switch (cfg.ablation) {
    case Ablation::full: return {cfg.alpha, cfg.beta, true};
    case Ablation::scd_only: return {cfg.alpha, cfg.beta, false};
    case Ablation::ecd_only: return {0.0, cfg.beta, true};
    case Ablation::off: return {0.0, 0.0, false};
  }
  return {};
}

Guidance prepare_guidance(const ClinicalLabelSet& labels, const Vocabulary& vocab,
                          const TokenMap& token_map, const DecodeConfig& cfg) {
  labels.validate();
  Guidance g{filter_labels(labels, cfg.tau), {}, {}, BiasMap(vocab.size())};
  g.anchor_text = build_anchor_prompt(g.selected, cfg.anchor_prefix);
  if (!g.anchor_text.empty()) g.anchor_tokens = vocab.encode(g.anchor_text);
  if (effective_weights(cfg).use_bias) {
    const ClinicalLabelSet& scoped = cfg.bias_scope == BiasScope::all ? labels : g.selected;
    g.bias = build_bias_map(scoped, token_map, cfg.gamma, vocab.size());
  }
  return g;
}

LogitVector scd_step(const LogitVector& z_o, const LogitVector& z_c, double alpha) {
  return interpolate(as_logits(log_softmax(z_o)), as_logits(log_softmax(z_c)), alpha);
}

LogitVector ecd_step(const LogitVector& z_scd, const BiasMap& bias) {
  if (z_scd.size() != bias.size()) throw Error("ecd_step: bias map size differs from vocabulary");
  LogitVector out = z_scd;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i];
  return out;
}

LogitVector ccd_step(const LogitVector& z_scd_processed, const LogitVector& z_ecd, double beta) {
  return interpolate(z_scd_processed, z_ecd, beta);
}

TokenId next_token(const LogitVector& z, DecodeMode mode, Rng& rng) {
  if (mode == DecodeMode::greedy) return argmax(z);
  const ProbVector p = softmax(z);
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_live = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_live = i;
    cumulative += p[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  // Rounding left u above the accumulated mass.
  return static_cast<TokenId>(last_live);
}

StepRecord fuse_step(const LogitVector& z_o, const LogitVector& z_c, const BiasMap& bias,
                     std::span<const TokenId> history, const FusionWeights& weights,
                     const ProcessorConfig& processors) {
  check_logits(z_o.view());
  check_logits(z_c.view());
  if (z_o.size() != z_c.size()) throw Error("branch logits differ in length");
  StepRecord r;
  r.original = z_o;
  r.anchored = z_c;
  r.scd = scd_step(z_o, z_c, weights.alpha);
  r.scd_processed = run_stack(r.scd, history, history.size(), processors);
  r.ecd = ecd_step(r.scd, bias);
  r.ccd = ccd_step(r.scd_processed, r.ecd, weights.beta);
  check_logits(r.ccd.view());
  return r;
}

namespace {

LogitVector query(ModelBackend& model, std::span<const TokenId> context, Branch branch,
                  std::size_t step, std::size_t vocab_size) {
  LogitVector z;
  try {
    z = model.next_logits({context, branch, step});
  } catch (const std::exception& e) {
    throw Error("step " + std::to_string(step) + " (" + std::string(to_string(branch)) +
                " branch): " + e.what());
  }
  if (z.size() != vocab_size) {
    throw Error("step " + std::to_string(step) + ": backend returned " + std::to_string(z.size()) +
                " logits for a vocabulary of " + std::to_string(vocab_size));
  }
  return z;
}

}  // namespace

Generation generate_with_labels(ModelBackend& model, const ClinicalLabelSet& labels,
                                std::span<const TokenId> prompt, const TokenMap& token_map,
                                const DecodeConfig& cfg) {
  cfg.validate();
  const Vocabulary& vocab = model.vocabulary();
  const Guidance guidance = prepare_guidance(labels, vocab, token_map, cfg);
  const FusionWeights weights = effective_weights(cfg);
  ProcessorConfig processors = cfg.processors;
  processors.eos_token_id = vocab.eos();

  std::vector<TokenId> original(prompt.begin(), prompt.end());
  std::vector<TokenId> anchored = original;
  anchored.insert(anchored.end(), guidance.anchor_tokens.begin(), guidance.anchor_tokens.end());

  Rng rng = make_rng(cfg.seed, Stream::sampler);
  Generation gen;
  for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
    const LogitVector z_o = query(model, original, Branch::original, step, vocab.size());
    const LogitVector z_c = query(model, anchored, Branch::anchored, step, vocab.size());
    StepRecord rec;
    try {
      rec = fuse_step(z_o, z_c, guidance.bias, gen.tokens, weights, processors);
      rec.chosen = next_token(rec.ccd, cfg.mode, rng);
    } catch (const Error& e) {
      throw Error("step " + std::to_string(step) + ": " + e.what());
    }
    rec.step = step;
    const TokenId tok = rec.chosen;
    gen.tokens.push_back(tok);
    original.push_back(tok);
    anchored.push_back(tok);
    if (cfg.record_steps) gen.steps.push_back(std::move(rec));
    if (tok == vocab.eos()) {
      gen.stopped_at_eos = true;
      break;
    }
  }
  gen.text = vocab.decode(gen.tokens);
  return gen;
}

Generation generate(ModelBackend& model, const ExpertBackend& expert, const LatentCase& c,
                    std::span<const TokenId> prompt, const TokenMap& token_map,
                    const DecodeConfig& cfg) {
  ClinicalLabelSet labels;
  if (cfg.ablation != Ablation::off) {
    try {
      labels = expert.predict(c);
    } catch (const std::exception& e) {
      throw Error(std::string("expert backend: ") + e.what());
    }
  }
  return generate_with_labels(model, labels, prompt, token_map, cfg);
}

Generation generate_plain(ModelBackend& model, std::span<const TokenId> prompt,
                          const DecodeConfig& cfg) {
  cfg.validate();
  const Vocabulary& vocab = model.vocabulary();
  ProcessorConfig processors = cfg.processors;
  processors.eos_token_id = vocab.eos();
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  Rng rng = make_rng(cfg.seed, Stream::sampler);
  Generation gen;
  for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
    const LogitVector z = query(model, context, Branch::original, step, vocab.size());
    const LogitVector processed =
        run_stack(as_logits(log_softmax(z)), gen.tokens, gen.tokens.size(), processors);
    const TokenId tok = next_token(processed, cfg.mode, rng);
    gen.tokens.push_back(tok);
    context.push_back(tok);
    if (tok == vocab.eos()) {
      gen.stopped_at_eos = true;
      break;
    }
  }
  gen.text = vocab.decode(gen.tokens);
  return gen;
}

namespace {

void write_scores(std::ostream& out, const LogitVector& z) {
  out << '[';
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) out << ',';
    if (z[i] == kBanned) {
      out << "\"-inf\"";
    } else {
      out << format_double(z[i]);
    }
  }
  out << ']';
}

struct Stage {
  const char* name;
  LogitVector StepRecord::*field;
};

constexpr Stage kStages[] = {
    {"o", &StepRecord::original},          {"c", &StepRecord::anchored},
    {"scd", &StepRecord::scd},             {"scd_processed", &StepRecord::scd_processed},
    {"ecd", &StepRecord::ecd},             {"ccd", &StepRecord::ccd},
};

}  // namespace

std::string serialize_generation(const Generation& g) {
  std::ostringstream out;
  out << "{\"tokens\":[";
  for (std::size_t i = 0; i < g.tokens.size(); ++i) out << (i ? "," : "") << g.tokens[i];
  out << "],\"text\":" << nlohmann::json(g.text).dump()
      << ",\"stopped_at_eos\":" << (g.stopped_at_eos ? "true" : "false") << ",\"steps\":[";
  for (std::size_t s = 0; s < g.steps.size(); ++s) {
    const auto& r = g.steps[s];
    out << (s ? "," : "") << "{\"step\":" << r.step << ",\"token\":" << r.chosen;
    for (const auto& stage : kStages) {
      out << ",\"" << stage.name << "\":";
      write_scores(out, r.*stage.field);
    }
    out << '}';
  }
  out << "]}";
  return out.str();
}

void write_step_trace(std::ostream& out, const Generation& g) {
  for (const auto& r : g.steps) {
    for (const auto& stage : kStages) {
      out << "{\"step\":" << r.step << ",\"stage\":\"" << stage.name << "\",\"logits\":";
      write_scores(out, r.*stage.field);
      out << ",\"token\":" << r.chosen << "}\n";
    }
  }
}

}  // namespace ccd
