#include "ccd/backends.hpp"

#include <algorithm>
#include <cmath>

#include "ccd/error.hpp"

namespace ccd {

std::string_view to_string(Branch b) { return b == Branch::original ? "original" : "anchored"; }

Branch branch_from_string(std::string_view text) {
  if (text == "original") return Branch::original;
  if (text == "anchored") return Branch::anchored;
  throw Error("unknown branch '" + std::string(text) + "'");
}

void ToyModelParams::validate() const {
  if (!(salience_scale > 0.0) || !std::isfinite(salience_scale)) {
    throw Error("toy model: salience_scale must be > 0");
  }
  if (!std::isfinite(distractor_gain)) throw Error("toy model: distractor_gain must be finite");
  if (!(fn_bias >= 0.0 && fn_bias <= 1.0)) throw Error("toy model: fn_bias outside [0, 1]");
  if (!(fp_bias >= 0.0 && fp_bias <= 1.0)) throw Error("toy model: fp_bias outside [0, 1]");
  if (!(floor > 0.0 && floor < 1e-3)) throw Error("toy model: floor must be in (0, 1e-3)");
}

ToyReportModel::ToyReportModel(ToyLexicon lex, ToyModelParams params)
    : lex_(std::move(lex)), params_(params) {
  params_.validate();
}

std::vector<double> ToyReportModel::weights(const LatentCase& c, std::span<const TokenId> context,
                                            bool miscalibrated) const {
  const std::size_t n = lex_.symptom_ids.size();
  if (c.truth.size() != n || c.severity.size() != n) {
    throw Error("toy model: case does not match the lexicon ontology");
  }
  std::vector<double> w(lex_.vocab.size(), params_.floor);
  auto set = [&w](TokenId id, double v) { w[static_cast<std::size_t>(id)] = v; };

  const auto header = std::find(context.begin(), context.end(), lex_.report_header);
  if (header == context.end()) {
    set(lex_.report_header, 1.0);
    return w;
  }

  // Prompt-side cues: an anchor anywhere before the report, and findings named
  // in a "History:" line.
  const bool anchored = std::find(context.begin(), header, lex_.attention) != header;
  std::vector<bool> distractor(n, false);
  bool in_history = false;
  for (auto it = context.begin(); it != header; ++it) {
    if (*it == lex_.history) in_history = true;
    else if (*it == lex_.period) in_history = false;
    else if (in_history) {
      if (auto k = lex_.symptom_index(*it)) distractor[*k] = true;
    }
  }

  std::vector<bool> mentioned(n, false);
  bool any_mentioned = false;
  for (auto it = header + 1; it != context.end(); ++it) {
    if (auto k = lex_.symptom_index(*it)) {
      mentioned[*k] = true;
      any_mentioned = true;
    }
  }

  const TokenId last = context.back();
  if (last == lex_.report_header || lex_.symptom_index(last)) {
    for (std::size_t i = 0; i < n; ++i) {
      if (mentioned[i]) continue;
      double v = std::exp(params_.salience_scale * (c.severity[i] - 0.5));
      if (distractor[i]) v *= std::exp(params_.distractor_gain);
      if (miscalibrated) {
        if (c.truth[i] && !anchored) v *= std::max(1.0 - params_.fn_bias, params_.floor);
        if (!c.truth[i] && anchored) v *= 1.0 + params_.fp_bias;
      }
      set(lex_.symptom_ids[i], v);
    }
    set(any_mentioned ? lex_.period : lex_.negation, 1.0);
  } else if (last == lex_.negation) {
    set(lex_.acute, 1.0);
  } else if (last == lex_.acute) {
    set(lex_.findings_word, 1.0);
  } else if (last == lex_.period || last == lex_.eos) {
    set(lex_.eos, 1.0);
  } else {
    set(lex_.period, 1.0);
  }
  return w;
}

namespace {

std::vector<double> normalised(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

std::vector<double> ToyReportModel::clean_row(const LatentCase& c,
                                              std::span<const TokenId> context) const {
  return normalised(weights(c, context, false));
}

std::vector<double> ToyReportModel::row(const LatentCase& c, std::span<const TokenId> context) const {
  return normalised(weights(c, context, true));
}

LogitVector toy_next_logits(const ToyReportModel& model, const LatentCase& c,
                            std::span<const TokenId> context) {
  if (context.empty()) throw Error("toy model: empty context");
  auto r = model.row(c, context);
  for (double& v : r) v = std::log(v);
  return LogitVector(std::move(r));
}

ClinicalLabelSet noisy_expert_predict(const LatentCase& c, const std::vector<std::string>& ontology,
                                      double noise_sigma, double flip_rate, Rng& rng) {
  if (!(noise_sigma >= 0.0)) throw Error("expert: noise_sigma must be >= 0");
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw Error("expert: flip_rate outside [0, 1]");
  if (c.truth.size() != ontology.size()) throw Error("expert: case does not match ontology");
  ClinicalLabelSet out;
  for (std::size_t i = 0; i < ontology.size(); ++i) {
    // Draws happen unconditionally so the stream layout does not depend on sigma.
    const double g = std::abs(rng.gaussian());
    const bool flip = rng.uniform() < flip_rate;
    const double clarity = std::abs(2.0 * c.severity[i] - 1.0);
    const double shift = noise_sigma * g * (1.0 - 0.5 * clarity);
    double p = c.truth[i] ? 1.0 - shift : shift;
    if (flip) p = 1.0 - p;
    out.labels.push_back({ontology[i], std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon)});
  }
  return out;
}

ClinicalLabelSet random_expert_predict(const std::vector<std::string>& ontology, Rng& rng) {
  ClinicalLabelSet out;
  for (const auto& name : ontology) out.labels.push_back({name, rng.uniform()});
  return out;
}

NoisyExpert::NoisyExpert(std::vector<std::string> ontology, double noise_sigma, double flip_rate,
                         std::uint64_t seed)
    : ontology_(std::move(ontology)), sigma_(noise_sigma), flip_rate_(flip_rate), seed_(seed) {
  if (!(sigma_ >= 0.0)) throw Error("expert: noise_sigma must be >= 0");
  if (!(flip_rate_ >= 0.0 && flip_rate_ <= 1.0)) throw Error("expert: flip_rate outside [0, 1]");
}

ClinicalLabelSet NoisyExpert::predict(const LatentCase& c) const {
  Rng rng = expert_rng(seed_, c);
  return noisy_expert_predict(c, ontology_, sigma_, flip_rate_, rng);
}

ClinicalLabelSet RandomExpert::predict(const LatentCase& c) const {
  Rng rng = expert_rng(seed_, c);
  return random_expert_predict(ontology_, rng);
}

}  // namespace ccd
