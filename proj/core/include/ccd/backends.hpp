#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/expert_signal.hpp"
#include "ccd/logits.hpp"
#include "ccd/rng.hpp"
#include "ccd/toy_lexicon.hpp"
#include "ccd/world.hpp"

namespace ccd {

enum class Branch { original, anchored };

std::string_view to_string(Branch b);
Branch branch_from_string(std::string_view text);

struct ModelQuery {
  std::span<const TokenId> context;  // prompt (+ anchor) + generated suffix
  Branch branch = Branch::original;
  std::size_t step = 0;
};

// Source of next-token logits. Implementations must be deterministic in the
// query; stateful ones (recorders) must not be shared across generations.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual LogitVector next_logits(const ModelQuery& query) = 0;
};

// Source of the finding probabilities for a case.
class ExpertBackend {
 public:
  virtual ~ExpertBackend() = default;
  virtual ClinicalLabelSet predict(const LatentCase& c) const = 0;
};

// ---------------------------------------------------------------------------
// Toy report model

struct ToyModelParams {
  double salience_scale = 6.0;   // log-weight per unit of severity above 0.5
  double distractor_gain = 2.0;  // log-weight added to a finding named in the history line
  double fn_bias = 0.6;          // fraction of mass removed from present findings without an anchor
  double fp_bias = 0.4;          // relative mass added to absent findings under an anchor
  double floor = 1e-6;           // weight of tokens the grammar does not allow

  void validate() const;
};

// Word-level autoregressive report grammar conditioned on a latent case.
// At a list slot (after "Findings:" or a finding) every unmentioned finding i
// has weight exp(salience_scale * (severity_i - 0.5)) against weight 1 for
// closing the list; every other position is a deterministic grammar step.
class ToyReportModel {
 public:
  ToyReportModel(ToyLexicon lex, ToyModelParams params);

  const ToyLexicon& lexicon() const noexcept { return lex_; }
  const ToyModelParams& params() const noexcept { return params_; }

  // Next-token distribution without the miscalibration knobs.
  std::vector<double> clean_row(const LatentCase& c, std::span<const TokenId> context) const;
  // Distribution with fn/fp miscalibration applied, renormalised.
  std::vector<double> row(const LatentCase& c, std::span<const TokenId> context) const;

 private:
  std::vector<double> weights(const LatentCase& c, std::span<const TokenId> context,
                              bool miscalibrated) const;

  ToyLexicon lex_;
  ToyModelParams params_;
};

LogitVector toy_next_logits(const ToyReportModel& model, const LatentCase& c,
                            std::span<const TokenId> context);

// Binds the toy model to one case.
class ToyModelBackend final : public ModelBackend {
 public:
  ToyModelBackend(const ToyReportModel& model, const LatentCase& c) : model_(model), case_(c) {}
  const Vocabulary& vocabulary() const override { return model_.lexicon().vocab; }
  LogitVector next_logits(const ModelQuery& query) override {
    return toy_next_logits(model_, case_, query.context);
  }

 private:
  const ToyReportModel& model_;
  const LatentCase& case_;
};

// ---------------------------------------------------------------------------
// Experts

// Each finding starts at 1 (present) or 0 (absent) and moves toward the wrong
// side by |N(0, sigma)|, scaled down for unambiguous severities; with
// probability flip_rate the result is mirrored. Clamped into [eps, 1 - eps].
ClinicalLabelSet noisy_expert_predict(const LatentCase& c, const std::vector<std::string>& ontology,
                                      double noise_sigma, double flip_rate, Rng& rng);

// Case-independent uniform [0, 1) probability per finding.
ClinicalLabelSet random_expert_predict(const std::vector<std::string>& ontology, Rng& rng);

class NoisyExpert final : public ExpertBackend {
 public:
  NoisyExpert(std::vector<std::string> ontology, double noise_sigma, double flip_rate,
              std::uint64_t seed);
  ClinicalLabelSet predict(const LatentCase& c) const override;

 private:
  std::vector<std::string> ontology_;
  double sigma_;
  double flip_rate_;
  std::uint64_t seed_;
};

class RandomExpert final : public ExpertBackend {
 public:
  RandomExpert(std::vector<std::string> ontology, std::uint64_t seed)
      : ontology_(std::move(ontology)), seed_(seed) {}
  ClinicalLabelSet predict(const LatentCase& c) const override;

 private:
  std::vector<std::string> ontology_;
  std::uint64_t seed_;
};

// Returns the same label set for every case (labels loaded from a file or
// captured in a trace).
class FixedExpert final : public ExpertBackend {
 public:
  explicit FixedExpert(ClinicalLabelSet labels) : labels_(std::move(labels)) { labels_.validate(); }
  ClinicalLabelSet predict(const LatentCase&) const override { return labels_; }

 private:
  ClinicalLabelSet labels_;
};

// Per-case expert seed: the episode seed (base + case id) on the expert stream.
inline Rng expert_rng(std::uint64_t base_seed, const LatentCase& c) {
  return make_rng(base_seed + c.id, Stream::expert);
}

}  // namespace ccd
