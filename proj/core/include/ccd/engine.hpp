#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/backends.hpp"
#include "ccd/expert_signal.hpp"
#include "ccd/logits.hpp"
#include "ccd/processors.hpp"
#include "ccd/rng.hpp"

namespace ccd {

enum class DecodeMode { greedy, sample };

// Which guidance stages are active. `scd_only` drops the expert bias,
// `ecd_only` drops the anchored branch (alpha = 0), `off` is plain decoding.
enum class Ablation { full, scd_only, ecd_only, off };

// Which labels contribute to the token bias: every label the expert scored,
// or only those above the anchor threshold.
enum class BiasScope { all, selected };

std::string_view to_string(DecodeMode m);
std::string_view to_string(Ablation a);
std::string_view to_string(BiasScope s);
DecodeMode decode_mode_from_string(std::string_view text);
Ablation ablation_from_string(std::string_view text);  // accepts scd-only and scd_only
BiasScope bias_scope_from_string(std::string_view text);

struct DecodeConfig {
  double alpha = 0.5;  // anchored-branch weight
  double beta = 0.5;   // expert-biased branch weight
  PlausibilityConstraint gamma = PlausibilityConstraint::likelihood_ratio(10.0);
  double tau = 0.5;    // anchor selection threshold (strict)
  BiasScope bias_scope = BiasScope::all;
  DecodeMode mode = DecodeMode::greedy;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 64;
  ProcessorConfig processors;
  Ablation ablation = Ablation::full;
  std::string anchor_prefix = std::string(kDefaultAnchorPrefix);
  bool record_steps = false;  // keep every stage's logits in Generation::steps

  void validate() const;
};

// Per-step logits at every stage of the fusion, plus the committed token.
struct StepRecord {
  std::size_t step = 0;
  LogitVector original;       // z_o
  LogitVector anchored;       // z_c
  LogitVector scd;            // log-prob interpolation of the branches
  LogitVector scd_processed;  // after the processor stack
  LogitVector ecd;            // scd + expert bias
  LogitVector ccd;            // final fused logits
  TokenId chosen = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Generation {
  std::vector<TokenId> tokens;
  std::string text;
  bool stopped_at_eos = false;
  std::vector<StepRecord> steps;  // empty unless DecodeConfig::record_steps

  friend bool operator==(const Generation&, const Generation&) = default;
};

// Expert-derived inputs shared by every step of one generation.
struct Guidance {
  ClinicalLabelSet selected;          // labels above tau, anchor order
  std::string anchor_text;            // "" when nothing is selected
  std::vector<TokenId> anchor_tokens;
  BiasMap bias;
};

Guidance prepare_guidance(const ClinicalLabelSet& labels, const Vocabulary& vocab,
                          const TokenMap& token_map, const DecodeConfig& cfg);

// alpha/beta after applying the ablation switch.
struct FusionWeights {
  double alpha = 0.0;
  double beta = 0.0;
  bool use_bias = false;
};
FusionWeights effective_weights(const DecodeConfig& cfg);

LogitVector scd_step(const LogitVector& z_o, const LogitVector& z_c, double alpha);
LogitVector ecd_step(const LogitVector& z_scd, const BiasMap& bias);
LogitVector ccd_step(const LogitVector& z_scd_processed, const LogitVector& z_ecd, double beta);

// Greedy: argmax. Sample: inverse-CDF draw from softmax(z) with one uniform.
TokenId next_token(const LogitVector& z, DecodeMode mode, Rng& rng);

// All fusion stages for one step; `chosen` is left at 0.
StepRecord fuse_step(const LogitVector& z_o, const LogitVector& z_c, const BiasMap& bias,
                     std::span<const TokenId> history, const FusionWeights& weights,
                     const ProcessorConfig& processors);

// Dual-branch decoding with labels already in hand. Both branches receive the
// same committed token after every step.
Generation generate_with_labels(ModelBackend& model, const ClinicalLabelSet& labels,
                                std::span<const TokenId> prompt, const TokenMap& token_map,
                                const DecodeConfig& cfg);

// Queries the expert once for the case, then decodes.
Generation generate(ModelBackend& model, const ExpertBackend& expert, const LatentCase& c,
                    std::span<const TokenId> prompt, const TokenMap& token_map,
                    const DecodeConfig& cfg);

// Single-branch decoding: processor stack on log_softmax(z_o), no guidance.
Generation generate_plain(ModelBackend& model, std::span<const TokenId> prompt,
                          const DecodeConfig& cfg);

// Canonical one-line JSON rendering; byte-identical for equal generations.
std::string serialize_generation(const Generation& g);

// One line per (step, stage): {"step":t,"stage":"scd","logits":[...],"token":k}.
void write_step_trace(std::ostream& out, const Generation& g);

}  // namespace ccd
