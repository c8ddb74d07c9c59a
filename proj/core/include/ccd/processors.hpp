#pragma once

#include <cstddef>
#include <span>

#include "ccd/logits.hpp"

namespace ccd {

// Settings for the standard decoding controllers applied to the first-stage
// fused logits. The defaults form the identity stack.
struct ProcessorConfig {
  double temperature = 1.0;         // > 0
  std::size_t top_k = 0;            // 0 disables
  double top_p = 1.0;               // (0, 1]; 1 disables
  double repetition_penalty = 1.0;  // >= 1; 1 disables
  std::size_t min_length = 0;
  TokenId eos_token_id = 0;

  void validate() const;
  bool is_identity() const;
};

// CTRL-style penalty: positive scores of previously generated tokens are
// divided by rho, non-positive ones multiplied. Each token is penalised once
// regardless of how often it occurs in the history.
LogitVector apply_repetition_penalty(LogitVector z, std::span<const TokenId> history, double rho);

LogitVector enforce_min_length(LogitVector z, std::size_t generated_len, const ProcessorConfig& cfg);

LogitVector apply_temperature(LogitVector z, double temperature);

// Keeps the k highest finite scores (ties keep the lower id) and bans the rest.
LogitVector apply_top_k(LogitVector z, std::size_t k);

// Keeps the smallest probability-sorted prefix whose mass reaches p, never
// fewer than one token.
LogitVector apply_top_p(LogitVector z, double p);

// repetition penalty -> min length -> temperature -> top-k -> top-p.
// Throws ccd::Error if every token ends up banned.
LogitVector run_stack(const LogitVector& z, std::span<const TokenId> history,
                      std::size_t generated_len, const ProcessorConfig& cfg);

}  // namespace ccd
