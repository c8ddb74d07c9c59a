#include "ccd/processors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ccd/error.hpp"

namespace ccd {

namespace {

// Relative slack on the cumulative-mass comparison in top-p, so that a prefix
// whose exact mass equals p is not rejected because of summation rounding.
constexpr double kTopPSlack = 1e-12;

// Finite-entry ids ordered by score descending, ties by ascending id.
std::vector<std::size_t> ranked_finite(const LogitVector& z) {
  std::vector<std::size_t> ids;
  ids.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != kBanned) ids.push_back(i);
  }
  std::stable_sort(ids.begin(), ids.end(),
                   [&z](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  return ids;
}

}  // namespace

void ProcessorConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("top_p must be in (0, 1]");
  if (!(repetition_penalty >= 1.0) || !std::isfinite(repetition_penalty)) {
    throw Error("repetition_penalty must be >= 1");
  }
  if (eos_token_id < 0) throw Error("eos_token_id must be a token id");
}

bool ProcessorConfig::is_identity() const {
  return temperature == 1.0 && top_k == 0 && top_p == 1.0 && repetition_penalty == 1.0 &&
         min_length == 0;
}

LogitVector apply_repetition_penalty(LogitVector z, std::span<const TokenId> history, double rho) {
  if (!(rho >= 1.0)) throw Error("repetition penalty must be >= 1");
  if (rho == 1.0) return z;
  std::vector<bool> seen(z.size(), false);
  for (TokenId t : history) {
    if (t < 0 || static_cast<std::size_t>(t) >= z.size()) {
      throw Error("repetition penalty: history token " + std::to_string(t) + " out of range");
    }
    seen[static_cast<std::size_t>(t)] = true;
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!seen[i]) continue;
    z[i] = z[i] > 0.0 ? z[i] / rho : z[i] * rho;
  }
  return z;
}

LogitVector enforce_min_length(LogitVector z, std::size_t generated_len, const ProcessorConfig& cfg) {
  if (generated_len >= cfg.min_length) return z;
  const auto eos = static_cast<std::size_t>(cfg.eos_token_id);
  if (eos >= z.size()) throw Error("min_length: eos_token_id out of range");
  z[eos] = kBanned;
  return z;
}

LogitVector apply_temperature(LogitVector z, double temperature) {
  if (!(temperature > 0.0)) throw Error("temperature must be > 0");
  if (temperature == 1.0) return z;
  for (double& v : z) {
    if (v != kBanned) v /= temperature;
  }
  return z;
}

LogitVector apply_top_k(LogitVector z, std::size_t k) {
  if (k == 0) return z;
  const auto ids = ranked_finite(z);
  if (k >= ids.size()) return z;
  for (std::size_t r = k; r < ids.size(); ++r) z[ids[r]] = kBanned;
  return z;
}

LogitVector apply_top_p(LogitVector z, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw Error("top_p must be in (0, 1]");
  if (p == 1.0) return z;
  const ProbVector probs = softmax(z);
  const auto ids = ranked_finite(z);
  double cumulative = 0.0;
  std::size_t keep = 0;
  while (keep < ids.size()) {
    cumulative += probs[ids[keep]];
    ++keep;
    if (cumulative >= p * (1.0 - kTopPSlack)) break;
  }
  for (std::size_t r = keep; r < ids.size(); ++r) z[ids[r]] = kBanned;
  return z;
}

LogitVector run_stack(const LogitVector& z, std::span<const TokenId> history,
                      std::size_t generated_len, const ProcessorConfig& cfg) {
  check_logits(z.view());
  LogitVector out = apply_repetition_penalty(z, history, cfg.repetition_penalty);
  out = enforce_min_length(std::move(out), generated_len, cfg);
  check_logits(out.view());
  out = apply_temperature(std::move(out), cfg.temperature);
  out = apply_top_k(std::move(out), cfg.top_k);
  out = apply_top_p(std::move(out), cfg.top_p);
  check_logits(out.view());
  return out;
}

}  // namespace ccd
