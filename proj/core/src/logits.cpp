#include "ccd/logits.hpp"

#include <cmath>
#include <string>

#include "ccd/error.hpp"

namespace ccd {

void check_logits(std::span<const double> z) {
  if (z.empty()) throw Error("degenerate logits: empty vector");
  bool any_finite = false;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    if (std::isnan(v)) throw Error("NaN logit at token " + std::to_string(i));
    if (v == std::numeric_limits<double>::infinity()) {
      throw Error("+inf logit at token " + std::to_string(i));
    }
    any_finite = any_finite || std::isfinite(v);
  }
  if (!any_finite) throw Error("degenerate logits: every token is banned");
}

double logsumexp(std::span<const double> z) {
  check_logits(z);
  double hi = kBanned;
  for (double v : z) hi = std::max(hi, v);
  double acc = 0.0;
  for (double v : z) {
    if (v != kBanned) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

LogProbVector log_softmax(const LogitVector& z) {
  check_logits(z.view());
  double hi = kBanned;
  for (double v : z) hi = std::max(hi, v);
  double acc = 0.0;
  for (double v : z) {
    if (v != kBanned) acc += std::exp(v - hi);
  }
  // Shift first so large equal logits come out exact.
  const double log_acc = std::log(acc);
  LogProbVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] == kBanned ? kBanned : (z[i] - hi) - log_acc;
  }
  return out;
}

ProbVector softmax(const LogitVector& z) {
  const double lse = logsumexp(z.view());
  ProbVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] == kBanned ? 0.0 : std::exp(z[i] - lse);
  }
  return out;
}

LogitVector interpolate(const LogitVector& a, const LogitVector& b, double w) {
  if (a.size() != b.size()) {
    throw Error("interpolate: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  if (!(w >= 0.0 && w <= 1.0)) throw Error("interpolate: weight outside [0, 1]");
  if (w == 0.0) return a;
  if (w == 1.0) return b;
  LogitVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    // Equal operands pass through untouched; this keeps interpolate(a, a, w)
    // bit-exact and -inf on both sides banned without producing NaN.
    out[i] = a[i] == b[i] ? a[i] : (1.0 - w) * a[i] + w * b[i];
  }
  return out;
}

TokenId argmax(const LogitVector& z) {
  check_logits(z.view());
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

}  // namespace ccd
