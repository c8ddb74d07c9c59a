#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace ccd {

using TokenId = std::int32_t;

// Canonical "banned token" value. NaN is never a legal score.
inline constexpr double kBanned = -std::numeric_limits<double>::infinity();

// A vocabulary-sized vector of scores. The tag keeps logits, log-probabilities
// and probabilities from being mixed up by accident.
template <class Tag>
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> values) : values_(std::move(values)) {}
  ScoreVector(std::initializer_list<double> values) : values_(values) {}
  explicit ScoreVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<const double> view() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> values_;
};

struct LogitTag {};
struct LogProbTag {};
struct ProbTag {};

using LogitVector = ScoreVector<LogitTag>;
using LogProbVector = ScoreVector<LogProbTag>;
using ProbVector = ScoreVector<ProbTag>;

// Log-probabilities are valid logits.
inline LogitVector as_logits(const LogProbVector& lp) { return LogitVector(lp.values()); }

// Throws ccd::Error when the vector is empty, holds NaN or +inf, or has no
// finite entry ("degenerate logits").
void check_logits(std::span<const double> z);

// log(sum(exp(z))) with max-subtraction. Requires at least one finite entry.
double logsumexp(std::span<const double> z);

LogProbVector log_softmax(const LogitVector& z);
ProbVector softmax(const LogitVector& z);

// (1-w)*a + w*b elementwise. A zero weight drops its operand entirely, so a
// banned entry on the dropped side does not leak through (0 * -inf := 0).
LogitVector interpolate(const LogitVector& a, const LogitVector& b, double w);

// Index of the maximum entry; ties go to the lowest token id.
TokenId argmax(const LogitVector& z);

}  // namespace ccd
