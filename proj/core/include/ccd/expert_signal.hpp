#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/logits.hpp"

namespace ccd {

// Probabilities are clamped into [kProbEpsilon, 1 - kProbEpsilon] before the
// log-odds transform so that experts emitting exact 0/1 stay finite.
inline constexpr double kProbEpsilon = 1e-6;

inline constexpr std::string_view kDefaultAnchorPrefix =
    "Attention to the following clinical instructions:";

struct ClinicalLabel {
  std::string name;
  double prob = 0.0;

  friend bool operator==(const ClinicalLabel&, const ClinicalLabel&) = default;
};

// Expert output: one probability per finding. Names are unique.
struct ClinicalLabelSet {
  std::vector<ClinicalLabel> labels;

  void validate() const;
  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  friend bool operator==(const ClinicalLabelSet&, const ClinicalLabelSet&) = default;
};

// Label name -> vocabulary ids realising that label's surface form.
using TokenMap = std::map<std::string, std::vector<TokenId>>;

// Cap on the magnitude of any single label's log-odds bias: log(gamma), or
// no cap at all when disabled.
class PlausibilityConstraint {
 public:
  static PlausibilityConstraint disabled() { return PlausibilityConstraint(std::nullopt); }
  static PlausibilityConstraint likelihood_ratio(double gamma);

  bool enabled() const noexcept { return gamma_.has_value(); }
  // Only meaningful when enabled().
  double gamma() const { return *gamma_; }
  double max_bias() const;

  friend bool operator==(const PlausibilityConstraint&, const PlausibilityConstraint&) = default;

 private:
  explicit PlausibilityConstraint(std::optional<double> gamma) : gamma_(gamma) {}
  std::optional<double> gamma_;
};

// Additive per-token bias over the vocabulary; entries default to 0.
class BiasMap {
 public:
  explicit BiasMap(std::size_t vocab_size) : bias_(vocab_size, 0.0) {}

  std::size_t size() const noexcept { return bias_.size(); }
  double operator[](std::size_t i) const { return bias_[i]; }
  void add(TokenId id, double delta);
  bool is_zero() const;
  const std::vector<double>& values() const noexcept { return bias_; }

 private:
  std::vector<double> bias_;
};

// Labels with prob strictly above tau, ordered by prob descending then name.
ClinicalLabelSet filter_labels(const ClinicalLabelSet& labels, double tau);

// "<prefix> name1, name2, ..." or "" when nothing is selected.
std::string build_anchor_prompt(const ClinicalLabelSet& selected,
                                std::string_view prefix = kDefaultAnchorPrefix);

// log(s / (1 - s)) after clamping s into [eps, 1 - eps].
double label_bias(double s);

double clip_bias(double bias, const PlausibilityConstraint& constraint);

// Every label contributes clip_bias(label_bias(s)) to each of its tokens;
// tokens shared by several labels accumulate the sum.
BiasMap build_bias_map(const ClinicalLabelSet& labels, const TokenMap& token_map,
                       const PlausibilityConstraint& constraint, std::size_t vocab_size);

// `<label name>\t<id>,<id>,...` per line.
TokenMap read_token_map(std::istream& in);
void write_token_map(std::ostream& out, const TokenMap& map);

// One JSON object per line: {"name": "...", "prob": 0.9}.
ClinicalLabelSet read_label_set(std::istream& in);
void write_label_set(std::ostream& out, const ClinicalLabelSet& labels);

}  // namespace ccd
