#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccd/rng.hpp"
#include "ccd/toy_lexicon.hpp"

namespace ccd {

// Parameters of the synthetic case generator and of the toy report model's
// miscalibration.
struct WorldParams {
  std::size_t n_symptoms = 14;
  std::vector<double> prevalence = std::vector<double>(14, 0.3);
  double distractor_rate = 0.2;
  double fn_bias = 0.6;
  double fp_bias = 0.4;

  void validate() const;
  // Sets every finding's prevalence to `p` (and resizes to n_symptoms).
  void set_uniform_prevalence(double p);
};

// One synthetic study: hidden findings, their severities and the prompt.
// severity > 0.5 exactly when the finding is present.
struct LatentCase {
  std::uint64_t id = 0;
  std::vector<bool> truth;
  std::vector<double> severity;
  std::vector<TokenId> prompt;
  std::optional<std::size_t> distractor;  // finding named in the misleading history line

  std::size_t present_count() const;
  friend bool operator==(const LatentCase&, const LatentCase&) = default;
};

// Draws presence ~ Bernoulli(prevalence_i), severity uniform on (0.5, 1] when
// present and (0, 0.5] when absent, and with probability distractor_rate
// appends "History: suspected <absent finding> ." to the prompt.
LatentCase sample_case(const WorldParams& params, const ToyLexicon& lex, Rng& rng,
                       std::uint64_t id = 0);

// "<image> Describe the findings ." (+ optional distractor line).
std::vector<TokenId> base_prompt(const ToyLexicon& lex);

// Canonical findings text listing exactly the present findings in ontology order.
std::string reference_report(const LatentCase& c, const std::vector<std::string>& ontology);

// One JSON object per case per line.
void write_case(std::ostream& out, const LatentCase& c);
LatentCase read_case(const std::string& line);

}  // namespace ccd
