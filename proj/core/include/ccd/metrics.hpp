#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ccd {

// Words and the punctuation marks . , : ; as separate tokens.
std::vector<std::string> split_words(std::string_view text);

// A finding counts as mentioned when its name occurs in a sentence that has
// no earlier "no" token. Sentences end at ".".
std::vector<bool> extract_mentions(std::string_view text, const std::vector<std::string>& ontology);

struct SymptomScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

// Empty prediction against empty truth scores 1.0 on every ratio (with zero
// counts); otherwise 0/0 ratios are 0.
SymptomScore symptom_prf(const std::vector<bool>& pred, const std::vector<bool>& truth);

// LCS-based F-measure; 0 when the LCS is empty.
double rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

struct EpisodeResult {
  std::uint64_t case_id = 0;
  std::string generated;
  std::string reference;
  std::vector<bool> truth;
  std::vector<bool> predicted;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double rouge_l = 0.0;
  std::size_t tokens = 0;
};

EpisodeResult score_episode(std::uint64_t case_id, std::string generated, std::string reference,
                            std::vector<bool> truth, std::size_t tokens,
                            const std::vector<std::string>& ontology);

struct AggregateReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double rouge_l = 0.0;      // mean over episodes
  double fp_rate = 0.0;      // fp / (fp + tn)
  double fn_rate = 0.0;      // fn / (fn + tp)
  double mean_tokens = 0.0;
  std::size_t episodes = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Micro-averaged over all episodes; throws on an empty list. Sums are taken
// in case-id order so the result does not depend on the input order.
AggregateReport aggregate(const std::vector<EpisodeResult>& results);

}  // namespace ccd
