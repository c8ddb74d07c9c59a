#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ccd/expert_signal.hpp"
#include "ccd/vocab.hpp"

namespace ccd {

// First n findings of the 14-label CheXpert ontology; names beyond 14 are
// synthesised as "Finding <k>".
std::vector<std::string> chexpert_ontology(std::size_t n = 14);

// Word-level vocabulary of the toy report grammar: one token per finding,
// the prompt and anchor words, report punctuation and eos.
struct ToyLexicon {
  Vocabulary vocab;
  TokenMap token_map;
  std::vector<std::string> ontology;
  std::vector<TokenId> symptom_ids;  // indexed like `ontology`

  TokenId eos{}, image{}, describe{}, the{}, findings_word{}, period{}, comma{};
  TokenId report_header{}, negation{}, acute{}, history{}, suspected{};
  TokenId attention{};

  // Ontology index of a finding token, if it is one.
  std::optional<std::size_t> symptom_index(TokenId id) const;
};

ToyLexicon build_toy_lexicon(std::vector<std::string> ontology);

}  // namespace ccd
