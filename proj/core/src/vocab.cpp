#include "ccd/vocab.hpp"

#include <algorithm>
#include <cctype>

#include "ccd/error.hpp"
#include "ccd/toy_lexicon.hpp"

namespace ccd {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<TokenKind> kinds, TokenId eos)
    : tokens_(std::move(tokens)), kinds_(std::move(kinds)), eos_(eos) {
  if (tokens_.empty()) throw Error("vocabulary must not be empty");
  if (kinds_.size() != tokens_.size()) throw Error("vocabulary: token/kind count mismatch");
  if (eos_ < 0 || static_cast<std::size_t>(eos_) >= tokens_.size()) {
    throw Error("vocabulary: eos id out of range");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocabulary: empty token string");
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenKind Vocabulary::kind(TokenId id) const {
  token(id);
  return kinds_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view text) const {
  const auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    std::size_t best_len = 0;
    TokenId best = -1;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const std::string& t = tokens_[i];
      if (t.size() <= best_len || text.compare(pos, t.size(), t) != 0) continue;
      const std::size_t end = pos + t.size();
      // Reject matches that stop in the middle of a word ("no" in "node").
      if (end < text.size() && is_word_char(t.back()) && is_word_char(text[end])) continue;
      best_len = t.size();
      best = static_cast<TokenId>(i);
    }
    if (best < 0) {
      throw Error("cannot encode text at offset " + std::to_string(pos) + ": '" +
                  std::string(text.substr(pos, 24)) + "'");
    }
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  TokenKind prev = TokenKind::eos;
  for (TokenId id : ids) {
    const TokenKind k = kind(id);
    if (k == TokenKind::eos) continue;
    if (!out.empty()) {
      if (k == TokenKind::item && prev == TokenKind::item) {
        out += ", ";
      } else if (k != TokenKind::punct) {
        out += ' ';
      }
    }
    out += token(id);
    prev = k;
  }
  return out;
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::word: return "word";
    case TokenKind::punct: return "punct";
    case TokenKind::item: return "item";
    case TokenKind::eos: return "eos";
  }
  return "word";
}

TokenKind token_kind_from_string(std::string_view text) {
  if (text == "word") return TokenKind::word;
  if (text == "punct") return TokenKind::punct;
  if (text == "item") return TokenKind::item;
  if (text == "eos") return TokenKind::eos;
  throw Error("unknown token kind '" + std::string(text) + "'");
}

std::vector<std::string> chexpert_ontology(std::size_t n) {
  static const std::vector<std::string> kChexpert = {
      "Atelectasis",      "Cardiomegaly", "Consolidation", "Edema",
      "Enlarged Cardiomediastinum", "Fracture", "Lung Lesion", "Lung Opacity",
      "No Finding",       "Pleural Effusion", "Pleural Other", "Pneumonia",
      "Pneumothorax",     "Support Devices",
  };
  if (n == 0) throw Error("ontology needs at least one finding");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i < kChexpert.size() ? kChexpert[i] : "Finding " + std::to_string(i + 1));
  }
  return out;
}

std::optional<std::size_t> ToyLexicon::symptom_index(TokenId id) const {
  const auto it = std::find(symptom_ids.begin(), symptom_ids.end(), id);
  if (it == symptom_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - symptom_ids.begin());
}

ToyLexicon build_toy_lexicon(std::vector<std::string> ontology) {
  if (ontology.empty()) throw Error("ontology needs at least one finding");
  std::vector<std::string> tokens;
  std::vector<TokenKind> kinds;
  auto add = [&](std::string text, TokenKind kind) {
    tokens.push_back(std::move(text));
    kinds.push_back(kind);
    return static_cast<TokenId>(tokens.size() - 1);
  };

  ToyLexicon lex;
  lex.eos = add("<eos>", TokenKind::eos);
  lex.image = add("<image>", TokenKind::word);
  lex.describe = add("Describe", TokenKind::word);
  lex.the = add("the", TokenKind::word);
  lex.findings_word = add("findings", TokenKind::word);
  lex.period = add(".", TokenKind::punct);
  lex.comma = add(",", TokenKind::punct);
  lex.report_header = add("Findings:", TokenKind::word);
  lex.negation = add("no", TokenKind::word);
  lex.acute = add("acute", TokenKind::word);
  lex.history = add("History:", TokenKind::word);
  lex.suspected = add("suspected", TokenKind::word);
  lex.attention = add("Attention", TokenKind::word);
  add("to", TokenKind::word);
  add("following", TokenKind::word);
  add("clinical", TokenKind::word);
  add("instructions:", TokenKind::word);
  for (const auto& name : ontology) {
    const TokenId id = add(name, TokenKind::item);
    lex.symptom_ids.push_back(id);
    lex.token_map[name] = {id};
  }
  lex.vocab = Vocabulary(std::move(tokens), std::move(kinds), lex.eos);
  lex.ontology = std::move(ontology);
  return lex;
}

}  // namespace ccd
