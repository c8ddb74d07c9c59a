#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccd/logits.hpp"

namespace ccd {

// How a token is rendered when a generation is turned back into text.
enum class TokenKind : std::uint8_t {
  word,   // separated by a space
  punct,  // attaches to the previous token
  item,   // list item; consecutive items are joined with ", "
  eos,    // never rendered
};

// Fixed per-session vocabulary of whole-word tokens.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<TokenKind> kinds, TokenId eos);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId eos() const noexcept { return eos_; }
  const std::string& token(TokenId id) const;
  TokenKind kind(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<TokenKind>& kinds() const noexcept { return kinds_; }
  std::optional<TokenId> find(std::string_view text) const;

  // Greedy longest-match segmentation; throws ccd::Error on text the
  // vocabulary cannot cover.
  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.kinds_ == b.kinds_ && a.eos_ == b.eos_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  TokenId eos_ = 0;
  std::unordered_map<std::string, TokenId> index_;
};

std::string_view to_string(TokenKind kind);
TokenKind token_kind_from_string(std::string_view text);

}  // namespace ccd
