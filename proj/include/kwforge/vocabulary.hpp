#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kwforge/types.hpp"

namespace kwforge {

struct SpecialIds {
  TokenId pad = 0;
  TokenId bos = 1;
  TokenId eos = 2;
  TokenId unk = 3;
};

/// Bijection between token strings and ids 0..|V|-1.
///
/// Tokenization is whitespace splitting followed by exact lookup; words that
/// are not in the vocabulary map to the unk id.
class Vocabulary {
 public:
  /// Throws InvalidInputError on duplicate tokens, empty tokens, or special
  /// ids outside the vocabulary.
  Vocabulary(std::vector<std::string> tokens, SpecialIds specials);

  std::size_t size() const { return tokens_.size(); }
  const SpecialIds& specials() const { return specials_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool contains(std::string_view token) const;
  /// Id of `token`, or the unk id.
  TokenId id_of(std::string_view token) const;
  /// Throws InvalidTokenError when `id` is out of range.
  const std::string& token(TokenId id) const;
  bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }

  /// Throws InvalidInputError on empty or all-whitespace text.
  TokenSequence tokenize(std::string_view text) const;
  /// Throws InvalidInputError on an empty sequence, InvalidTokenError on a bad id.
  std::string detokenize(const TokenSequence& seq) const;

  /// Throws InvalidTokenError unless every id is valid.
  void validate(const TokenSequence& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  SpecialIds specials_;
};

}  // namespace kwforge
