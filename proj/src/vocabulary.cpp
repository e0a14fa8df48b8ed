#include "kwforge/vocabulary.hpp"

#include <sstream>

#include "kwforge/errors.hpp"

namespace kwforge {

bool TokenSequence::contains(TokenId t) const {
  for (TokenId id : ids) {
    if (id == t) return true;
  }
  return false;
}

std::size_t TokenSequenceHash::operator()(const TokenSequence& s) const noexcept {
  // FNV-1a over the ids.
  std::size_t h = 1469598103934665603ull;
  for (TokenId id : s.ids) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(id));
    h *= 1099511628211ull;
  }
  return h;
}

std::size_t hamming_distance(const TokenSequence& a, const TokenSequence& b) {
  if (a.size() != b.size()) throw ShapeError("hamming distance needs equal-length sequences");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.ids[i] != b.ids[i] ? 1 : 0;
  return d;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialIds specials)
    : tokens_(std::move(tokens)), specials_(specials) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw InvalidInputError("vocabulary: token " + std::to_string(i) + " is empty or has whitespace");
    }
    if (!index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw InvalidInputError("vocabulary: duplicate token '" + t + "'");
    }
  }
  for (TokenId s : {specials_.pad, specials_.bos, specials_.eos, specials_.unk}) {
    if (!valid(s)) throw InvalidInputError("vocabulary: special id out of range");
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocabulary::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? specials_.unk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid(id)) throw InvalidTokenError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::tokenize(std::string_view text) const {
  TokenSequence seq;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) seq.ids.push_back(id_of(word));
  if (seq.empty()) throw InvalidInputError("tokenize: empty input");
  return seq;
}

std::string Vocabulary::detokenize(const TokenSequence& seq) const {
  if (seq.empty()) throw InvalidInputError("detokenize: empty sequence");
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += token(seq.ids[i]);
  }
  return out;
}

void Vocabulary::validate(const TokenSequence& seq) const {
  for (TokenId id : seq.ids) {
    if (!valid(id)) throw InvalidTokenError("token id " + std::to_string(id) + " out of range");
  }
}

}  // namespace kwforge
