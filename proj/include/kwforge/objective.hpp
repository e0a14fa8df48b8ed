#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "kwforge/autodiff.hpp"
#include "kwforge/types.hpp"
#include "kwforge/vocabulary.hpp"

namespace kwforge {

// Positions are 0-based throughout the library.

enum class TargetMode { Predefined, NthMostLikely };

/// Which keyword to insert into the translation.
struct TargetSpec {
  TargetMode mode = TargetMode::Predefined;
  TokenId keyword_token = -1;  // Predefined
  std::size_t rank = 0;        // NthMostLikely, 1-based

  static TargetSpec predefined(TokenId token) { return {TargetMode::Predefined, token, 0}; }
  static TargetSpec nth_most_likely(std::size_t n) { return {TargetMode::NthMostLikely, -1, n}; }

  /// Throws TargetError / InvalidRankError when the spec cannot apply to a
  /// vocabulary of `vocab_size` tokens.
  void validate(std::size_t vocab_size) const;
};

struct ObjectiveConfig {
  double alpha = 1.0;  // weight of the similarity term, >= 0
};

struct KeywordResolution {
  TokenId token = -1;
  std::optional<std::string> warning;
};

/// Resolves a keyword string to a single token id. A multi-token keyword uses
/// its first token and reports a warning. Throws TargetError when the keyword
/// (or its first token) is not in the vocabulary.
KeywordResolution resolve_keyword(const Vocabulary& vocab, const std::string& keyword);

/// -log softmax(z_k)[t]. Throws IndexError for k outside the translation and
/// InvalidTokenError for t outside the vocabulary.
double adversarial_loss(const LogitsTensor& logits, std::size_t k, TokenId t);
ad::Var adversarial_loss(ad::Var logits, std::size_t k, TokenId t);

/// argmin over positions i of (max_j z[i][j] - z[i][t]); ties go to the
/// smallest position.
std::size_t select_attack_position(const LogitsTensor& logits, TokenId t);

struct NthTarget {
  std::size_t position = 0;
  TokenId token = -1;
};

/// For each position the token ranked n-th by logit (ties ranked by smaller
/// id first); returns the position whose n-th token is closest to the top
/// logit, smallest position on ties. Throws InvalidRankError unless
/// 1 <= n <= |V|.
NthTarget select_nth_likely_target(const LogitsTensor& logits, std::size_t n);

/// Mean over rows of 1 - cos(v_i, v'_i). Throws ShapeError on mismatched
/// shapes and NumericError on zero-norm rows.
double similarity_loss(const EmbeddingMatrix& v, const EmbeddingMatrix& v_prime);
ad::Var similarity_loss(ad::Var v, ad::Var v_prime);

/// adversarial_loss + alpha * similarity_loss.
double total_loss(const LogitsTensor& logits, std::size_t k, TokenId t, const EmbeddingMatrix& v,
                  const EmbeddingMatrix& v_prime, const ObjectiveConfig& cfg);
ad::Var total_loss(ad::Var logits, std::size_t k, TokenId t, ad::Var v, ad::Var v_prime,
                   const ObjectiveConfig& cfg);

}  // namespace kwforge
