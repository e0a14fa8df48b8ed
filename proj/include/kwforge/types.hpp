#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace kwforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using TokenId = std::int32_t;

/// A sentence as vocabulary ids.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool contains(TokenId t) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct TokenSequenceHash {
  std::size_t operator()(const TokenSequence& s) const noexcept;
};

/// Number of positions where two equal-length sequences differ.
std::size_t hamming_distance(const TokenSequence& a, const TokenSequence& b);

enum class Space { Nmt, Lm };

/// One row per token position; rows live in either the translation model's
/// embedding space or the language-model space.
struct EmbeddingMatrix {
  Matrix rows;
  Space space = Space::Nmt;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

/// m x |V| pre-softmax scores, one row per translation position.
struct LogitsTensor {
  Matrix values;

  Eigen::Index positions() const { return values.rows(); }
  Eigen::Index vocab_size() const { return values.cols(); }
};

}  // namespace kwforge
