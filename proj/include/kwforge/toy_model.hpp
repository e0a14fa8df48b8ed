#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kwforge/model.hpp"

namespace kwforge {

/// Parameters of the single-layer attentional encoder-decoder.
///
/// Encoder: C = tanh(X enc_w + enc_b) over the source rows followed by the
/// end-of-sentence embedding. Keys mix a one-hot position code (scaled by
/// position_scale) with C key_w. The decoder is a tanh RNN over the previous
/// target token, queries with its own position code plus s query_w, and
/// scores tokens from the attended context and its state.
struct ToyModelWeights {
  Matrix embed;          // V x d
  Matrix enc_w;          // d x h
  RowVector enc_b;       // 1 x h
  Matrix key_w;          // h x P
  Matrix query_w;        // h x P
  Matrix init_w;         // h x h
  Matrix dec_in_w;       // d x h
  Matrix dec_rec_w;      // h x h
  RowVector dec_b;       // 1 x h
  Matrix out_ctx_w;      // h x V
  Matrix out_state_w;    // h x V
  RowVector out_b;       // 1 x V
  double position_scale = 3.0;
  Eigen::Index max_positions = 40;  // P
  std::size_t decode_limit = 32;
};

class ToyModel final : public NmtModel {
 public:
  ToyModel(std::string id, Vocabulary vocab, ToyModelWeights weights);

  std::string id() const override { return id_; }
  const Vocabulary& vocabulary() const override { return vocab_; }
  const Matrix& embed_table() const override { return w_.embed; }
  std::size_t decode_limit() const override { return w_.decode_limit; }

  Translation translate(const Matrix& source) const override;
  ad::Var forced_logits(ad::Tape& tape, ad::Var source, const TokenSequence& forced) const override;

  const ToyModelWeights& weights() const { return w_; }

  /// Copy of this model whose output layer never emits `token`
  /// (its logit is pushed to -1e9 at every position).
  ToyModel with_suppressed_token(TokenId token) const;

 private:
  void check_source(Eigen::Index rows, Eigen::Index cols) const;

  std::string id_;
  Vocabulary vocab_;
  ToyModelWeights w_;
};

struct ToyModelOptions {
  Eigen::Index embed_dim = 16;
  Eigen::Index hidden_dim = 32;
  double lexical_gain = 8.0;     // target logit for an exactly attended source word
  double state_noise = 0.15;     // scale of the decoder-state contribution to logits
  double attention_noise = 0.1;  // scale of content terms in keys/queries
};

/// Builds a seeded lexical translation model: each source word in `lexicon`
/// translates to its paired target word when attended.
ToyModel make_lexical_toy_model(const std::string& id, Vocabulary vocab,
                                const std::vector<std::pair<TokenId, TokenId>>& lexicon,
                                std::uint64_t seed, const ToyModelOptions& options = {});

/// The bundled English->French toy vocabulary (52 tokens).
Vocabulary toy_vocabulary();
/// (English, French) word pairs of the bundled lexicon.
const std::vector<std::pair<std::string, std::string>>& toy_lexicon();
/// The bundled toy translation model for `seed`.
ToyModel make_toy_model(std::uint64_t seed);

}  // namespace kwforge
