#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kwforge/autodiff.hpp"
#include "kwforge/types.hpp"
#include "kwforge/vocabulary.hpp"

namespace kwforge {

/// Affine map from the translation model's embedding space (d) into the
/// language-model space (d_lm): v = weight * e + bias.
struct EmbeddingMap {
  Matrix weight;  // d_lm x d
  Vector bias;    // d_lm

  Eigen::Index input_dim() const { return weight.cols(); }
  Eigen::Index output_dim() const { return weight.rows(); }

  /// Identity on the leading min(d, d_lm) dimensions, zeros elsewhere.
  static EmbeddingMap identity_padded(Eigen::Index d, Eigen::Index d_lm);

  /// Applies the map to every row of `rows` (n x d) on a tape.
  ad::Var apply(ad::Tape& tape, ad::Var rows) const;
};

/// Fingerprint of the map's dimensions and parameters.
std::uint64_t fingerprint(const EmbeddingMap& map);
/// Fingerprint of a dense matrix (shape and raw values).
std::uint64_t fingerprint(const Matrix& m);

/// rows * weight^T + bias with every operand on the tape.
ad::Var affine_rows(ad::Var rows, ad::Var weight, ad::Var bias_row);

struct Translation {
  TokenSequence tokens;
  LogitsTensor logits;
};

/// A differentiable sequence-to-sequence translation model sharing one
/// vocabulary between source and target.
///
/// Implementations are read-only after construction; concurrent calls are
/// allowed as long as each caller brings its own tape.
class NmtModel {
 public:
  virtual ~NmtModel() = default;

  virtual std::string id() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  /// |V| x d; row i embeds token i.
  virtual const Matrix& embed_table() const = 0;
  virtual std::size_t decode_limit() const = 0;

  /// Greedy decoding of source embeddings. The returned translation excludes
  /// the end-of-sentence token and the logits have one row per output token.
  virtual Translation translate(const Matrix& source) const = 0;

  /// Teacher-forced logits: row i scores output position i given
  /// forced[0..i). `source` may be a variable; the result is differentiable
  /// with respect to it.
  virtual ad::Var forced_logits(ad::Tape& tape, ad::Var source, const TokenSequence& forced) const = 0;

  Eigen::Index embedding_dim() const { return embed_table().cols(); }
};

/// Row i equals embed_table[ids[i]].
EmbeddingMatrix embed(const NmtModel& model, const TokenSequence& seq);

/// Greedy decoding when `forced_prefix` is empty, teacher forcing otherwise.
/// Throws NumericError on non-finite embeddings, ShapeError on a wrong space
/// or width.
Translation translate_with_logits(const NmtModel& model, const EmbeddingMatrix& e,
                                  const std::optional<TokenSequence>& forced_prefix = std::nullopt);

/// Throws ShapeError on a dimension mismatch or when `e` is not in NMT space.
EmbeddingMatrix map_to_lm_space(const EmbeddingMatrix& e, const EmbeddingMap& map);

// Adapter registry ----------------------------------------------------------

struct ModelRequest {
  std::string model_id;
  std::string device = "cpu";
  std::uint64_t seed = 0;
};

struct ModelAdapter {
  std::function<std::shared_ptr<const NmtModel>(const ModelRequest&)> load;
  /// Vocabulary without loading weights, used to validate keywords early.
  std::function<Vocabulary(const ModelRequest&)> vocabulary;
};

/// Registers `adapter` under `name`; model specs look like "name" or
/// "name:model-id". The "toy" adapter is always available.
void register_model_adapter(const std::string& name, ModelAdapter adapter);

struct ModelSpec {
  std::string adapter;
  std::string model_id;
};
ModelSpec parse_model_spec(const std::string& spec);

/// Throws ModelError for unknown adapters.
std::shared_ptr<const NmtModel> load_model(const std::string& spec, const std::string& device,
                                           std::uint64_t seed);
Vocabulary load_vocabulary(const std::string& spec, const std::string& device, std::uint64_t seed);

}  // namespace kwforge
