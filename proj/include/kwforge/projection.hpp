#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kwforge/model.hpp"
#include "kwforge/types.hpp"

namespace kwforge {

/// The vocabulary mapped into LM space with unit-norm rows, plus the ids the
/// projection may never return.
struct ProjectionIndex {
  Matrix lm_vocab;                 // |V| x d_lm, unit rows (zero rows where excluded)
  Matrix nmt_table;                // |V| x d, the model's embedding table
  std::vector<bool> excluded;      // per token id
  std::vector<std::string> warnings;
  std::uint64_t fingerprint = 0;   // of (model id, embed table, map, excluded ids)

  std::size_t vocab_size() const { return excluded.size(); }
  std::size_t candidate_count() const;
};

/// Fingerprint identifying the index a (model, map, exclusions) triple builds.
std::uint64_t index_fingerprint(const NmtModel& model, const EmbeddingMap& map,
                                const std::vector<TokenId>& excluded_ids);

/// The default exclusions: pad, bos and eos.
std::vector<TokenId> default_excluded_ids(const Vocabulary& vocab);

/// Rows whose mapped vector has zero norm are excluded with a warning.
/// Throws ShapeError on incompatible map dimensions and EmptyIndexError when
/// no candidate token remains.
ProjectionIndex build_index(const NmtModel& model, const EmbeddingMap& map,
                            const std::optional<std::vector<TokenId>>& excluded_ids = std::nullopt);

struct Projection {
  TokenSequence tokens;
  EmbeddingMatrix embeddings;  // NMT-space table rows of `tokens`
};

/// Replaces every row of `e_g` by the non-excluded vocabulary token with the
/// highest LM-space cosine similarity (smallest id on ties).
/// Throws NumericError on non-finite or zero-norm mapped rows.
Projection project_embeddings(const EmbeddingMatrix& e_g, const ProjectionIndex& index,
                              const EmbeddingMap& map);

}  // namespace kwforge
