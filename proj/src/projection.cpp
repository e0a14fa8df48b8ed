#include "kwforge/projection.hpp"

#include <algorithm>

#include "kwforge/errors.hpp"

namespace kwforge {

std::size_t ProjectionIndex::candidate_count() const {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), false));
}

std::vector<TokenId> default_excluded_ids(const Vocabulary& vocab) {
  const SpecialIds& s = vocab.specials();
  std::vector<TokenId> ids = {s.pad, s.bos, s.eos};
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::uint64_t index_fingerprint(const NmtModel& model, const EmbeddingMap& map,
                                const std::vector<TokenId>& excluded_ids) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (char c : model.id()) mix(static_cast<unsigned char>(c));
  mix(fingerprint(model.embed_table()));
  mix(fingerprint(map));
  std::vector<TokenId> sorted = excluded_ids;
  std::sort(sorted.begin(), sorted.end());
  for (TokenId id : sorted) mix(static_cast<std::uint64_t>(id));
  return h;
}

ProjectionIndex build_index(const NmtModel& model, const EmbeddingMap& map,
                            const std::optional<std::vector<TokenId>>& excluded_ids) {
  const Matrix& table = model.embed_table();
  if (map.input_dim() != table.cols() || map.bias.size() != map.output_dim()) {
    throw ShapeError("build_index: map expects width " + std::to_string(map.input_dim()) +
                     ", embedding table has " + std::to_string(table.cols()));
  }
  const Vocabulary& vocab = model.vocabulary();
  const std::vector<TokenId> excl = excluded_ids ? *excluded_ids : default_excluded_ids(vocab);

  ProjectionIndex index;
  index.nmt_table = table;
  index.excluded.assign(vocab.size(), false);
  for (TokenId id : excl) {
    if (!vocab.valid(id)) throw InvalidTokenError("build_index: excluded id out of range");
    index.excluded[static_cast<std::size_t>(id)] = true;
  }
  index.lm_vocab = (table * map.weight.transpose()).rowwise() + map.bias.transpose();
  for (Eigen::Index i = 0; i < index.lm_vocab.rows(); ++i) {
    const double norm = index.lm_vocab.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      if (!index.excluded[static_cast<std::size_t>(i)]) {
        index.warnings.push_back("token '" + vocab.token(static_cast<TokenId>(i)) +
                                 "' maps to a zero-norm vector; excluded from projection");
        index.excluded[static_cast<std::size_t>(i)] = true;
      }
      index.lm_vocab.row(i).setZero();
      continue;
    }
    index.lm_vocab.row(i) /= norm;
  }
  if (index.candidate_count() == 0) throw EmptyIndexError("build_index: every token is excluded");
  index.fingerprint = index_fingerprint(model, map, excl);
  return index;
}

Projection project_embeddings(const EmbeddingMatrix& e_g, const ProjectionIndex& index,
                              const EmbeddingMap& map) {
  if (e_g.space != Space::Nmt) throw ShapeError("project: input must be in NMT space");
  if (!e_g.rows.allFinite()) throw NumericError("project: non-finite embedding row");
  if (e_g.dim() != map.input_dim() || map.output_dim() != index.lm_vocab.cols()) {
    throw ShapeError("project: dimension mismatch between embeddings, map and index");
  }
  Matrix mapped = (e_g.rows * map.weight.transpose()).rowwise() + map.bias.transpose();
  for (Eigen::Index i = 0; i < mapped.rows(); ++i) {
    const double norm = mapped.row(i).norm();
    if (!(norm > 0.0)) throw NumericError("project: row " + std::to_string(i) + " maps to zero");
    mapped.row(i) /= norm;
  }
  const Matrix scores = mapped * index.lm_vocab.transpose();

  Projection out;
  out.embeddings.space = Space::Nmt;
  out.embeddings.rows.resize(e_g.size(), index.nmt_table.cols());
  out.tokens.ids.reserve(static_cast<std::size_t>(e_g.size()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (index.excluded[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || scores(i, j) > scores(i, best)) best = j;
    }
    out.tokens.ids.push_back(static_cast<TokenId>(best));
    out.embeddings.rows.row(i) = index.nmt_table.row(best);
  }
  return out;
}

}  // namespace kwforge
