#include "kwforge/model.hpp"

#include <charconv>
#include <cstring>
#include <map>
#include <mutex>

#include "kwforge/errors.hpp"
#include "kwforge/toy_model.hpp"

namespace kwforge {

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
};

void hash_matrix(Fnv1a& f, const Matrix& m) {
  f.value(static_cast<std::int64_t>(m.rows()));
  f.value(static_cast<std::int64_t>(m.cols()));
  // Row-major order so the fingerprint matches the on-disk layout.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) f.value(m(i, j));
  }
}

std::map<std::string, ModelAdapter>& registry() {
  static std::map<std::string, ModelAdapter> r = [] {
    std::map<std::string, ModelAdapter> m;
    m["toy"] = ModelAdapter{
        [](const ModelRequest& req) -> std::shared_ptr<const NmtModel> {
          // "toy:<n>" pins the weight seed; plain "toy" follows the run seed.
          std::uint64_t seed = req.seed;
          if (!req.model_id.empty()) {
            const char* first = req.model_id.data();
            const char* last = first + req.model_id.size();
            auto [ptr, ec] = std::from_chars(first, last, seed);
            if (ec != std::errc() || ptr != last) throw ModelError("toy model id must be an integer seed: " + req.model_id);
          }
          return std::make_shared<ToyModel>(make_toy_model(seed));
        },
        [](const ModelRequest&) { return toy_vocabulary(); }};
    return m;
  }();
  return r;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

ModelAdapter find_adapter(const ModelSpec& spec) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(spec.adapter);
  if (it == registry().end()) throw ModelError("unknown model adapter '" + spec.adapter + "'");
  return it->second;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite values");
}

}  // namespace

EmbeddingMap EmbeddingMap::identity_padded(Eigen::Index d, Eigen::Index d_lm) {
  EmbeddingMap m;
  m.weight = Matrix::Zero(d_lm, d);
  const Eigen::Index k = std::min(d, d_lm);
  m.weight.topLeftCorner(k, k).setIdentity();
  m.bias = Vector::Zero(d_lm);
  return m;
}

ad::Var EmbeddingMap::apply(ad::Tape& tape, ad::Var rows) const {
  if (rows.cols() != input_dim()) {
    throw ShapeError("embedding map expects width " + std::to_string(input_dim()) + ", got " +
                     std::to_string(rows.cols()));
  }
  ad::Var w = tape.constant(weight.transpose());
  ad::Var b = tape.constant(bias.transpose());
  return ad::add_row(ad::matmul(rows, w), b);
}

ad::Var affine_rows(ad::Var rows, ad::Var weight, ad::Var bias_row) {
  return ad::add_row(ad::matmul(rows, ad::transpose(weight)), bias_row);
}

std::uint64_t fingerprint(const Matrix& m) {
  Fnv1a f;
  hash_matrix(f, m);
  return f.h;
}

std::uint64_t fingerprint(const EmbeddingMap& map) {
  Fnv1a f;
  hash_matrix(f, map.weight);
  hash_matrix(f, Matrix(map.bias));
  return f.h;
}

EmbeddingMatrix embed(const NmtModel& model, const TokenSequence& seq) {
  model.vocabulary().validate(seq);
  const Matrix& table = model.embed_table();
  EmbeddingMatrix out;
  out.space = Space::Nmt;
  out.rows.resize(static_cast<Eigen::Index>(seq.size()), table.cols());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = table.row(seq.ids[i]);
  }
  return out;
}

Translation translate_with_logits(const NmtModel& model, const EmbeddingMatrix& e,
                                  const std::optional<TokenSequence>& forced_prefix) {
  if (e.space != Space::Nmt) throw ShapeError("translate: embeddings must be in NMT space");
  if (e.dim() != model.embedding_dim()) throw ShapeError("translate: embedding width mismatch");
  require_finite(e.rows, "translate");
  if (!forced_prefix) return model.translate(e.rows);
  model.vocabulary().validate(*forced_prefix);
  ad::Tape tape;
  ad::Var src = tape.constant(e.rows);
  ad::Var z = model.forced_logits(tape, src, *forced_prefix);
  return Translation{*forced_prefix, LogitsTensor{z.value()}};
}

EmbeddingMatrix map_to_lm_space(const EmbeddingMatrix& e, const EmbeddingMap& map) {
  if (e.space != Space::Nmt) throw ShapeError("map_to_lm_space: input must be in NMT space");
  if (e.dim() != map.input_dim() || map.bias.size() != map.output_dim()) {
    throw ShapeError("map_to_lm_space: map expects width " + std::to_string(map.input_dim()) +
                     ", got " + std::to_string(e.dim()));
  }
  EmbeddingMatrix out;
  out.space = Space::Lm;
  out.rows = (e.rows * map.weight.transpose()).rowwise() + map.bias.transpose();
  return out;
}

void register_model_adapter(const std::string& name, ModelAdapter adapter) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(adapter);
}

ModelSpec parse_model_spec(const std::string& spec) {
  if (spec.empty()) throw ModelError("empty model spec");
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return ModelSpec{spec, ""};
  return ModelSpec{spec.substr(0, colon), spec.substr(colon + 1)};
}

std::shared_ptr<const NmtModel> load_model(const std::string& spec, const std::string& device,
                                           std::uint64_t seed) {
  const ModelSpec parsed = parse_model_spec(spec);
  const ModelAdapter adapter = find_adapter(parsed);
  auto model = adapter.load(ModelRequest{parsed.model_id, device, seed});
  if (!model) throw ModelError("adapter '" + parsed.adapter + "' returned no model");
  return model;
}

Vocabulary load_vocabulary(const std::string& spec, const std::string& device, std::uint64_t seed) {
  const ModelSpec parsed = parse_model_spec(spec);
  const ModelAdapter adapter = find_adapter(parsed);
  if (adapter.vocabulary) return adapter.vocabulary(ModelRequest{parsed.model_id, device, seed});
  return adapter.load(ModelRequest{parsed.model_id, device, seed})->vocabulary();
}

}  // namespace kwforge
