#include "kwforge/toy_model.hpp"

#include <cmath>
#include <random>

#include "kwforge/errors.hpp"

namespace kwforge {

namespace {

constexpr double kSuppressed = -1e9;

Matrix position_codes(Eigen::Index count, Eigen::Index width, double scale) {
  Matrix p = Matrix::Zero(count, width);
  for (Eigen::Index i = 0; i < count; ++i) p(i, i) = scale;
  return p;
}

Eigen::Index argmax_row(const RowVector& z, TokenId skip) {
  Eigen::Index best = -1;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (j == skip) continue;
    if (best < 0 || z(j) > z(best)) best = j;
  }
  return best;
}

Matrix randn(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * dist(rng);
  }
  return m;
}

}  // namespace

ToyModel::ToyModel(std::string id, Vocabulary vocab, ToyModelWeights weights)
    : id_(std::move(id)), vocab_(std::move(vocab)), w_(std::move(weights)) {
  const auto V = static_cast<Eigen::Index>(vocab_.size());
  const Eigen::Index d = w_.embed.cols();
  const Eigen::Index h = w_.enc_w.cols();
  const Eigen::Index P = w_.max_positions;
  const bool ok = w_.embed.rows() == V && w_.enc_w.rows() == d && w_.enc_b.size() == h &&
                  w_.key_w.rows() == h && w_.key_w.cols() == P && w_.query_w.rows() == h &&
                  w_.query_w.cols() == P && w_.init_w.rows() == h && w_.init_w.cols() == h &&
                  w_.dec_in_w.rows() == d && w_.dec_in_w.cols() == h && w_.dec_rec_w.rows() == h &&
                  w_.dec_rec_w.cols() == h && w_.dec_b.size() == h && w_.out_ctx_w.rows() == h &&
                  w_.out_ctx_w.cols() == V && w_.out_state_w.rows() == h &&
                  w_.out_state_w.cols() == V && w_.out_b.size() == V;
  if (!ok) throw ShapeError("toy model: inconsistent weight shapes");
  if (w_.decode_limit < 1 || static_cast<Eigen::Index>(w_.decode_limit) > P) {
    throw ShapeError("toy model: decode limit must be in [1, max_positions]");
  }
}

void ToyModel::check_source(Eigen::Index rows, Eigen::Index cols) const {
  if (rows < 1) throw InvalidInputError("toy model: empty source");
  if (cols != w_.embed.cols()) throw ShapeError("toy model: source width mismatch");
  if (rows + 1 > w_.max_positions) {
    throw InvalidInputError("toy model: source longer than " + std::to_string(w_.max_positions - 1));
  }
}

Translation ToyModel::translate(const Matrix& source) const {
  check_source(source.rows(), source.cols());
  const Eigen::Index n = source.rows();
  const SpecialIds& sp = vocab_.specials();

  Matrix x(n + 1, source.cols());
  x.topRows(n) = source;
  x.row(n) = w_.embed.row(sp.eos);
  const Matrix c = ((x * w_.enc_w).rowwise() + w_.enc_b).array().tanh().matrix();
  const Matrix keys = position_codes(n + 1, w_.max_positions, w_.position_scale) + c * w_.key_w;
  RowVector s = (c.colwise().mean() * w_.init_w).array().tanh().matrix();

  Translation out;
  std::vector<RowVector> rows;
  TokenId prev = sp.bos;
  for (std::size_t i = 0; i < w_.decode_limit; ++i) {
    s = (w_.embed.row(prev) * w_.dec_in_w + s * w_.dec_rec_w + w_.dec_b).array().tanh().matrix();
    RowVector q = s * w_.query_w;
    q(static_cast<Eigen::Index>(i)) += w_.position_scale;
    RowVector scores = q * keys.transpose();
    scores.array() -= scores.maxCoeff();
    RowVector attn = scores.array().exp().matrix();
    attn /= attn.sum();
    const RowVector ctx = attn * c;
    const RowVector z = ctx * w_.out_ctx_w + s * w_.out_state_w + w_.out_b;
    // At least one output token: end-of-sentence is not allowed first.
    const auto pick = static_cast<TokenId>(argmax_row(z, i == 0 ? sp.eos : -1));
    if (pick == sp.eos) break;
    out.tokens.ids.push_back(pick);
    rows.push_back(z);
    prev = pick;
  }
  out.logits.values.resize(static_cast<Eigen::Index>(rows.size()), w_.out_b.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.logits.values.row(static_cast<Eigen::Index>(i)) = rows[i];
  return out;
}

ad::Var ToyModel::forced_logits(ad::Tape& tape, ad::Var source, const TokenSequence& forced) const {
  check_source(source.rows(), source.cols());
  if (forced.empty()) throw InvalidInputError("toy model: empty forced prefix");
  if (static_cast<Eigen::Index>(forced.size()) > w_.max_positions) {
    throw InvalidInputError("toy model: forced prefix too long");
  }
  vocab_.validate(forced);
  const Eigen::Index n = source.rows();
  const auto m = static_cast<Eigen::Index>(forced.size());
  const SpecialIds& sp = vocab_.specials();

  ad::Var eos_row = tape.constant(w_.embed.row(sp.eos));
  const ad::Var src_parts[] = {source, eos_row};
  ad::Var x = ad::vstack(src_parts);
  ad::Var c = ad::tanh(ad::add_row(ad::matmul(x, tape.constant(w_.enc_w)), tape.constant(w_.enc_b)));
  ad::Var keys = ad::add(tape.constant(position_codes(n + 1, w_.max_positions, w_.position_scale)),
                         ad::matmul(c, tape.constant(w_.key_w)));
  ad::Var s = ad::tanh(ad::matmul(ad::mean_rows(c), tape.constant(w_.init_w)));

  ad::Var dec_in = tape.constant(w_.dec_in_w);
  ad::Var dec_rec = tape.constant(w_.dec_rec_w);
  ad::Var dec_b = tape.constant(w_.dec_b);
  std::vector<ad::Var> states;
  states.reserve(static_cast<std::size_t>(m));
  TokenId prev = sp.bos;
  for (Eigen::Index i = 0; i < m; ++i) {
    ad::Var y = tape.constant(w_.embed.row(prev));
    s = ad::tanh(ad::add(ad::add(ad::matmul(y, dec_in), ad::matmul(s, dec_rec)), dec_b));
    states.push_back(s);
    prev = forced.ids[static_cast<std::size_t>(i)];
  }
  ad::Var S = ad::vstack(states);
  ad::Var q = ad::add(tape.constant(position_codes(m, w_.max_positions, w_.position_scale)),
                      ad::matmul(S, tape.constant(w_.query_w)));
  ad::Var attn = ad::softmax_rows(ad::matmul(q, ad::transpose(keys)));
  ad::Var ctx = ad::matmul(attn, c);
  ad::Var z = ad::add(ad::matmul(ctx, tape.constant(w_.out_ctx_w)),
                      ad::matmul(S, tape.constant(w_.out_state_w)));
  return ad::add_row(z, tape.constant(w_.out_b));
}

ToyModel ToyModel::with_suppressed_token(TokenId token) const {
  if (!vocab_.valid(token)) throw InvalidTokenError("suppress: token out of range");
  ToyModelWeights w = w_;
  w.out_b(token) = kSuppressed;
  return ToyModel(id_ + "-no" + std::to_string(token), vocab_, std::move(w));
}

ToyModel make_lexical_toy_model(const std::string& id, Vocabulary vocab,
                                const std::vector<std::pair<TokenId, TokenId>>& lexicon,
                                std::uint64_t seed, const ToyModelOptions& options) {
  std::mt19937_64 rng(seed);
  const auto V = static_cast<Eigen::Index>(vocab.size());
  const Eigen::Index d = options.embed_dim;
  const Eigen::Index h = options.hidden_dim;
  if (h < d) throw ShapeError("toy model: hidden_dim must be >= embed_dim");
  const SpecialIds& sp = vocab.specials();

  ToyModelWeights w;
  w.max_positions = 40;
  w.decode_limit = 32;
  w.position_scale = 3.0;
  w.embed = randn(rng, V, d, 1.0);

  // Scaled orthonormal rows keep the encoder close to angle-preserving.
  const Matrix basis = Eigen::HouseholderQR<Matrix>(randn(rng, h, d, 1.0)).householderQ() *
                       Matrix::Identity(h, d);
  w.enc_w = 0.5 * basis.transpose();
  w.enc_b = RowVector::Zero(h);
  w.key_w = randn(rng, h, w.max_positions, options.attention_noise);
  w.query_w = randn(rng, h, w.max_positions, options.attention_noise);
  w.init_w = randn(rng, h, h, 1.0 / std::sqrt(static_cast<double>(h)));
  w.dec_in_w = randn(rng, d, h, 1.0 / std::sqrt(static_cast<double>(d)));
  w.dec_rec_w = randn(rng, h, h, 0.5 / std::sqrt(static_cast<double>(h)));
  w.dec_b = RowVector::Zero(h);

  const Matrix content = (w.embed * w.enc_w).array().tanh().matrix();
  w.out_ctx_w = randn(rng, h, V, 0.1);
  w.out_state_w = randn(rng, h, V, options.state_noise);
  w.out_b = RowVector::Constant(V, -4.0);

  auto matched = [&](TokenId src) {
    const RowVector cs = content.row(src);
    return Vector(options.lexical_gain * cs.transpose() / cs.squaredNorm());
  };
  std::vector<int> sources_per_target(static_cast<std::size_t>(V), 0);
  for (const auto& [src, tgt] : lexicon) {
    if (!vocab.valid(src) || !vocab.valid(tgt)) throw InvalidTokenError("toy model: lexicon id out of range");
    auto& count = sources_per_target[static_cast<std::size_t>(tgt)];
    if (count == 0) w.out_ctx_w.col(tgt).setZero();
    w.out_ctx_w.col(tgt) += matched(src);
    ++count;
    w.out_b(tgt) = 0.0;
  }
  for (Eigen::Index t = 0; t < V; ++t) {
    const int count = sources_per_target[static_cast<std::size_t>(t)];
    if (count > 1) w.out_ctx_w.col(t) /= static_cast<double>(count);
  }
  w.out_ctx_w.col(sp.eos) = matched(sp.eos);
  w.out_b(sp.eos) = 0.0;
  for (TokenId special : {sp.pad, sp.bos, sp.unk}) w.out_b(special) = -30.0;

  return ToyModel(id, std::move(vocab), std::move(w));
}

const std::vector<std::pair<std::string, std::string>>& toy_lexicon() {
  static const std::vector<std::pair<std::string, std::string>> lex = {
      {"the", "le"},       {"a", "un"},         {"cat", "chat"},     {"dog", "chien"},
      {"man", "homme"},    {"woman", "femme"},  {"child", "enfant"}, {"house", "maison"},
      {"city", "ville"},   {"war", "guerre"},   {"peace", "paix"},   {"king", "roi"},
      {"river", "fleuve"}, {"sees", "voit"},    {"likes", "aime"},   {"builds", "construit"},
      {"finds", "trouve"}, {"fears", "craint"}, {"big", "grand"},    {"small", "petit"},
      {"old", "vieux"},    {"new", "nouveau"},  {"red", "rouge"},    {"and", "et"},
  };
  return lex;
}

Vocabulary toy_vocabulary() {
  std::vector<std::string> tokens = {"<pad>", "<s>", "</s>", "<unk>"};
  for (const auto& [en, fr] : toy_lexicon()) tokens.push_back(en);
  for (const auto& [en, fr] : toy_lexicon()) tokens.push_back(fr);
  return Vocabulary(std::move(tokens), SpecialIds{0, 1, 2, 3});
}

ToyModel make_toy_model(std::uint64_t seed) {
  Vocabulary vocab = toy_vocabulary();
  std::vector<std::pair<TokenId, TokenId>> lexicon;
  for (const auto& [en, fr] : toy_lexicon()) lexicon.emplace_back(vocab.id_of(en), vocab.id_of(fr));
  return make_lexical_toy_model("toy-" + std::to_string(seed), std::move(vocab), lexicon, seed);
}

}  // namespace kwforge
