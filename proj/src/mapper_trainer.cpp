#include "kwforge/mapper_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "kwforge/adam.hpp"
#include "kwforge/errors.hpp"

namespace kwforge {

namespace {

Matrix randn(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * dist(rng);
  }
  return m;
}

// All trainable parameters; params[0] and params[1] are the map.
struct LmParams {
  std::vector<Matrix> values;

  static LmParams init(const LmSpec& spec, Eigen::Index d, Eigen::Index vocab, std::mt19937_64& rng) {
    LmParams p;
    const EmbeddingMap m = EmbeddingMap::identity_padded(d, spec.lm_dim);
    p.values.push_back(m.weight);
    p.values.push_back(m.bias.transpose());
    Eigen::Index in = spec.lm_dim;
    for (std::size_t l = 0; l < spec.layers; ++l) {
      p.values.push_back(randn(rng, in, spec.width, 1.0 / std::sqrt(static_cast<double>(in))));
      p.values.push_back(randn(rng, spec.width, spec.width, 0.5 / std::sqrt(static_cast<double>(spec.width))));
      p.values.push_back(Matrix::Zero(1, spec.width));
      in = spec.width;
    }
    p.values.push_back(randn(rng, spec.width, vocab, 1.0 / std::sqrt(static_cast<double>(spec.width))));
    p.values.push_back(Matrix::Zero(1, vocab));
    return p;
  }
};

struct Example {
  std::vector<TokenId> inputs;   // bos w1 .. wn
  std::vector<TokenId> targets;  // w1 .. wn eos
};

// Sum of next-token losses for one sentence.
ad::Var sentence_loss(ad::Tape& tape, const std::vector<ad::Var>& p, const Matrix& table,
                      const Example& ex, std::size_t layers) {
  Matrix rows(static_cast<Eigen::Index>(ex.inputs.size()), table.cols());
  for (std::size_t i = 0; i < ex.inputs.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = table.row(ex.inputs[i]);
  ad::Var x = affine_rows(tape.constant(rows), p[0], p[1]);

  std::vector<ad::Var> layer_in;
  for (Eigen::Index t = 0; t < x.rows(); ++t) layer_in.push_back(ad::row(x, t));
  for (std::size_t l = 0; l < layers; ++l) {
    const ad::Var& w_in = p[2 + 3 * l];
    const ad::Var& w_rec = p[3 + 3 * l];
    const ad::Var& b = p[4 + 3 * l];
    std::vector<ad::Var> out;
    out.reserve(layer_in.size());
    ad::Var h = tape.constant(Matrix::Zero(1, w_rec.rows()));
    for (const ad::Var& in : layer_in) {
      h = ad::tanh(ad::add(ad::add(ad::matmul(in, w_in), ad::matmul(h, w_rec)), b));
      out.push_back(h);
    }
    layer_in = std::move(out);
  }
  ad::Var hs = ad::vstack(layer_in);
  ad::Var logits = ad::add_row(ad::matmul(hs, p[p.size() - 2]), p[p.size() - 1]);
  return ad::nll_rows(ad::log_softmax_rows(logits), ex.targets);
}

double corpus_loss(const LmParams& params, const Matrix& table, const std::vector<Example>& data,
                   std::size_t layers, std::size_t token_count) {
  double total = 0.0;
  for (const Example& ex : data) {
    ad::Tape tape;
    std::vector<ad::Var> p;
    for (const Matrix& m : params.values) p.push_back(tape.constant(m));
    total += sentence_loss(tape, p, table, ex, layers).scalar();
  }
  return total / static_cast<double>(token_count);
}

}  // namespace

TrainedMapper train_mapper(const NmtModel& model, const std::vector<std::string>& corpus,
                           const MapperTrainConfig& cfg) {
  if (!cfg.freeze_nmt_embeddings) {
    throw InvalidInputError("train_mapper: the translation model's embeddings must stay frozen");
  }
  if (cfg.batch_size < 1) throw InvalidInputError("train_mapper: batch_size must be >= 1");
  if (cfg.lm.layers < 1 || cfg.lm.width < 1 || cfg.lm.lm_dim < 1) {
    throw InvalidInputError("train_mapper: invalid LM shape");
  }
  if (!(cfg.learning_rate > 0.0)) throw InvalidInputError("train_mapper: learning rate must be positive");

  const Vocabulary& vocab = model.vocabulary();
  const Matrix& table = model.embed_table();
  std::vector<Example> data;
  std::size_t tokens = 0;
  for (const std::string& line : corpus) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const TokenSequence seq = vocab.tokenize(line);
    Example ex;
    ex.inputs.push_back(vocab.specials().bos);
    ex.inputs.insert(ex.inputs.end(), seq.ids.begin(), seq.ids.end());
    ex.targets = seq.ids;
    ex.targets.push_back(vocab.specials().eos);
    tokens += ex.targets.size();
    data.push_back(std::move(ex));
  }
  if (data.empty()) throw DataError("train_mapper: corpus has no sentences");

  std::mt19937_64 rng(cfg.seed);
  LmParams params = LmParams::init(cfg.lm, table.cols(), static_cast<Eigen::Index>(vocab.size()), rng);
  Adam adam(AdamOptions{cfg.learning_rate});

  TrainedMapper out;
  out.report.sentences = data.size();
  out.report.tokens = tokens;
  out.report.initial_loss = corpus_loss(params, table, data, cfg.lm.layers, tokens);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      ad::Tape tape;
      std::vector<ad::Var> p;
      for (const Matrix& m : params.values) p.push_back(tape.variable(m));
      std::vector<ad::Var> losses;
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < stop; ++i) {
        losses.push_back(sentence_loss(tape, p, table, data[order[i]], cfg.lm.layers));
        batch_tokens += data[order[i]].targets.size();
      }
      ad::Var loss = ad::scale(ad::sum(ad::vstack(losses)), 1.0 / static_cast<double>(batch_tokens));
      if (!std::isfinite(loss.scalar())) throw TrainingError("train_mapper: loss diverged");
      tape.backward(loss);
      epoch_loss += loss.scalar() * static_cast<double>(batch_tokens);

      std::vector<Matrix> grads;
      double sq = 0.0;
      for (const ad::Var& v : p) {
        grads.push_back(v.grad().size() ? v.grad() : Matrix::Zero(v.rows(), v.cols()));
        sq += grads.back().squaredNorm();
      }
      if (!std::isfinite(sq)) throw TrainingError("train_mapper: non-finite gradient");
      const double norm = std::sqrt(sq);
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
        for (Matrix& g : grads) g *= cfg.clip_norm / norm;
      }
      std::vector<Matrix*> ptrs;
      std::vector<const Matrix*> gptrs;
      for (std::size_t i = 0; i < grads.size(); ++i) {
        ptrs.push_back(&params.values[i]);
        gptrs.push_back(&grads[i]);
      }
      adam.step(ptrs, gptrs);
    }
    out.report.epoch_train_loss.push_back(epoch_loss / static_cast<double>(tokens));
    const double eval = corpus_loss(params, table, data, cfg.lm.layers, tokens);
    if (!std::isfinite(eval)) throw TrainingError("train_mapper: loss diverged");
    out.report.epoch_eval_loss.push_back(eval);
  }

  out.map.weight = params.values[0];
  out.map.bias = params.values[1].transpose();
  return out;
}

TrainedMapper train_mapper(const NmtModel& model, const MapperTrainConfig& cfg) {
  std::ifstream in(cfg.corpus_path);
  if (!in) throw DataError("train_mapper: cannot open corpus '" + cfg.corpus_path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return train_mapper(model, lines, cfg);
}

}  // namespace kwforge
