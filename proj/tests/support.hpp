#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "kwforge/errors.hpp"
#include "kwforge/mapper_trainer.hpp"
#include "kwforge/model.hpp"
#include "kwforge/toy_data.hpp"
#include "kwforge/toy_model.hpp"

namespace kwtest {

using kwforge::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

/// Central differences of f at x.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-4) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = probe.data()[i];
    probe.data()[i] = keep + h;
    const double up = f(probe);
    probe.data()[i] = keep - h;
    const double down = f(probe);
    probe.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("kwforge-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

/// Model exposing only an embedding table; decoding is unsupported.
class TableModel final : public kwforge::NmtModel {
 public:
  TableModel(kwforge::Vocabulary vocab, Matrix table) : vocab_(std::move(vocab)), table_(std::move(table)) {}
  std::string id() const override { return "table"; }
  const kwforge::Vocabulary& vocabulary() const override { return vocab_; }
  const Matrix& embed_table() const override { return table_; }
  std::size_t decode_limit() const override { return 1; }
  kwforge::Translation translate(const Matrix&) const override {
    throw kwforge::ModelError("table model cannot translate");
  }
  kwforge::ad::Var forced_logits(kwforge::ad::Tape&, kwforge::ad::Var, const kwforge::TokenSequence&) const override {
    throw kwforge::ModelError("table model cannot translate");
  }

 private:
  kwforge::Vocabulary vocab_;
  Matrix table_;
};

/// Vocabulary "<pad> <s> </s> <unk> w4 w5 ..." of the given size.
inline kwforge::Vocabulary numbered_vocabulary(std::size_t size) {
  std::vector<std::string> toks = {"<pad>", "<s>", "</s>", "<unk>"};
  for (std::size_t i = toks.size(); i < size; ++i) toks.push_back("w" + std::to_string(i));
  return kwforge::Vocabulary(toks, kwforge::SpecialIds{});
}

/// Hand-built 8-token model that translates "a b" into "x y".
///
/// Ids: a=0 b=1 <pad>=2 x=3 y=4 <s>=5 </s>=6 <unk>=7. Embeddings are 2-d with
/// a=(1,0), b=(0,1) and every other row zero. The encoder is C = tanh(X), the
/// decoder state is always zero, and attention at output step i is driven
/// only by position codes of strength kTinyScale, so step i reads source
/// position i. Logits are z = ctx * out_ctx + out_b with out_ctx mapping the
/// first context coordinate to x and the second to y.
inline constexpr double kTinyScale = 3.0;
inline constexpr double kTinyGain = 4.0;

inline kwforge::ToyModel tiny_model() {
  using namespace kwforge;
  Vocabulary vocab({"a", "b", "<pad>", "x", "y", "<s>", "</s>", "<unk>"}, SpecialIds{2, 5, 6, 7});
  const Eigen::Index V = 8, d = 2, h = 2, P = 4;
  ToyModelWeights w;
  w.embed = Matrix::Zero(V, d);
  w.embed(0, 0) = 1.0;
  w.embed(1, 1) = 1.0;
  w.enc_w = Matrix::Identity(d, h);
  w.enc_b = RowVector::Zero(h);
  w.key_w = Matrix::Zero(h, P);
  w.query_w = Matrix::Zero(h, P);
  w.init_w = Matrix::Zero(h, h);
  w.dec_in_w = Matrix::Zero(d, h);
  w.dec_rec_w = Matrix::Zero(h, h);
  w.dec_b = RowVector::Zero(h);
  w.out_ctx_w = Matrix::Zero(h, V);
  w.out_ctx_w(0, 3) = kTinyGain;
  w.out_ctx_w(1, 4) = kTinyGain;
  w.out_state_w = Matrix::Zero(h, V);
  w.out_b = RowVector::Constant(V, -5.0);
  w.out_b(3) = 0.0;
  w.out_b(4) = 0.0;
  w.out_b(6) = 1.0;
  w.position_scale = kTinyScale;
  w.max_positions = P;
  w.decode_limit = 4;
  return ToyModel("tiny", vocab, w);
}

/// Seeded toy model and a map trained for it, built once per process.
struct TrainedToy {
  kwforge::ToyModel model;
  kwforge::TrainedMapper mapper;
};

inline const TrainedToy& trained_toy() {
  static const TrainedToy t = [] {
    kwforge::ToyModel model = kwforge::make_toy_model(7);
    kwforge::MapperTrainConfig cfg;
    cfg.seed = 3;
    auto mapper = kwforge::train_mapper(model, kwforge::make_toy_corpus(11, 1000), cfg);
    return TrainedToy{std::move(model), std::move(mapper)};
  }();
  return t;
}

}  // namespace kwtest
