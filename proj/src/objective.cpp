#include "kwforge/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kwforge/errors.hpp"

namespace kwforge {

namespace {

void check_alpha(const ObjectiveConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
    throw InvalidInputError("objective: alpha must be finite and non-negative");
  }
}

void check_lm_pair(const Matrix& v, const Matrix& vp) {
  if (v.rows() != vp.rows() || v.cols() != vp.cols()) {
    throw ShapeError("similarity loss: shapes differ");
  }
  if (v.rows() == 0) throw ShapeError("similarity loss: empty sentence");
}

// Token at rank n (1-based) in row i: larger logit first, smaller id on ties.
TokenId nth_token(const Matrix& z, Eigen::Index i, std::size_t n) {
  std::vector<TokenId> ids(static_cast<std::size_t>(z.cols()));
  std::iota(ids.begin(), ids.end(), 0);
  auto before = [&](TokenId a, TokenId b) {
    return z(i, a) > z(i, b) || (z(i, a) == z(i, b) && a < b);
  };
  std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n - 1), ids.end(), before);
  return ids[n - 1];
}

}  // namespace

void TargetSpec::validate(std::size_t vocab_size) const {
  if (mode == TargetMode::Predefined) {
    if (keyword_token < 0 || static_cast<std::size_t>(keyword_token) >= vocab_size) {
      throw TargetError("target keyword id out of range");
    }
  } else if (rank < 1 || rank > vocab_size) {
    throw InvalidRankError("nth-most-likely rank " + std::to_string(rank) + " outside [1, " +
                           std::to_string(vocab_size) + "]");
  }
}

KeywordResolution resolve_keyword(const Vocabulary& vocab, const std::string& keyword) {
  TokenSequence pieces;
  try {
    pieces = vocab.tokenize(keyword);
  } catch (const InvalidInputError&) {
    throw TargetError("empty keyword");
  }
  KeywordResolution res;
  res.token = pieces.ids.front();
  if (res.token == vocab.specials().unk && !vocab.contains(keyword)) {
    throw TargetError("keyword '" + keyword + "' is not in the vocabulary");
  }
  if (pieces.size() > 1) {
    res.warning = "keyword '" + keyword + "' splits into " + std::to_string(pieces.size()) +
                  " tokens; using the first one ('" + vocab.token(res.token) + "')";
  }
  return res;
}

ad::Var adversarial_loss(ad::Var logits, std::size_t k, TokenId t) {
  if (k >= static_cast<std::size_t>(logits.rows())) {
    throw IndexError("adversarial loss: position " + std::to_string(k) + " outside translation of length " +
                     std::to_string(logits.rows()));
  }
  if (t < 0 || t >= logits.cols()) throw InvalidTokenError("adversarial loss: target id out of range");
  ad::Var logp = ad::log_softmax_rows(ad::row(logits, static_cast<Eigen::Index>(k)));
  return ad::scale(ad::element(logp, 0, t), -1.0);
}

double adversarial_loss(const LogitsTensor& logits, std::size_t k, TokenId t) {
  ad::Tape tape;
  return adversarial_loss(tape.constant(logits.values), k, t).scalar();
}

std::size_t select_attack_position(const LogitsTensor& logits, TokenId t) {
  const Matrix& z = logits.values;
  if (z.rows() == 0) throw InvalidInputError("select position: empty logits");
  if (t < 0 || t >= z.cols()) throw InvalidTokenError("select position: target id out of range");
  std::size_t best = 0;
  double best_gap = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double gap = z.row(i).maxCoeff() - z(i, t);
    if (i == 0 || gap < best_gap) {
      best = static_cast<std::size_t>(i);
      best_gap = gap;
    }
  }
  return best;
}

NthTarget select_nth_likely_target(const LogitsTensor& logits, std::size_t n) {
  const Matrix& z = logits.values;
  if (n < 1 || n > static_cast<std::size_t>(z.cols())) {
    throw InvalidRankError("rank " + std::to_string(n) + " outside [1, " + std::to_string(z.cols()) + "]");
  }
  if (z.rows() == 0) throw InvalidInputError("nth target: empty logits");
  NthTarget best;
  double best_gap = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const TokenId t = nth_token(z, i, n);
    const double gap = z.row(i).maxCoeff() - z(i, t);
    if (i == 0 || gap < best_gap) {
      best = NthTarget{static_cast<std::size_t>(i), t};
      best_gap = gap;
    }
  }
  return best;
}

ad::Var similarity_loss(ad::Var v, ad::Var v_prime) {
  check_lm_pair(v.value(), v_prime.value());
  return ad::scale(ad::sum(ad::cosine_distance_rows(v, v_prime)), 1.0 / static_cast<double>(v.rows()));
}

double similarity_loss(const EmbeddingMatrix& v, const EmbeddingMatrix& v_prime) {
  if (v.space != Space::Lm || v_prime.space != Space::Lm) {
    throw ShapeError("similarity loss: both arguments must be in LM space");
  }
  ad::Tape tape;
  return similarity_loss(tape.constant(v.rows), tape.constant(v_prime.rows)).scalar();
}

ad::Var total_loss(ad::Var logits, std::size_t k, TokenId t, ad::Var v, ad::Var v_prime,
                   const ObjectiveConfig& cfg) {
  check_alpha(cfg);
  ad::Var adv = adversarial_loss(logits, k, t);
  ad::Var sim = similarity_loss(v, v_prime);
  return ad::add(adv, ad::scale(sim, cfg.alpha));
}

double total_loss(const LogitsTensor& logits, std::size_t k, TokenId t, const EmbeddingMatrix& v,
                  const EmbeddingMatrix& v_prime, const ObjectiveConfig& cfg) {
  check_alpha(cfg);
  return adversarial_loss(logits, k, t) + cfg.alpha * similarity_loss(v, v_prime);
}

}  // namespace kwforge
