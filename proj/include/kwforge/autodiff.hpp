#pragma once

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation applied to its Vars. Calling backward() on a
// 1x1 Var propagates adjoints to every node that (transitively) depends on a
// variable. Nodes built only from constants carry no backward closure, so a
// tape doubles as a cheap inference context.
//
// A Tape is not thread-safe; use one tape per caller.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kwforge/types.hpp"

namespace kwforge::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 Var.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the tape, the id of the node being differentiated and its adjoint.
  using BackwardFn = std::function<void(Tape&, std::size_t self, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);

  /// Seeds d(out)/d(out) = 1 and propagates adjoints. `out` must be 1x1.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Adds `delta` to the adjoint of node `id` (no-op for constants).
  void accumulate(std::size_t id, const Matrix& delta);

  /// Records a derived node. `backward` is dropped when no parent needs grad.
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a (r x c) plus a 1 x c row added to every row.
Var add_row(Var a, Var row);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var tanh(Var a);
Var transpose(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// 1x1 Var holding a(i, j).
Var element(Var a, Eigen::Index i, Eigen::Index j);
Var row(Var a, Eigen::Index i);
Var vstack(std::span<const Var> parts);
/// 1 x c mean over rows.
Var mean_rows(Var a);
/// 1x1 sum of all entries.
Var sum(Var a);
/// r x 1 column of 1 - cos(a_i, b_i). Throws NumericError on a zero-norm row.
Var cosine_distance_rows(Var a, Var b);
/// 1x1 sum over rows of -logp(i, targets[i]).
Var nll_rows(Var log_probs, std::span<const TokenId> targets);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace kwforge::ad
