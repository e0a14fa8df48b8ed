#include "kwforge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kwforge/errors.hpp"

namespace kwforge::ad {

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw InvalidInputError("autodiff: operands belong to different tapes");
  }
}

void require_shape(bool ok, const char* op, Var a, Var b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

Matrix row_softmax(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix row_log_softmax(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    const double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  return out;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("autodiff: scalar() on a non 1x1 value");
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const {
  static const Matrix kEmpty;
  const Node& n = nodes_[id];
  return n.grad.size() == 0 ? kEmpty : n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& delta) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || p.requires_grad();
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var out) {
  if (out.tape() != this) throw InvalidInputError("autodiff: backward on a foreign Var");
  const Matrix& v = out.value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("autodiff: backward needs a 1x1 output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[out.id()].requires_grad) return;
  nodes_[out.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = out.id() + 1; i-- > 0;) {
    if (!nodes_[i].backward || nodes_[i].grad.size() == 0) continue;
    const Matrix g = nodes_[i].grad;
    nodes_[i].backward(*this, i, g);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return a.tape()->record(a.value() * b.value(), parents,
                          [ia, ib](Tape& t, std::size_t, const Matrix& g) {
                            if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                            if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                          });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return a.tape()->record(a.value() + b.value(), parents,
                          [ia, ib](Tape& t, std::size_t, const Matrix& g) {
                            t.accumulate(ia, g);
                            t.accumulate(ib, g);
                          });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return a.tape()->record(a.value() - b.value(), parents,
                          [ia, ib](Tape& t, std::size_t, const Matrix& g) {
                            t.accumulate(ia, g);
                            t.accumulate(ib, -g);
                          });
}

Var add_row(Var a, Var r) {
  require_same_tape(a, r);
  require_shape(r.rows() == 1 && r.cols() == a.cols(), "add_row", a, r);
  const std::size_t ia = a.id(), ir = r.id();
  const Var parents[] = {a, r};
  Matrix out = a.value().rowwise() + r.value().row(0);
  return a.tape()->record(std::move(out), parents, [ia, ir](Tape& t, std::size_t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ir, g.colwise().sum());
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return a.tape()->record(a.value().cwiseProduct(b.value()), parents,
                          [ia, ib](Tape& t, std::size_t, const Matrix& g) {
                            t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                            t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                          });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  const Var parents[] = {a};
  return a.tape()->record(a.value() * s, parents,
                          [ia, s](Tape& t, std::size_t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var tanh(Var a) {
  const std::size_t ia = a.id();
  const Var parents[] = {a};
  return a.tape()->record(a.value().array().tanh().matrix(), parents,
                          [ia](Tape& t, std::size_t self, const Matrix& g) {
                            const Matrix& y = t.value(self);
                            t.accumulate(ia, (g.array() * (1.0 - y.array().square())).matrix());
                          });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  const Var parents[] = {a};
  return a.tape()->record(a.value().transpose(), parents,
                          [ia](Tape& t, std::size_t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var softmax_rows(Var a) {
  const std::size_t ia = a.id();
  const Var parents[] = {a};
  return a.tape()->record(row_softmax(a.value()), parents,
                          [ia](Tape& t, std::size_t self, const Matrix& g) {
                            const Matrix& p = t.value(self);
                            // dx = p * (g - <g, p>) row-wise
                            const Vector dots = g.cwiseProduct(p).rowwise().sum();
                            Matrix dx = p.cwiseProduct(g.colwise() - dots);
                            t.accumulate(ia, dx);
                          });
}

Var log_softmax_rows(Var a) {
  const std::size_t ia = a.id();
  const Var parents[] = {a};
  return a.tape()->record(row_log_softmax(a.value()), parents,
                          [ia](Tape& t, std::size_t self, const Matrix& g) {
                            const Matrix p = t.value(self).array().exp().matrix();
                            const Vector gsum = g.rowwise().sum();
                            Matrix dx = g - (p.array().colwise() * gsum.array()).matrix();
                            t.accumulate(ia, dx);
                          });
}

Var element(Var a, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= a.rows() || j >= a.cols()) {
    throw IndexError("element: index out of range");
  }
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  const Var parents[] = {a};
  return a.tape()->record(Matrix::Constant(1, 1, a.value()(i, j)), parents,
                          [ia, i, j, r, c](Tape& t, std::size_t, const Matrix& g) {
                            Matrix d = Matrix::Zero(r, c);
                            d(i, j) = g(0, 0);
                            t.accumulate(ia, d);
                          });
}

Var row(Var a, Eigen::Index i) {
  if (i < 0 || i >= a.rows()) throw IndexError("row: index out of range");
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  const Var parents[] = {a};
  return a.tape()->record(a.value().row(i), parents,
                          [ia, i, r, c](Tape& t, std::size_t, const Matrix& g) {
                            Matrix d = Matrix::Zero(r, c);
                            d.row(i) = g.row(0);
                            t.accumulate(ia, d);
                          });
}

Var vstack(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidInputError("vstack: no parts");
  Tape* tape = parts.front().tape();
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    if (p.tape() != tape) throw InvalidInputError("vstack: operands belong to different tapes");
    require_shape(p.cols() == c, "vstack", parts.front(), p);
    r += p.rows();
  }
  Matrix out(r, c);
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  spans.reserve(parts.size());
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    spans.emplace_back(p.id(), p.rows());
    at += p.rows();
  }
  return tape->record(std::move(out), parts, [spans](Tape& t, std::size_t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const auto& [id, rows] : spans) {
      t.accumulate(id, g.middleRows(off, rows));
      off += rows;
    }
  });
}

Var mean_rows(Var a) {
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Var parents[] = {a};
  return a.tape()->record(a.value().colwise().mean(), parents,
                          [ia, r](Tape& t, std::size_t, const Matrix& g) {
                            t.accumulate(ia, g.replicate(r, 1) / static_cast<double>(r));
                          });
}

Var sum(Var a) {
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  const Var parents[] = {a};
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), parents,
                          [ia, r, c](Tape& t, std::size_t, const Matrix& g) {
                            t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                          });
}

Var cosine_distance_rows(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "cosine_distance_rows", a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Eigen::Index n = av.rows();
  Vector na(n), nb(n);
  Matrix out(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Norms and the dot product share one routine so identical rows give
    // a cosine of exactly 1.
    const double aa = av.row(i).dot(av.row(i));
    const double bb = bv.row(i).dot(bv.row(i));
    if (!(aa > 0.0) || !(bb > 0.0)) {
      throw NumericError("cosine distance: zero-norm row " + std::to_string(i));
    }
    na(i) = std::sqrt(aa);
    nb(i) = std::sqrt(bb);
    const double cs = std::clamp(av.row(i).dot(bv.row(i)) / std::sqrt(aa * bb), -1.0, 1.0);
    out(i, 0) = 1.0 - cs;
  }
  const std::size_t ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents,
                          [ia, ib, na, nb](Tape& t, std::size_t self, const Matrix& g) {
                            const Matrix& x = t.value(ia);
                            const Matrix& y = t.value(ib);
                            const Matrix& d = t.value(self);
                            Matrix dx(x.rows(), x.cols());
                            Matrix dy(y.rows(), y.cols());
                            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                              const double cs = 1.0 - d(i, 0);
                              // d cos / dx = y/(|x||y|) - cos x/|x|^2
                              dx.row(i) = -g(i, 0) * (y.row(i) / (na(i) * nb(i)) -
                                                      cs * x.row(i) / (na(i) * na(i)));
                              dy.row(i) = -g(i, 0) * (x.row(i) / (na(i) * nb(i)) -
                                                      cs * y.row(i) / (nb(i) * nb(i)));
                            }
                            t.accumulate(ia, dx);
                            t.accumulate(ib, dy);
                          });
}

Var nll_rows(Var log_probs, std::span<const TokenId> targets) {
  const Matrix& lp = log_probs.value();
  if (static_cast<Eigen::Index>(targets.size()) != lp.rows()) {
    throw ShapeError("nll_rows: target count does not match row count");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const TokenId tk = targets[static_cast<std::size_t>(i)];
    if (tk < 0 || tk >= lp.cols()) throw IndexError("nll_rows: target id out of range");
    total -= lp(i, tk);
  }
  std::vector<TokenId> tv(targets.begin(), targets.end());
  const std::size_t il = log_probs.id();
  const Eigen::Index r = lp.rows(), c = lp.cols();
  const Var parents[] = {log_probs};
  return log_probs.tape()->record(Matrix::Constant(1, 1, total), parents,
                                  [il, tv, r, c](Tape& t, std::size_t, const Matrix& g) {
                                    Matrix d = Matrix::Zero(r, c);
                                    for (Eigen::Index i = 0; i < r; ++i) {
                                      d(i, tv[static_cast<std::size_t>(i)]) = -g(0, 0);
                                    }
                                    t.accumulate(il, d);
                                  });
}

}  // namespace kwforge::ad
