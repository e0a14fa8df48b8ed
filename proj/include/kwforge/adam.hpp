#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kwforge/errors.hpp"
#include "kwforge/types.hpp"

namespace kwforge {

struct AdamOptions {
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment gradient descent over a fixed list of matrices.
/// Moments are allocated on the first step and keyed by parameter position.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
    if (params.size() != grads.size()) throw ShapeError("adam: params/grads count mismatch");
    if (first_.empty()) {
      for (Matrix* p : params) {
        first_.push_back(Matrix::Zero(p->rows(), p->cols()));
        second_.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
    }
    if (first_.size() != params.size()) throw ShapeError("adam: parameter list changed size");
    ++steps_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& g = *grads[i];
      if (g.size() == 0) continue;  // no gradient reached this parameter
      first_[i] = options_.beta1 * first_[i] + (1.0 - options_.beta1) * g;
      second_[i] = options_.beta2 * second_[i] + (1.0 - options_.beta2) * g.cwiseAbs2();
      const auto mhat = first_[i].array() / c1;
      const auto vhat = second_[i].array() / c2;
      params[i]->array() -= options_.learning_rate * mhat / (vhat.sqrt() + options_.epsilon);
    }
  }

  void step(Matrix& param, const Matrix& grad) {
    Matrix* p[] = {&param};
    const Matrix* g[] = {&grad};
    step(p, g);
  }

  void reset() {
    first_.clear();
    second_.clear();
    steps_ = 0;
  }

  long steps() const { return steps_; }
  const std::vector<Matrix>& first_moments() const { return first_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long steps_ = 0;
};

}  // namespace kwforge
