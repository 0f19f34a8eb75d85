// Copyright 2026 The PACLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "paclab/core/errors.hpp"
#include "paclab/model/layers.hpp"

namespace paclab {

/// Linear max-margin binary classifier with squared hinge loss and an L2
/// penalty, trained by full-batch gradient descent with momentum (the
/// objective is smooth and strongly convex, so this converges reliably and
/// deterministically).
class LinearSvm {
 public:
  struct Options {
    double C = 1.0;
    int iterations = 2000;
    double momentum = 0.9;
  };

  /// X: one row per example; y: +-1 labels.
  void fit(const MatT<double>& X, const std::vector<int>& y,
           const Options& opts) {
    if (X.rows() != static_cast<Eigen::Index>(y.size()))
      throw ShapeError("LinearSvm: label count mismatch");
    if (X.rows() == 0) throw DataError("LinearSvm: empty training set");
    const Eigen::Index n = X.rows(), d = X.cols();

    w_ = Eigen::VectorXd::Zero(d);
    b_ = 0.0;

    // Mean-form objective: lambda/2 ||w||^2 + mean_i max(0, 1 - y_i f_i)^2
    // with lambda = 1 / (C * n); gradient Lipschitz constant is bounded by
    // lambda + 2 * max_row_sq_norm, which sets the step size.
    const double lambda = 1.0 / (opts.C * static_cast<double>(n));
    double max_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      max_sq = std::max(max_sq, X.row(i).squaredNorm() + 1.0);
    const double lr = 1.0 / (lambda + 2.0 * max_sq);

    Eigen::VectorXd vw = Eigen::VectorXd::Zero(d);
    double vb = 0.0;
    Eigen::VectorXd margins(n), coef(n);
    for (int it = 0; it < opts.iterations; ++it) {
      margins.noalias() = X * w_;
      margins.array() += b_;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = 1.0 - y[i] * margins[i];
        coef[i] = m > 0.0 ? -2.0 * m * y[i] / static_cast<double>(n) : 0.0;
      }
      Eigen::VectorXd gw = lambda * w_ + X.transpose() * coef;
      double gb = coef.sum();
      vw = opts.momentum * vw + gw;
      vb = opts.momentum * vb + gb;
      w_ -= lr * vw;
      b_ -= lr * vb;
    }
  }

  double decision(const Eigen::VectorXd& x) const { return w_.dot(x) + b_; }

  int predict(const Eigen::VectorXd& x) const {
    return decision(x) >= 0.0 ? 1 : -1;
  }

  double error_rate(const MatT<double>& X, const std::vector<int>& y) const {
    int wrong = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (predict(X.row(i).transpose()) != y[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(X.rows());
  }

  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

}  // namespace paclab
