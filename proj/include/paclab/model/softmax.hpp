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

#include "paclab/core/errors.hpp"
#include "paclab/model/layers.hpp"

namespace paclab {

/// Row-wise softmax with max-subtraction, so arbitrarily large finite logits
/// (e.g. temperature-sharpened ones) do not overflow.
template <class S>
inline MatT<S> softmax_rows(const MatT<S>& logits) {
  MatT<S> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const S mx = logits.row(i).maxCoeff();
    S sum = S(0);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const S e = std::exp(logits(i, k) - mx);
      p(i, k) = e;
      sum += e;
    }
    p.row(i) /= sum;
  }
  return p;
}

/// Shannon entropy of one row (natural log), zero-safe.
template <class S>
inline double entropy_row(const MatT<S>& p, Eigen::Index i) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.cols(); ++k) {
    const double v = static_cast<double>(p(i, k));
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

/// Checks simplex membership within tol (used by tests and assertions).
template <class S>
inline bool is_prob_vector(const MatT<S>& p, Eigen::Index i,
                           double tol = 1e-6) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < p.cols(); ++k) {
    if (p(i, k) < S(0)) return false;
    sum += static_cast<double>(p(i, k));
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace paclab
