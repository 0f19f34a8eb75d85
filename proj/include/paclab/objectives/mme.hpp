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

#include <vector>

#include "paclab/objectives/losses.hpp"

namespace paclab {

/// Saves and restores parameter gradients across a scoped computation.
class GradSnapshot {
 public:
  explicit GradSnapshot(const std::vector<Param*>& params) : params_(params) {
    saved_.reserve(params.size());
    for (Param* p : params) saved_.push_back(p->grad);
  }

  /// Replaces each gradient's delta since the snapshot with its negation:
  /// g <- saved - (g - saved).
  void negate_delta() {
    for (std::size_t i = 0; i < params_.size(); ++i)
      params_[i]->grad = 2.0f * saved_[i] - params_[i]->grad;
  }

  void restore() {
    for (std::size_t i = 0; i < params_.size(); ++i)
      params_[i]->grad = saved_[i];
  }

 private:
  std::vector<Param*> params_;
  std::vector<VecF> saved_;
};

/// d/dlogits of the mean row entropy: -p_m (log p_m + H_row) / n.
template <class S>
inline MatT<S> entropy_dlogits(const MatT<S>& p) {
  MatT<S> d(p.rows(), p.cols());
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double h = entropy_row(p, i);
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double pk = std::max(static_cast<double>(p(i, k)), kLogClamp);
      d(i, k) = static_cast<S>(-pk * (std::log(pk) + h) * inv_n);
    }
  }
  return d;
}

struct MmeStepLosses {
  double classifier_term = 0.0;  // supervised CE - lambda * H (descended by C)
  double feature_term = 0.0;     // supervised CE + lambda * H (descended by F)
  double entropy = 0.0;          // mean conditional entropy H
};

/// Accumulates the adversarial entropy gradients of the minimax-entropy
/// step: backward of lambda * H runs once, then the classifier parameters'
/// contribution is negated while the feature extractor keeps its sign. With
/// one SGD descent step this maximizes H w.r.t. the classifier and minimizes
/// it w.r.t. the features. Returns mean entropy H of the batch.
inline double mme_entropy_backward(ModelRef model,
                                   const std::vector<const Image*>& unlabeled,
                                   double lambda) {
  if (lambda < 0.0)
    throw ValidationError("mme_entropy_backward: lambda must be >= 0");
  if (unlabeled.empty())
    throw DataError("mme_entropy_backward: empty unlabeled batch");

  Batch4 batch = pack_batch(unlabeled);
  MatRM feats, logits;
  model.backbone.forward(batch, feats);
  model.classifier.forward(feats, logits);
  MatRM p = softmax_rows(logits);
  const double h = conditional_entropy(p);
  if (lambda == 0.0) return h;

  MatRM dlogits = entropy_dlogits(p) * static_cast<float>(lambda);
  GradSnapshot cls_snapshot(model.classifier.params());
  MatRM dfeats;
  model.classifier.backward(dlogits, &dfeats);
  cls_snapshot.negate_delta();  // classifier ascends the entropy
  model.backbone.backward(dfeats);
  return h;
}

/// Value route of the two adversarial objectives, for logging and tests.
inline MmeStepLosses mme_step_losses(ModelRef model,
                                     const std::vector<const Image*>& unlabeled,
                                     double supervised_ce, double lambda) {
  if (lambda < 0.0)
    throw ValidationError("mme_step_losses: lambda must be >= 0");
  MatRM p = forward_probs(model, unlabeled);
  MmeStepLosses out;
  out.entropy = conditional_entropy(p);
  out.classifier_term = supervised_ce - lambda * out.entropy;
  out.feature_term = supervised_ce + lambda * out.entropy;
  return out;
}

}  // namespace paclab
