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

#include "paclab/augment/color_jitter.hpp"
#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/sampler.hpp"
#include "paclab/data/split.hpp"
#include "paclab/model/backbone.hpp"
#include "paclab/model/heads.hpp"
#include "paclab/model/softmax.hpp"

namespace paclab {

/// Probabilities below this are clamped before any log.
inline constexpr double kLogClamp = 1e-12;

/// One-hot target row.
inline VecF one_hot(int num_classes, int y) {
  if (y < 0 || y >= num_classes)
    throw ValidationError("one_hot: label out of range");
  VecF v = VecF::Zero(num_classes);
  v[y] = 1.0f;
  return v;
}

/// H(p, q) = -sum_k p(k) log q(k), natural log, q clamped at 1e-12.
template <class S>
inline double cross_entropy(const VecT<S>& p, const VecT<S>& q) {
  if (p.size() != q.size())
    throw ShapeError("cross_entropy: length mismatch");
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    h -= static_cast<double>(p[k]) *
         std::log(std::max(static_cast<double>(q[k]), kLogClamp));
  return h;
}

template <class S>
inline double cross_entropy_rows(const MatT<S>& p, const MatT<S>& q,
                                 Eigen::Index i) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.cols(); ++k)
    h -= static_cast<double>(p(i, k)) *
         std::log(std::max(static_cast<double>(q(i, k)), kLogClamp));
  return h;
}

/// Mean conditional entropy of a batch of class distributions.
template <class S>
inline double conditional_entropy(const MatT<S>& p) {
  if (p.rows() == 0) return 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) h += entropy_row(p, i);
  return h / static_cast<double>(p.rows());
}

/// Thresholded consistency term over one unlabeled batch.
struct ConsistencyOutput {
  double loss = 0.0;                 // mean over the batch
  double frac_above_threshold = 0.0;
  std::vector<char> mask;            // per-example indicator
};

/// Eq-style confidence-thresholded consistency: mean over the batch of
/// 1[max_k p(k) >= tau] * H(p, q). p comes from the unperturbed forward and
/// acts as a frozen pseudo-target: it must not carry gradients (callers
/// differentiate only through q).
template <class S>
inline ConsistencyOutput consistency_loss(const MatT<S>& p, const MatT<S>& q,
                                          double tau) {
  if (tau < 0.0 || tau > 1.0)
    throw ValidationError("consistency_loss: tau must lie in [0, 1]");
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw ShapeError("consistency_loss: batch shape mismatch");
  ConsistencyOutput out;
  out.mask.assign(p.rows(), 0);
  if (p.rows() == 0) return out;
  double total = 0.0;
  int n_on = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double confidence = static_cast<double>(p.row(i).maxCoeff());
    if (confidence >= tau) {
      out.mask[i] = 1;
      ++n_on;
      total += cross_entropy_rows(p, q, i);
    }
  }
  out.loss = total / static_cast<double>(p.rows());
  out.frac_above_threshold =
      static_cast<double>(n_on) / static_cast<double>(p.rows());
  return out;
}

/// d/dlogits of (1/n) * sum_i mask_i * H(p_i, softmax(logits_i)) with p
/// detached: masked rows get (q_i - p_i) / n, unmasked rows zero.
template <class S>
inline MatT<S> consistency_dlogits(const MatT<S>& p, const MatT<S>& q,
                                   const std::vector<char>& mask) {
  MatT<S> d = MatT<S>::Zero(p.rows(), p.cols());
  const S inv_n = S(1) / static_cast<S>(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    if (mask[i]) d.row(i) = (q.row(i) - p.row(i)) * inv_n;
  return d;
}

/// Mean label cross-entropy of a probability batch, plus the matching logits
/// gradient (q - onehot(y)) / n.
template <class S>
struct SupervisedTermT {
  double loss = 0.0;
  MatT<S> dlogits;
};

using SupervisedTerm = SupervisedTermT<float>;

template <class S>
inline SupervisedTermT<S> supervised_term(const MatT<S>& probs,
                                          const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw ShapeError("supervised_term: label count mismatch");
  SupervisedTermT<S> t;
  t.dlogits = probs;
  const Eigen::Index n = probs.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= probs.cols())
      throw ValidationError("supervised_term: label out of range");
    total -= std::log(std::max(static_cast<double>(probs(i, y)), kLogClamp));
    t.dlogits(i, y) -= S(1);
  }
  t.dlogits /= static_cast<S>(n);
  t.loss = total / static_cast<double>(n);
  return t;
}

/// The classification model as seen by the losses: F then C.
struct ModelRef {
  Backbone& backbone;
  ClassifierHead& classifier;
};

inline MatRM forward_probs(ModelRef model,
                           const std::vector<const Image*>& images) {
  MatRM feats, logits;
  Batch4 batch = pack_batch(images);
  model.backbone.forward(batch, feats);
  model.classifier.forward(feats, logits);
  return softmax_rows(logits);
}

/// Deterministic per-image perturbation: image i of (step, segment) draws
/// from its own derived augmentation stream, so adding or removing one batch
/// segment never shifts another segment's augmentations.
inline std::vector<Image> perturb_batch(
    const std::vector<const Image*>& images, const PerturbationSpec& spec,
    std::uint64_t aug_seed, std::uint64_t step, std::uint64_t segment) {
  std::vector<Image> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    RngStream rng(aug_seed, Stream::kAugmentation, {step, segment, i});
    out.push_back(perturb(*images[i], spec, rng));
  }
  return out;
}

/// Mean cross-entropy on a perturbed labeled batch (ground-truth one-hot
/// targets, same perturbation stack as the consistency branch).
inline double supervised_loss(ModelRef model,
                              const std::vector<const Image*>& images,
                              const std::vector<int>& labels,
                              const PerturbationSpec& pspec,
                              std::uint64_t aug_seed, std::uint64_t step = 0,
                              std::uint64_t segment = 0) {
  if (images.empty()) throw DataError("supervised_loss: empty batch");
  std::vector<Image> perturbed =
      perturb_batch(images, pspec, aug_seed, step, segment);
  std::vector<const Image*> ptrs;
  for (const Image& im : perturbed) ptrs.push_back(&im);
  MatRM probs = forward_probs(model, ptrs);
  return supervised_term(probs, labels).loss;
}

/// Segment numbering inside one training step, shared by the trainer and the
/// value-route loss evaluation.
enum BatchSegment : std::uint64_t {
  kSegSource = 0,
  kSegTargetLabeled = 1,
  kSegUnlabeled = 2,
};

struct PacLossValue {
  double total = 0.0;
  double loss_source = 0.0;
  double loss_target_labeled = 0.0;
  double loss_consistency = 0.0;
  double frac_above_threshold = 0.0;
};

/// The full three-term criterion on one sampled batch: mean supervised CE
/// over the source batch, mean supervised CE over the labeled target batch,
/// and the thresholded consistency term over the unlabeled batch. Unweighted
/// sum; value route only (no gradients).
inline PacLossValue pac_total_loss(ModelRef model, const SSDASplit& split,
                                   const TrainBatch& batch, double tau,
                                   const PerturbationSpec& pspec,
                                   std::uint64_t aug_seed,
                                   std::uint64_t step = 0) {
  PacLossValue out;

  auto gather = [](const Dataset& ds, const std::vector<std::size_t>& idx) {
    std::vector<const Image*> imgs;
    for (std::size_t i : idx) imgs.push_back(&ds.pixels(i));
    return imgs;
  };

  if (!batch.source_idx.empty()) {
    std::vector<int> labels;
    for (std::size_t i : batch.source_idx)
      labels.push_back(split.source.label(i));
    out.loss_source =
        supervised_loss(model, gather(split.source, batch.source_idx), labels,
                        pspec, aug_seed, step, kSegSource);
  }
  if (!batch.target_idx.empty()) {
    std::vector<int> labels;
    for (std::size_t i : batch.target_idx)
      labels.push_back(split.target_labeled.label(i));
    out.loss_target_labeled = supervised_loss(
        model, gather(split.target_labeled, batch.target_idx), labels, pspec,
        aug_seed, step, kSegTargetLabeled);
  }
  if (!batch.unlabeled_idx.empty()) {
    std::vector<const Image*> clean =
        gather(split.target_unlabeled, batch.unlabeled_idx);
    MatRM p = forward_probs(model, clean);
    std::vector<Image> perturbed =
        perturb_batch(clean, pspec, aug_seed, step, kSegUnlabeled);
    std::vector<const Image*> pptr;
    for (const Image& im : perturbed) pptr.push_back(&im);
    MatRM q = forward_probs(model, pptr);
    ConsistencyOutput cr = consistency_loss(p, q, tau);
    out.loss_consistency = cr.loss;
    out.frac_above_threshold = cr.frac_above_threshold;
  }
  out.total = out.loss_source + out.loss_target_labeled + out.loss_consistency;
  return out;
}

}  // namespace paclab
