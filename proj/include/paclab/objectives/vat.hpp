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

#include "paclab/objectives/losses.hpp"
#include "paclab/objectives/mme.hpp"

namespace paclab {

/// Virtual adversarial training criterion configuration.
struct VATConfig {
  double radius = 3.5;
  double coefficient = 0.01;
  int power_iterations = 1;
  double xi = 0.01;  // scale of the linearization point in input space

  void validate() const {
    if (!(radius > 0.0)) throw ValidationError("VATConfig: radius must be > 0");
    if (coefficient < 0.0)
      throw ValidationError("VATConfig: coefficient must be >= 0");
    if (power_iterations < 1)
      throw ValidationError("VATConfig: power_iterations must be >= 1");
    if (!(xi > 0.0)) throw ValidationError("VATConfig: xi must be > 0");
  }
};

/// KL(p || q) with q clamped below before the log.
inline double kl_divergence_rows(const MatRM& p, const MatRM& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double pk = p(i, k);
      if (pk > 0.0)
        total += pk * (std::log(pk) -
                       std::log(std::max(static_cast<double>(q(i, k)),
                                         kLogClamp)));
    }
  return total / static_cast<double>(p.rows());
}

namespace vatdetail {

inline void normalize_per_image(Batch4& d) {
  const std::size_t per = d.per_image();
  for (int i = 0; i < d.n; ++i) {
    float* p = d.image_data(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < per; ++j) sq += static_cast<double>(p[j]) * p[j];
    const float inv = static_cast<float>(1.0 / std::max(std::sqrt(sq), 1e-12));
    for (std::size_t j = 0; j < per; ++j) p[j] *= inv;
  }
}

}  // namespace vatdetail

/// Virtual adversarial loss on an unlabeled batch: finds a per-image
/// adversarial direction by power iteration (random unit start, backprop of
/// the KL at a xi-scaled offset, renormalize), then returns
/// coefficient * mean KL(p_clean || p(x + radius * direction)) with p_clean
/// detached. Parameter gradients are restored afterwards; this is a value
/// route.
inline double vat_loss(ModelRef model, const std::vector<const Image*>& images,
                       const VATConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (images.empty()) throw DataError("vat_loss: empty batch");
  if (cfg.coefficient == 0.0) return 0.0;

  std::vector<Param*> all_params = model.backbone.params();
  for (Param* p : model.classifier.params()) all_params.push_back(p);
  GradSnapshot guard(all_params);

  Batch4 x = pack_batch(images);
  MatRM feats, logits;
  model.backbone.forward(x, feats);
  model.classifier.forward(feats, logits);
  const MatRM p_clean = softmax_rows(logits);  // detached pseudo-target

  // Random unit start.
  Batch4 dir;
  dir.resize(x.n, x.c, x.h, x.w);
  for (float& v : dir.v) v = static_cast<float>(rng.normal());
  vatdetail::normalize_per_image(dir);

  const float n_inv = 1.0f / static_cast<float>(x.n);
  for (int it = 0; it < cfg.power_iterations; ++it) {
    Batch4 xp = x;
    const float xi = static_cast<float>(cfg.xi);
    for (std::size_t j = 0; j < xp.v.size(); ++j) xp.v[j] += xi * dir.v[j];
    MatRM feats_p, logits_p;
    model.backbone.forward(xp, feats_p);
    model.classifier.forward(feats_p, logits_p);
    MatRM q = softmax_rows(logits_p);
    // d/dlogits of mean KL(p_clean || softmax(logits)) = (q - p)/n.
    MatRM dlogits = (q - p_clean) * n_inv;
    MatRM dfeats;
    Batch4 dx;
    model.classifier.backward(dlogits, &dfeats);
    model.backbone.backward(dfeats, &dx);
    dir = dx;
    vatdetail::normalize_per_image(dir);
  }

  Batch4 xadv = x;
  const float r = static_cast<float>(cfg.radius);
  for (std::size_t j = 0; j < xadv.v.size(); ++j) xadv.v[j] += r * dir.v[j];
  MatRM feats_a, logits_a;
  model.backbone.forward(xadv, feats_a);
  model.classifier.forward(feats_a, logits_a);
  MatRM q_adv = softmax_rows(logits_a);

  guard.restore();
  return cfg.coefficient * kl_divergence_rows(p_clean, q_adv);
}

}  // namespace paclab
