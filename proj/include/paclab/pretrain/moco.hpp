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

#include "paclab/augment/color_jitter.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/model/backbone.hpp"
#include "paclab/model/softmax.hpp"
#include "paclab/objectives/losses.hpp"
#include "paclab/train/sgd.hpp"

namespace paclab {

/// Momentum-contrast pretraining configuration. The backbone's normalized
/// feature itself is the contrastive embedding (no extra projection head).
struct MoCoConfig {
  int queue_len = 4096;
  double key_momentum = 0.999;
  double temperature_nce = 0.07;
  std::int64_t steps = 5000;
  int batch_per_domain = 32;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double lr_decay_coeff = 0.0001;
  double lr_decay_power = 0.75;

  void validate() const {
    if (!(key_momentum > 0.0 && key_momentum < 1.0))
      throw ValidationError("MoCoConfig: key_momentum must lie in (0, 1)");
    if (queue_len < 2 * batch_per_domain)
      throw ConfigError("MoCoConfig: queue_len must be >= the batch size");
    if (!(temperature_nce > 0.0))
      throw ValidationError("MoCoConfig: temperature_nce must be > 0");
    if (steps < 0) throw ValidationError("MoCoConfig: steps must be >= 0");
    if (batch_per_domain < 1)
      throw ValidationError("MoCoConfig: batch_per_domain must be >= 1");
  }
};

/// FIFO queue of key embeddings, always full once warmed. Initialized with
/// random unit vectors so it is warm from the first step.
class MoCoQueue {
 public:
  MoCoQueue(int queue_len, int dim, RngStream& rng)
      : keys_(queue_len, dim) {
    for (Eigen::Index i = 0; i < keys_.rows(); ++i) {
      for (Eigen::Index j = 0; j < keys_.cols(); ++j)
        keys_(i, j) = static_cast<float>(rng.normal());
      keys_.row(i) /= std::max(keys_.row(i).norm(), 1e-12f);
    }
  }

  int size() const { return static_cast<int>(keys_.rows()); }
  const MatRM& keys() const { return keys_; }

  /// Enqueues a batch of keys, dequeuing the same count (ring buffer).
  void push(const MatRM& batch_keys) {
    for (Eigen::Index i = 0; i < batch_keys.rows(); ++i) {
      keys_.row(head_) = batch_keys.row(i);
      head_ = (head_ + 1) % keys_.rows();
    }
  }

 private:
  MatRM keys_;
  Eigen::Index head_ = 0;
};

struct MoCoLossTerm {
  double loss = 0.0;
  MatRM dquery;  // gradient w.r.t. the query embeddings
};

/// InfoNCE over (query, positive key, queue negatives):
///   -log( exp(q.k+ / T) / (exp(q.k+ / T) + sum_j exp(q.queue_j / T)) )
/// Keys are detached; the gradient flows to the queries only.
inline MoCoLossTerm moco_infonce(const MatRM& queries, const MatRM& pos_keys,
                                 const MatRM& queue, double temperature) {
  if (queries.rows() != pos_keys.rows())
    throw ShapeError("moco_infonce: query/key count mismatch");
  const Eigen::Index n = queries.rows();
  const Eigen::Index m = queue.rows();
  const float inv_t = static_cast<float>(1.0 / temperature);

  MatRM logits(n, m + 1);
  logits.col(0) = (queries.array() * pos_keys.array()).rowwise().sum() * inv_t;
  logits.rightCols(m).noalias() = queries * queue.transpose() * inv_t;

  MatRM probs = softmax_rows(logits);
  MoCoLossTerm out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    total -= std::log(std::max(static_cast<double>(probs(i, 0)), kLogClamp));
  out.loss = total / static_cast<double>(n);

  // dL/dlogits = (p - onehot0)/n; chain through logits = q.K^T / T.
  MatRM dlogits = probs;
  dlogits.col(0).array() -= 1.0f;
  dlogits /= static_cast<float>(n);
  out.dquery.resize(n, queries.cols());
  out.dquery.noalias() = dlogits.rightCols(m) * queue * inv_t;
  out.dquery += (dlogits.col(0) * inv_t).asDiagonal() * pos_keys;
  return out;
}

/// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise over all params.
inline void momentum_update(Backbone& key_encoder, Backbone& query_encoder,
                            double m) {
  auto kp = key_encoder.params();
  auto qp = query_encoder.params();
  const float mf = static_cast<float>(m);
  for (std::size_t i = 0; i < kp.size(); ++i)
    kp[i]->value = mf * kp[i]->value + (1.0f - mf) * qp[i]->value;
}

struct MoCoResult {
  std::vector<double> loss_trace;  // one entry per eval interval
  std::int64_t steps_run = 0;
};

/// Momentum-contrast pretraining over the pixel pools of both domains. Two
/// augmented views per image; the key encoder trails the query encoder by
/// the momentum update and its outputs fill a fixed-length FIFO queue of
/// negatives.
inline MoCoResult pretrain_moco(Backbone& backbone,
                                const std::vector<const Image*>& source_images,
                                const std::vector<const Image*>& target_images,
                                const MoCoConfig& cfg,
                                const PerturbationSpec& pspec, RngStream rng) {
  cfg.validate();
  if (source_images.empty() || target_images.empty())
    throw DataError("pretrain_moco: empty image pool");

  Backbone key_encoder = backbone;  // theta_k starts equal to theta_q
  MoCoQueue queue(cfg.queue_len, backbone.feature_dim(), rng);

  Sgd opt(cfg.momentum, cfg.weight_decay);
  opt.add_group(backbone.params(),
                ScheduleParams{cfg.lr, cfg.lr_decay_coeff, cfg.lr_decay_power});

  MoCoResult result;
  double window_loss = 0.0;
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    // Momentum update precedes key encoding each step.
    momentum_update(key_encoder, backbone, cfg.key_momentum);

    std::vector<const Image*> base;
    for (int i = 0; i < cfg.batch_per_domain; ++i)
      base.push_back(source_images[rng.uniform_index(
          static_cast<std::uint32_t>(source_images.size()))]);
    for (int i = 0; i < cfg.batch_per_domain; ++i)
      base.push_back(target_images[rng.uniform_index(
          static_cast<std::uint32_t>(target_images.size()))]);

    // Two augmented views per image.
    std::vector<Image> view_q, view_k;
    for (std::size_t i = 0; i < base.size(); ++i) {
      RngStream rq = rng.fork(static_cast<std::uint64_t>(step), 2 * i);
      RngStream rk = rng.fork(static_cast<std::uint64_t>(step), 2 * i + 1);
      view_q.push_back(perturb(*base[i], pspec, rq));
      view_k.push_back(perturb(*base[i], pspec, rk));
    }
    std::vector<const Image*> qptr, kptr;
    for (const Image& im : view_q) qptr.push_back(&im);
    for (const Image& im : view_k) kptr.push_back(&im);

    MatRM keys = extract_features(key_encoder, kptr);  // detached

    Batch4 qbatch = pack_batch(qptr);
    MatRM queries;
    backbone.forward(qbatch, queries);

    MoCoLossTerm term =
        moco_infonce(queries, keys, queue.keys(), cfg.temperature_nce);
    window_loss += term.loss;

    zero_grads(backbone.params());
    backbone.backward(term.dquery);
    opt.step(step);

    queue.push(keys);
    ++result.steps_run;
    if ((step + 1) % 100 == 0 || step + 1 == cfg.steps) {
      result.loss_trace.push_back(window_loss / ((step % 100) + 1));
      window_loss = 0.0;
    }
  }
  return result;
}

}  // namespace paclab
