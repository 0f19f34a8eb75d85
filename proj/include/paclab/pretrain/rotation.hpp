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

#include <string>
#include <vector>

#include "paclab/augment/rotate.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/core/schedule.hpp"
#include "paclab/model/backbone.hpp"
#include "paclab/model/heads.hpp"
#include "paclab/model/softmax.hpp"
#include "paclab/objectives/losses.hpp"
#include "paclab/train/sgd.hpp"

namespace paclab {

/// Which pools feed the rotation pretext task.
enum class PretrainDomains { kSourceAndTarget, kTargetOnly };

/// Stage-1 rotation-prediction training configuration. The named presets
/// carry the published step counts and batch sizes; the desk preset is the
/// minutes-scale default.
struct RotationPretrainConfig {
  std::int64_t steps = 1000;
  int s_rot = 8;  // base images drawn per domain per step
  double lr = 0.01;
  PretrainDomains domains = PretrainDomains::kSourceAndTarget;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double lr_decay_coeff = 0.0001;
  double lr_decay_power = 0.75;
  double holdout_fraction = 0.1;  // images held out for pretext evaluation
  std::int64_t eval_interval = 200;

  void validate() const {
    if (steps < 0)
      throw ValidationError("RotationPretrainConfig: steps must be >= 0");
    if (s_rot < 1)
      throw ValidationError("RotationPretrainConfig: s_rot must be >= 1");
    if (!(lr > 0.0))
      throw ValidationError("RotationPretrainConfig: lr must be > 0");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
      throw ValidationError(
          "RotationPretrainConfig: holdout_fraction must lie in [0, 1)");
  }

  static RotationPretrainConfig preset(const std::string& name) {
    RotationPretrainConfig cfg;
    if (name == "desk") {
      cfg.steps = 1600;
      cfg.s_rot = 12;
      cfg.lr = 0.01;
    } else if (name == "alexnet-like") {
      cfg.steps = 4000;
      cfg.s_rot = 128;
      cfg.lr = 0.01;
    } else if (name == "vgg-like") {
      cfg.steps = 2000;
      cfg.s_rot = 16;
      cfg.lr = 0.001;
    } else if (name == "resnet-like") {
      cfg.steps = 5000;
      cfg.s_rot = 16;
      cfg.lr = 0.001;
    } else {
      throw ConfigError("unknown rotation pretrain preset: " + name);
    }
    return cfg;
  }
};

/// Expands B images into the 4B batch of all four rotations, grouped
/// contiguously per image, with the matching rotation labels. Each label
/// value appears exactly B times.
inline std::pair<Batch4, std::vector<int>> build_rotation_batch(
    const std::vector<const Image*>& images) {
  if (images.empty()) throw DataError("build_rotation_batch: empty batch");
  std::vector<Image> rotated;
  std::vector<int> labels;
  rotated.reserve(images.size() * 4);
  for (const Image* img : images) {
    if (img->h != img->w)
      throw ShapeError("build_rotation_batch: images must be square");
    for (int r = 0; r < 4; ++r) {
      rotated.push_back(rotate90(*img, RotationLabel(r)));
      labels.push_back(r);
    }
  }
  std::vector<const Image*> ptrs;
  for (const Image& im : rotated) ptrs.push_back(&im);
  return {pack_batch(ptrs), std::move(labels)};
}

struct RotationTracePoint {
  std::int64_t step = 0;
  double loss = 0.0;
  double holdout_accuracy = 0.0;
};

struct RotationPretrainResult {
  std::vector<RotationTracePoint> trace;
  double final_holdout_accuracy = 0.0;
  std::int64_t source_images_consumed = 0;
  std::int64_t target_images_consumed = 0;
};

namespace rotdetail {

/// Pixel-only view: pretraining code can reach images but no label fields.
struct PixelPool {
  std::vector<const Image*> images;
};

inline double holdout_accuracy(Backbone& backbone, RotationHead& head,
                               const std::vector<const Image*>& holdout) {
  if (holdout.empty()) return 0.0;
  std::size_t correct = 0, total = 0;
  std::size_t chunk = 16;
  for (std::size_t off = 0; off < holdout.size(); off += chunk) {
    std::vector<const Image*> part(
        holdout.begin() + off,
        holdout.begin() + std::min(off + chunk, holdout.size()));
    auto [batch, labels] = build_rotation_batch(part);
    MatRM feats, logits;
    backbone.forward(batch, feats);
    head.forward(feats, logits);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg;
      logits.row(i).maxCoeff(&arg);
      if (static_cast<int>(arg) == labels[i]) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace rotdetail

/// Stage-1 rotation pretraining on the pixel pools of the split. Never
/// touches class labels (it only ever sees pixel views). The rotation head
/// is trained jointly and discarded by the caller afterwards.
inline RotationPretrainResult pretrain_rotation(
    Backbone& backbone, RotationHead& rot_head,
    const std::vector<const Image*>& source_images,
    const std::vector<const Image*>& target_images,
    const RotationPretrainConfig& cfg, RngStream rng) {
  cfg.validate();
  const bool use_source = cfg.domains == PretrainDomains::kSourceAndTarget;
  if (use_source && source_images.empty())
    throw DataError("pretrain_rotation: empty source pool");
  if (target_images.empty())
    throw DataError("pretrain_rotation: empty target pool");

  // Hold out a slice of each pool for pretext-task evaluation.
  auto partition = [&](const std::vector<const Image*>& pool,
                       std::vector<const Image*>& train,
                       std::vector<const Image*>& held) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t n_held =
        static_cast<std::size_t>(cfg.holdout_fraction * pool.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < n_held ? held : train).push_back(pool[order[i]]);
  };

  std::vector<const Image*> src_train, tgt_train, holdout;
  if (use_source) partition(source_images, src_train, holdout);
  partition(target_images, tgt_train, holdout);

  RotationPretrainResult result;
  if (cfg.steps == 0) return result;

  Sgd opt(cfg.momentum, cfg.weight_decay);
  ScheduleParams sched{cfg.lr, cfg.lr_decay_coeff, cfg.lr_decay_power};
  std::vector<Param*> params = backbone.params();
  for (Param* p : rot_head.params()) params.push_back(p);
  opt.add_group(params, sched);

  auto next_indices = [&](std::size_t pool_size, int count) {
    std::vector<std::size_t> idx(count);
    for (int i = 0; i < count; ++i)
      idx[i] = rng.uniform_index(static_cast<std::uint32_t>(pool_size));
    return idx;
  };

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    std::vector<const Image*> base;
    if (use_source) {
      for (std::size_t i : next_indices(src_train.size(), cfg.s_rot))
        base.push_back(src_train[i]);
      result.source_images_consumed += cfg.s_rot;
    }
    for (std::size_t i : next_indices(tgt_train.size(), cfg.s_rot))
      base.push_back(tgt_train[i]);
    result.target_images_consumed += cfg.s_rot;

    auto [batch, labels] = build_rotation_batch(base);
    MatRM feats, logits;
    backbone.forward(batch, feats);
    rot_head.forward(feats, logits);
    MatRM probs = softmax_rows(logits);
    SupervisedTerm term = supervised_term(probs, labels);

    zero_grads(params);
    MatRM dfeats;
    rot_head.backward(term.dlogits, &dfeats);
    backbone.backward(dfeats);
    opt.step(step);

    if ((step + 1) % cfg.eval_interval == 0 || step + 1 == cfg.steps) {
      RotationTracePoint pt;
      pt.step = step + 1;
      pt.loss = term.loss;
      pt.holdout_accuracy =
          rotdetail::holdout_accuracy(backbone, rot_head, holdout);
      result.trace.push_back(pt);
      result.final_holdout_accuracy = pt.holdout_accuracy;
    }
  }
  return result;
}

}  // namespace paclab
