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

#include "paclab/core/config.hpp"
#include "paclab/core/metrics.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/sampler.hpp"
#include "paclab/data/split.hpp"
#include "paclab/model/checkpoint.hpp"
#include "paclab/objectives/losses.hpp"
#include "paclab/objectives/mme.hpp"
#include "paclab/pretrain/moco.hpp"
#include "paclab/pretrain/rotation.hpp"
#include "paclab/train/sgd.hpp"

namespace paclab {

enum class Method { kPac, kSPlusT, kMme, kMmePlusPac };
enum class PretrainKind { kNone, kRotation, kMoco };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kPac: return "pac";
    case Method::kSPlusT: return "s_plus_t";
    case Method::kMme: return "mme";
    case Method::kMmePlusPac: return "mme_plus_pac";
  }
  return "unknown";
}

inline Method method_from_name(const std::string& s) {
  if (s == "pac") return Method::kPac;
  if (s == "s_plus_t") return Method::kSPlusT;
  if (s == "mme") return Method::kMme;
  if (s == "mme_plus_pac") return Method::kMmePlusPac;
  throw ConfigError("unknown method: " + s);
}

inline const char* pretrain_name(PretrainKind p) {
  switch (p) {
    case PretrainKind::kNone: return "none";
    case PretrainKind::kRotation: return "rotation";
    case PretrainKind::kMoco: return "moco";
  }
  return "unknown";
}

inline PretrainKind pretrain_from_name(const std::string& s) {
  if (s == "none") return PretrainKind::kNone;
  if (s == "rotation") return PretrainKind::kRotation;
  if (s == "moco") return PretrainKind::kMoco;
  throw ConfigError("unknown pretrain kind: " + s);
}

/// Full description of one training run. The method name pins the
/// consistency flag: the pac family has it on, plain supervised training and
/// minimax entropy have it off.
struct TrainerSpec {
  Method method = Method::kPac;
  PretrainKind pretrain = PretrainKind::kNone;
  bool cr_enabled = true;
  bool source_free = false;  // drop the source batch term entirely
  TrainConfig config;
  PerturbationSpec perturbation;
  BackboneSpec backbone;
  int classifier_layers = 1;
  int classifier_hidden = 512;
  double temperature = 0.05;
  RotationPretrainConfig rotation;
  MoCoConfig moco;
  double mme_lambda = 0.1;

  void validate() const {
    config.validate();
    perturbation.validate();
    backbone.validate();
    if (method == Method::kPac && !cr_enabled)
      throw ValidationError("TrainerSpec: method=pac requires cr_enabled");
    if (method == Method::kSPlusT && cr_enabled)
      throw ValidationError("TrainerSpec: method=s_plus_t forbids cr_enabled");
    if (method == Method::kMme && cr_enabled)
      throw ValidationError("TrainerSpec: method=mme forbids cr_enabled");
    if (method == Method::kMmePlusPac && !cr_enabled)
      throw ValidationError(
          "TrainerSpec: method=mme_plus_pac requires cr_enabled");
    if (mme_lambda < 0.0)
      throw ValidationError("TrainerSpec: mme_lambda must be >= 0");
    if (classifier_layers != 1 && classifier_layers != 2)
      throw ValidationError("TrainerSpec: classifier_layers must be 1 or 2");
  }

  bool uses_entropy() const {
    return method == Method::kMme || method == Method::kMmePlusPac;
  }

  static TrainerSpec for_method(Method m, PretrainKind p = PretrainKind::kNone) {
    TrainerSpec spec;
    spec.method = m;
    spec.pretrain = p;
    spec.cr_enabled = (m == Method::kPac || m == Method::kMmePlusPac);
    return spec;
  }
};

/// Outcome of one run: the checkpoint that maximized validation accuracy
/// (earliest step wins ties), the metrics trace, and the headline numbers.
struct TrainResult {
  Checkpoint best_checkpoint;
  std::vector<MetricsRecord> trace;
  double best_val_accuracy = 0.0;
  double target_accuracy_at_best_val = 0.0;
  std::int64_t best_step = 0;
  std::int64_t steps_run = 0;
  double rotation_holdout_accuracy = -1.0;  // set when pretrain = rotation
};

/// Argmax accuracy on a labeled dataset; resize/range handling only, no
/// augmentation at evaluation time.
inline double evaluate(Backbone& backbone, ClassifierHead& classifier,
                       const Dataset& ds, int chunk = 64) {
  if (ds.empty()) throw DataError("evaluate: empty dataset");
  std::size_t correct = 0;
  std::size_t done = 0;
  while (done < ds.size()) {
    std::size_t take = std::min<std::size_t>(chunk, ds.size() - done);
    std::vector<const Image*> imgs;
    for (std::size_t i = 0; i < take; ++i) imgs.push_back(&ds.pixels(done + i));
    Batch4 batch = pack_batch(imgs);
    MatRM feats, logits;
    backbone.forward(batch, feats);
    classifier.forward(feats, logits);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index arg;
      logits.row(r).maxCoeff(&arg);
      if (static_cast<int>(arg) == ds.eval_label(done + r)) ++correct;
    }
    done += take;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace traindetail {

inline std::vector<const Image*> pixel_view(const Dataset& ds) {
  std::vector<const Image*> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(&ds.pixels(i));
  return out;
}

inline std::vector<const Image*> gather_pixels(
    const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<const Image*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&ds.pixels(i));
  return out;
}

/// Confidence mask of a clean probability batch: mask_i = 1[max_k p >= tau].
inline std::pair<std::vector<char>, double> confidence_mask(const MatRM& p,
                                                            double tau) {
  std::vector<char> mask(p.rows(), 0);
  int on = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (static_cast<double>(p.row(i).maxCoeff()) >= tau) {
      mask[i] = 1;
      ++on;
    }
  }
  double frac = p.rows() == 0
                    ? 0.0
                    : static_cast<double>(on) / static_cast<double>(p.rows());
  return {std::move(mask), frac};
}

/// Derived stream tags; distinct per purpose so that enabling one stage
/// never shifts another stage's draws.
inline constexpr std::uint64_t kTagPretrain = 0x9a0e;
inline constexpr std::uint64_t kTagTrainSampler = 0x5a17;

}  // namespace traindetail

/// One stage-2 step: perturbed supervised terms over the source and labeled
/// target segments, plus (when enabled) the thresholded consistency term on
/// the unlabeled segment and (for the minimax methods) the adversarial
/// entropy term. Gradients accumulate into the model; the caller owns the
/// optimizer step.
struct StepStats {
  double loss_source = 0.0;
  double loss_target_labeled = 0.0;
  double loss_consistency = 0.0;
  double frac_above_threshold = 0.0;
  double entropy = 0.0;
};

inline StepStats train_step(const TrainerSpec& spec, const SSDASplit& split,
                            const TrainBatch& batch, Backbone& F,
                            ClassifierHead& C, std::uint64_t aug_seed,
                            std::int64_t step) {
  StepStats stats;
  ModelRef model{F, C};
  const std::uint64_t ustep = static_cast<std::uint64_t>(step);

  auto supervised_segment = [&](const Dataset& pool,
                                const std::vector<std::size_t>& idx,
                                BatchSegment segment) -> double {
    std::vector<const Image*> clean = traindetail::gather_pixels(pool, idx);
    std::vector<int> labels;
    labels.reserve(idx.size());
    for (std::size_t i : idx) labels.push_back(pool.label(i));
    std::vector<Image> perturbed =
        perturb_batch(clean, spec.perturbation, aug_seed, ustep, segment);
    std::vector<const Image*> pptr;
    for (const Image& im : perturbed) pptr.push_back(&im);
    Batch4 xb = pack_batch(pptr);
    MatRM feats, logits;
    F.forward(xb, feats);
    C.forward(feats, logits);
    SupervisedTerm term = supervised_term(softmax_rows(logits), labels);
    MatRM dfeats;
    C.backward(term.dlogits, &dfeats);
    F.backward(dfeats);
    return term.loss;
  };

  if (!batch.source_idx.empty() && !spec.source_free)
    stats.loss_source =
        supervised_segment(split.source, batch.source_idx, kSegSource);
  if (!batch.target_idx.empty())
    stats.loss_target_labeled = supervised_segment(
        split.target_labeled, batch.target_idx, kSegTargetLabeled);

  std::vector<const Image*> clean_u;
  if (spec.cr_enabled || spec.uses_entropy())
    clean_u = traindetail::gather_pixels(split.target_unlabeled,
                                         batch.unlabeled_idx);

  if (spec.cr_enabled) {
    MatRM p = forward_probs(model, clean_u);  // detached pseudo-targets
    auto [mask, frac] = traindetail::confidence_mask(p, spec.config.tau);
    stats.frac_above_threshold = frac;
    bool any = false;
    for (char m : mask) any |= (m != 0);
    if (any) {
      std::vector<Image> perturbed = perturb_batch(
          clean_u, spec.perturbation, aug_seed, ustep, kSegUnlabeled);
      std::vector<const Image*> pptr;
      for (const Image& im : perturbed) pptr.push_back(&im);
      Batch4 xb = pack_batch(pptr);
      MatRM feats, logits;
      F.forward(xb, feats);
      C.forward(feats, logits);
      MatRM q = softmax_rows(logits);
      ConsistencyOutput cr = consistency_loss(p, q, spec.config.tau);
      stats.loss_consistency = cr.loss;
      MatRM dlogits = consistency_dlogits(p, q, cr.mask);
      MatRM dfeats;
      C.backward(dlogits, &dfeats);
      F.backward(dfeats);
    }
  }

  if (spec.uses_entropy())
    stats.entropy = mme_entropy_backward(model, clean_u, spec.mme_lambda);

  return stats;
}

/// Runs the full two-stage pipeline: optional pretraining (rotation pretext
/// or momentum contrast) followed by total_steps SGD updates with per-group
/// learning rates and validation-based early stopping. Deterministic in
/// (spec, split, seed).
inline TrainResult train(const TrainerSpec& spec, const SSDASplit& split) {
  spec.validate();
  const std::uint64_t seed = static_cast<std::uint64_t>(spec.config.seed);

  RngStream init_rng(seed, Stream::kInit);
  Backbone F(spec.backbone);
  F.init(init_rng);
  ClassifierSpec cspec;
  cspec.feature_dim = spec.backbone.feature_dim;
  cspec.num_classes = split.num_classes;
  cspec.layers = spec.classifier_layers;
  cspec.hidden = spec.classifier_hidden;
  cspec.temperature = spec.temperature;
  ClassifierHead C(cspec);
  C.init(init_rng);

  TrainResult result;

  if (spec.pretrain == PretrainKind::kRotation) {
    RotationHead rot(spec.backbone.feature_dim);
    rot.init(init_rng);
    std::vector<const Image*> src =
        spec.source_free ? std::vector<const Image*>{}
                         : traindetail::pixel_view(split.source);
    std::vector<const Image*> tgt =
        traindetail::pixel_view(split.target_unlabeled);
    for (std::size_t i = 0; i < split.target_labeled.size(); ++i)
      tgt.push_back(&split.target_labeled.pixels(i));
    RotationPretrainConfig rcfg = spec.rotation;
    if (spec.source_free) rcfg.domains = PretrainDomains::kTargetOnly;
    RotationPretrainResult rres = pretrain_rotation(
        F, rot, src, tgt, rcfg,
        RngStream(seed, Stream::kDataSampling, {traindetail::kTagPretrain}));
    result.rotation_holdout_accuracy = rres.final_holdout_accuracy;
  } else if (spec.pretrain == PretrainKind::kMoco) {
    std::vector<const Image*> src = traindetail::pixel_view(split.source);
    std::vector<const Image*> tgt =
        traindetail::pixel_view(split.target_unlabeled);
    for (std::size_t i = 0; i < split.target_labeled.size(); ++i)
      tgt.push_back(&split.target_labeled.pixels(i));
    pretrain_moco(F, src, tgt, spec.moco, spec.perturbation,
                  RngStream(seed, Stream::kDataSampling,
                            {traindetail::kTagPretrain}));
  }

  SamplerOptions opts;
  opts.allow_empty_target_labeled = split.target_labeled.empty();
  opts.allow_empty_source = spec.source_free;
  SSDASplit effective = split;
  if (spec.source_free) effective.source = Dataset{};
  BatchSampler sampler(
      effective, static_cast<int>(spec.config.s),
      RngStream(seed, Stream::kDataSampling, {traindetail::kTagTrainSampler}),
      opts);

  Sgd opt(spec.config.momentum, spec.config.weight_decay);
  opt.add_group(F.params(), spec.config.backbone_schedule());
  opt.add_group(C.params(), spec.config.classifier_schedule());

  std::vector<Param*> all_params = F.params();
  for (Param* p : C.params()) all_params.push_back(p);

  auto evaluate_point = [&](std::int64_t at_step, double ls, double lt,
                            double lc, double frac) {
    MetricsRecord rec;
    rec.step = at_step;
    rec.loss_source = ls;
    rec.loss_target_labeled = lt;
    rec.loss_consistency = lc;
    rec.frac_above_threshold = frac;
    rec.val_accuracy = evaluate(F, C, split.target_val);
    rec.target_accuracy = evaluate(F, C, split.unlabeled_eval);
    result.trace.push_back(rec);
    if (rec.val_accuracy > result.best_val_accuracy ||
        result.trace.size() == 1) {
      result.best_val_accuracy = rec.val_accuracy;
      result.target_accuracy_at_best_val = rec.target_accuracy;
      result.best_step = at_step;
      result.best_checkpoint = Checkpoint::capture(F, &C, nullptr);
      result.best_checkpoint.step = at_step;
      result.best_checkpoint.seed = spec.config.seed;
      result.best_checkpoint.pretrain = pretrain_name(spec.pretrain);
    }
  };

  evaluate_point(0, 0.0, 0.0, 0.0, 0.0);  // baseline before any update

  double acc_ls = 0.0, acc_lt = 0.0, acc_lc = 0.0, acc_frac = 0.0;
  std::int64_t since_eval = 0;
  for (std::int64_t step = 0; step < spec.config.total_steps; ++step) {
    TrainBatch batch = sampler.next_training_batch();
    zero_grads(all_params);
    StepStats stats = train_step(spec, split, batch, F, C, seed, step);
    opt.step(step);

    acc_ls += stats.loss_source;
    acc_lt += stats.loss_target_labeled;
    acc_lc += stats.loss_consistency;
    acc_frac += stats.frac_above_threshold;
    ++since_eval;
    ++result.steps_run;

    if ((step + 1) % spec.config.eval_interval == 0 ||
        step + 1 == spec.config.total_steps) {
      evaluate_point(step + 1, acc_ls / since_eval, acc_lt / since_eval,
                     acc_lc / since_eval, acc_frac / since_eval);
      acc_ls = acc_lt = acc_lc = acc_frac = 0.0;
      since_eval = 0;
    }
  }
  return result;
}

}  // namespace paclab
