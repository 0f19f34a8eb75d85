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

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/split.hpp"

namespace paclab {

/// One optimization step's sampled index triple. Sizes are s / s / 2s
/// (source_idx may be empty only in source-free mode, target_idx only in
/// 0-shot mode).
struct TrainBatch {
  std::vector<std::size_t> source_idx;
  std::vector<std::size_t> target_idx;
  std::vector<std::size_t> unlabeled_idx;
};

namespace detail {

/// Cycles a pool with a reshuffle at every epoch boundary: every id is seen
/// once per epoch, and pools smaller than a batch repeat within it.
class PoolCycler {
 public:
  PoolCycler() = default;
  PoolCycler(std::size_t n, RngStream* rng) : rng_(rng) {
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    if (rng_) rng_->shuffle(order_);
  }

  std::size_t next() {
    if (pos_ == order_.size()) {
      pos_ = 0;
      if (rng_) rng_->shuffle(order_);
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  RngStream* rng_ = nullptr;
};

}  // namespace detail

struct SamplerOptions {
  bool allow_empty_target_labeled = false;  // 0-shot mode
  bool allow_empty_source = false;          // source-free mode
};

/// Per-step minibatch sampler over an SSDA split. Owns its RngStream; one
/// sampler per training loop. Draw order per step is fixed (source, labeled
/// target, unlabeled), so the sequence is reproducible from the stream seed.
class BatchSampler {
 public:
  using Options = SamplerOptions;

  BatchSampler(const SSDASplit& split, int s, RngStream rng,
               Options opts = Options())
      : split_(&split), s_(s), rng_(std::move(rng)), opts_(opts) {
    if (s < 1) throw ValidationError("BatchSampler: s must be >= 1");
    if (split.source.empty() && !opts.allow_empty_source)
      throw DataError("BatchSampler: empty source pool");
    if (split.target_labeled.empty() && !opts.allow_empty_target_labeled)
      throw DataError("BatchSampler: empty labeled target pool");
    if (split.target_unlabeled.empty())
      throw DataError("BatchSampler: empty unlabeled target pool");
    source_ = detail::PoolCycler(split.source.size(), &rng_);
    if (!split.target_labeled.empty())
      target_ = detail::PoolCycler(split.target_labeled.size(), &rng_);
    unlabeled_ = detail::PoolCycler(split.target_unlabeled.size(), &rng_);
  }

  int s() const { return s_; }

  TrainBatch next_training_batch() {
    TrainBatch b;
    if (!split_->source.empty())
      for (int i = 0; i < s_; ++i) b.source_idx.push_back(source_.next());
    if (!split_->target_labeled.empty())
      for (int i = 0; i < s_; ++i) b.target_idx.push_back(target_.next());
    for (int i = 0; i < 2 * s_; ++i)
      b.unlabeled_idx.push_back(unlabeled_.next());
    return b;
  }

 private:
  const SSDASplit* split_;
  int s_;
  RngStream rng_;
  Options opts_;
  detail::PoolCycler source_, target_, unlabeled_;
};

/// Single-shot form of the sampler contract.
inline TrainBatch next_training_batch(BatchSampler& sampler) {
  return sampler.next_training_batch();
}

}  // namespace paclab
