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

#include "paclab/core/schedule.hpp"
#include "paclab/model/layers.hpp"

namespace paclab {

/// Minibatch SGD with momentum and decoupled-by-convention L2 weight decay
/// (decay is added to the gradient, the usual SGD formulation). Each group
/// carries its own initial learning rate; all groups share the decay law,
/// so ratios between group rates are preserved at every step.
class Sgd {
 public:
  Sgd(double momentum, double weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void add_group(std::vector<Param*> params, ScheduleParams schedule) {
    schedule.validate();
    Group g;
    g.params = std::move(params);
    g.schedule = schedule;
    g.momentum_buffers.resize(g.params.size());
    for (std::size_t i = 0; i < g.params.size(); ++i)
      g.momentum_buffers[i] = VecF::Zero(g.params[i]->value.size());
    groups_.push_back(std::move(g));
  }

  /// One update using the learning rate for step i; zeroes gradients after.
  void step(std::int64_t i) {
    for (Group& g : groups_) {
      const float lr = static_cast<float>(lr_at_step(g.schedule, i));
      const float mom = static_cast<float>(momentum_);
      const float wd = static_cast<float>(weight_decay_);
      for (std::size_t p = 0; p < g.params.size(); ++p) {
        Param& par = *g.params[p];
        VecF& buf = g.momentum_buffers[p];
        buf = mom * buf + par.grad + wd * par.value;
        par.value -= lr * buf;
        par.grad.setZero();
      }
    }
  }

  double group_lr(std::size_t group, std::int64_t i) const {
    return lr_at_step(groups_[group].schedule, i);
  }
  std::size_t num_groups() const { return groups_.size(); }

 private:
  struct Group {
    std::vector<Param*> params;
    ScheduleParams schedule;
    std::vector<VecF> momentum_buffers;
  };

  double momentum_;
  double weight_decay_;
  std::vector<Group> groups_;
};

}  // namespace paclab
