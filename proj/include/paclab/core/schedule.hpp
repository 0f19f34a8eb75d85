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
#include <cstdint>

#include "paclab/core/errors.hpp"

namespace paclab {

/// Inverse-power learning-rate decay: eta_i = eta0 / (1 + coeff * i)^power.
struct ScheduleParams {
  double eta0 = 0.0;
  double decay_coeff = 0.0001;
  double decay_power = 0.75;

  void validate() const {
    if (!(eta0 > 0.0)) throw ValidationError("ScheduleParams: eta0 must be > 0");
    if (decay_coeff < 0.0)
      throw ValidationError("ScheduleParams: decay_coeff must be >= 0");
    if (decay_power < 0.0)
      throw ValidationError("ScheduleParams: decay_power must be >= 0");
  }
};

/// Learning rate after i optimizer steps. Strictly decreasing in i when
/// decay_coeff > 0, and exactly eta0 at i = 0.
inline double lr_at_step(const ScheduleParams& sched, std::int64_t i) {
  return sched.eta0 / std::pow(1.0 + sched.decay_coeff * static_cast<double>(i),
                               sched.decay_power);
}

}  // namespace paclab
