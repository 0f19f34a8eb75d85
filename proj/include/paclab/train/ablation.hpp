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

#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "paclab/train/trainer.hpp"

namespace paclab {

/// One cell of the 2x2 (rotation-pretrain x consistency) component grid.
struct AblationCell {
  bool rotation = false;
  bool cr = false;
  Method method = Method::kSPlusT;
  PretrainKind pretrain = PretrainKind::kNone;
  std::vector<double> per_seed_accuracy;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AblationTable {
  std::vector<AblationCell> cells;
  std::vector<std::int64_t> seeds;

  const AblationCell& cell(bool rotation, bool cr) const {
    for (const auto& c : cells)
      if (c.rotation == rotation && c.cr == cr) return c;
    throw ValidationError("AblationTable: no such cell");
  }
};

namespace ablatedetail {

inline void finalize(AblationCell& c) {
  double sum = 0.0;
  for (double a : c.per_seed_accuracy) sum += a;
  c.mean = sum / c.per_seed_accuracy.size();
  double var = 0.0;
  for (double a : c.per_seed_accuracy) var += (a - c.mean) * (a - c.mean);
  c.stddev = c.per_seed_accuracy.size() > 1
                 ? std::sqrt(var / (c.per_seed_accuracy.size() - 1))
                 : 0.0;
}

/// Runs (cell, seed) jobs across a small worker pool. Jobs are independent:
/// each owns its model and rng; results land in preassigned slots.
inline void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
  if (workers <= 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        jobs[i]();
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace ablatedetail

/// The component ablation: {rotation pretraining} x {consistency} around the
/// shared base spec. CR-off cells run as plain supervised training, CR-on
/// cells as the pac family, each over every seed. When with_mme is set the
/// grid instead combines the components with the minimax-entropy method.
inline AblationTable run_ablation(const TrainerSpec& base,
                                  const SSDASplit& split,
                                  const std::vector<std::int64_t>& seeds,
                                  bool with_mme = false, int workers = 2) {
  if (seeds.empty()) throw ValidationError("run_ablation: need >= 1 seed");
  AblationTable table;
  table.seeds = seeds;
  for (bool rot : {false, true}) {
    for (bool cr : {false, true}) {
      AblationCell c;
      c.rotation = rot;
      c.cr = cr;
      if (with_mme)
        c.method = cr ? Method::kMmePlusPac : Method::kMme;
      else
        c.method = cr ? Method::kPac : Method::kSPlusT;
      c.pretrain = rot ? PretrainKind::kRotation : PretrainKind::kNone;
      c.per_seed_accuracy.assign(seeds.size(), 0.0);
      table.cells.push_back(std::move(c));
    }
  }

  std::vector<std::function<void()>> jobs;
  for (std::size_t ci = 0; ci < table.cells.size(); ++ci) {
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      jobs.push_back([&, ci, si]() {
        AblationCell& cell = table.cells[ci];
        TrainerSpec spec = base;
        spec.method = cell.method;
        spec.pretrain = cell.pretrain;
        spec.cr_enabled =
            (cell.method == Method::kPac || cell.method == Method::kMmePlusPac);
        spec.config.seed = table.seeds[si];
        TrainResult res = train(spec, split);
        cell.per_seed_accuracy[si] = res.target_accuracy_at_best_val;
      });
    }
  }
  ablatedetail::run_jobs(jobs, workers);
  for (auto& c : table.cells) ablatedetail::finalize(c);
  return table;
}

inline std::string ablation_csv(const AblationTable& t) {
  std::ostringstream os;
  os << "rotation,cr,method,seed,accuracy\n";
  for (const auto& c : t.cells)
    for (std::size_t si = 0; si < t.seeds.size(); ++si)
      os << (c.rotation ? 1 : 0) << ',' << (c.cr ? 1 : 0) << ','
         << method_name(c.method) << ',' << t.seeds[si] << ','
         << c.per_seed_accuracy[si] << "\n";
  return os.str();
}

inline std::string ablation_text_table(const AblationTable& t) {
  std::ostringstream os;
  os << "Rot  CR   mean    std    (n=" << t.seeds.size() << " seeds)\n";
  for (const auto& c : t.cells) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-4s %-4s %6.2f  %5.2f\n",
                  c.rotation ? "yes" : "no", c.cr ? "yes" : "no",
                  100.0 * c.mean, 100.0 * c.stddev);
    os << buf;
  }
  return os.str();
}

}  // namespace paclab
