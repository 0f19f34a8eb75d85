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

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "paclab/train/ablation.hpp"
#include "paclab/train/trainer.hpp"

namespace paclab {

struct SweepPoint {
  int shots = 0;
  Method method = Method::kPac;
  std::int64_t seed = 0;
  double accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;

  double mean(int shots, Method m) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& p : points)
      if (p.shots == shots && p.method == m) {
        sum += p.accuracy;
        ++n;
      }
    if (n == 0) throw ValidationError("SweepResult: no such point");
    return sum / n;
  }
};

/// Accuracy-versus-shots curves: for every requested k, a fresh n-shot split
/// is drawn (seeded by the run seed) and every (method, seed) pair trains on
/// it. 0-shot points run with an empty labeled-target pool.
inline SweepResult run_shot_sweep(
    const Dataset& source, const Dataset& target, const std::vector<int>& ks,
    const std::vector<std::pair<Method, PretrainKind>>& methods,
    const std::vector<std::int64_t>& seeds, const TrainerSpec& base,
    int n_val_per_class, int workers = 2) {
  if (ks.empty()) throw ValidationError("run_shot_sweep: need >= 1 k value");
  for (int k : ks)
    if (k < 0) throw ValidationError("run_shot_sweep: k values must be >= 0");

  SweepResult result;
  std::map<std::pair<int, std::int64_t>, SSDASplit> splits;
  for (int k : ks)
    for (std::int64_t seed : seeds) {
      RngStream rng(static_cast<std::uint64_t>(seed), Stream::kDataSampling,
                    {0x500eu, static_cast<std::uint64_t>(k)});
      splits.emplace(std::make_pair(k, seed),
                     sample_nshot_split(source, target, k, n_val_per_class,
                                        rng));
    }

  std::vector<SweepPoint> points;
  for (int k : ks)
    for (const auto& [m, p] : methods)
      for (std::int64_t seed : seeds)
        points.push_back(SweepPoint{k, m, seed, 0.0});

  std::vector<std::function<void()>> jobs;
  result.points = points;
  std::size_t mi = 0;
  std::map<Method, PretrainKind> pre_of;
  for (const auto& [m, p] : methods) pre_of[m] = p;
  (void)mi;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    jobs.push_back([&, i]() {
      SweepPoint& pt = result.points[i];
      TrainerSpec spec = base;
      spec.method = pt.method;
      spec.pretrain = pre_of.at(pt.method);
      spec.cr_enabled = (pt.method == Method::kPac ||
                         pt.method == Method::kMmePlusPac);
      spec.config.seed = pt.seed;
      const SSDASplit& split = splits.at({pt.shots, pt.seed});
      TrainResult res = train(spec, split);
      pt.accuracy = res.target_accuracy_at_best_val;
    });
  }
  ablatedetail::run_jobs(jobs, workers);
  return result;
}

inline std::string sweep_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "k,method,seed,accuracy\n";
  for (const auto& p : r.points)
    os << p.shots << ',' << method_name(p.method) << ',' << p.seed << ','
       << p.accuracy << "\n";
  return os.str();
}

}  // namespace paclab
