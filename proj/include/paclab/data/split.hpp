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

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/dataset.hpp"

namespace paclab {

/// The four pools of one adaptation scenario. The unlabeled pool carries no
/// labels at all; ground truth for reporting target accuracy lives in
/// unlabeled_eval, a label-bearing mirror with identical row order that only
/// evaluation code should touch.
struct SSDASplit {
  Dataset source;           // D_s, labeled
  Dataset target_labeled;   // D_t, k per class
  Dataset target_val;       // D_val, n_val per class
  Dataset target_unlabeled; // D_u, labels absent
  Dataset unlabeled_eval;   // same rows as target_unlabeled, labels present
  int num_classes = 0;
  int shots = 0;
  int n_val_per_class = 0;

  void validate() const {
    auto ids_of = [](const Dataset& d) {
      std::set<std::int64_t> s;
      for (std::size_t i = 0; i < d.size(); ++i) s.insert(d.id(i));
      return s;
    };
    auto tl = ids_of(target_labeled);
    auto tv = ids_of(target_val);
    auto tu = ids_of(target_unlabeled);
    auto disjoint = [](const std::set<std::int64_t>& a,
                       const std::set<std::int64_t>& b) {
      for (auto x : a)
        if (b.count(x)) return false;
      return true;
    };
    if (!disjoint(tl, tu) || !disjoint(tl, tv) || !disjoint(tu, tv))
      throw ValidationError("SSDASplit: target pools must be disjoint by id");
    std::map<int, int> per_class;
    for (std::size_t i = 0; i < target_labeled.size(); ++i)
      ++per_class[target_labeled.eval_label(i)];
    for (const auto& [k, n] : per_class)
      if (n != shots)
        throw ValidationError("SSDASplit: class " + std::to_string(k) +
                              " has " + std::to_string(n) +
                              " labeled target examples, expected " +
                              std::to_string(shots));
    if (shots > 0 && static_cast<int>(per_class.size()) != num_classes)
      throw ValidationError("SSDASplit: not every class has labeled targets");
  }
};

/// Draws the n-shot SSDA split: exactly k labeled target examples and
/// n_val_per_class validation examples per class; the rest of the target
/// pool becomes unlabeled data. Seed-deterministic.
inline SSDASplit sample_nshot_split(const Dataset& source,
                                    const Dataset& target, int k,
                                    int n_val_per_class, RngStream& rng) {
  if (k < 0) throw ValidationError("sample_nshot_split: k must be >= 0");
  if (n_val_per_class < 0)
    throw ValidationError("sample_nshot_split: n_val_per_class must be >= 0");
  const int K = target.num_classes();
  if (K < 1) throw DataError("sample_nshot_split: target has no classes");

  std::vector<std::size_t> labeled_rows, val_rows, unlabeled_rows;
  for (int cls = 0; cls < K; ++cls) {
    std::vector<std::size_t> rows = target.rows_of_class(cls);
    if (static_cast<int>(rows.size()) < k + n_val_per_class)
      throw DataError("sample_nshot_split: class " + std::to_string(cls) +
                      " has only " + std::to_string(rows.size()) +
                      " target examples, need " +
                      std::to_string(k + n_val_per_class));
    rng.shuffle(rows);
    for (int i = 0; i < k; ++i) labeled_rows.push_back(rows[i]);
    for (int i = k; i < k + n_val_per_class; ++i) val_rows.push_back(rows[i]);
    for (std::size_t i = k + n_val_per_class; i < rows.size(); ++i)
      unlabeled_rows.push_back(rows[i]);
  }

  SSDASplit split;
  split.source = source;
  split.target_labeled = target.subset(labeled_rows);
  split.target_val = target.subset(val_rows);
  split.target_unlabeled = target.subset(unlabeled_rows, /*strip_labels=*/true);
  split.unlabeled_eval = target.subset(unlabeled_rows);
  split.num_classes = K;
  split.shots = k;
  split.n_val_per_class = n_val_per_class;
  split.validate();
  return split;
}

/// JSON manifest of a split: the id lists per pool, enough to reconstruct
/// the split exactly from the same source/target datasets.
inline nlohmann::json split_manifest(const SSDASplit& split) {
  auto ids_of = [](const Dataset& d) {
    std::vector<std::int64_t> ids;
    for (std::size_t i = 0; i < d.size(); ++i) ids.push_back(d.id(i));
    return ids;
  };
  return nlohmann::json{{"format", "paclab-split-v1"},
                        {"num_classes", split.num_classes},
                        {"shots", split.shots},
                        {"n_val_per_class", split.n_val_per_class},
                        {"target_labeled_ids", ids_of(split.target_labeled)},
                        {"target_val_ids", ids_of(split.target_val)},
                        {"target_unlabeled_ids", ids_of(split.target_unlabeled)}};
}

inline void save_split_manifest(const SSDASplit& split,
                                const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write split manifest: " + path);
  out << split_manifest(split).dump(2) << "\n";
}

inline SSDASplit load_split_from_manifest(const Dataset& source,
                                          const Dataset& target,
                                          const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split manifest: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "paclab-split-v1")
    throw ConfigError("not a split manifest: " + path);

  std::map<std::int64_t, std::size_t> row_of_id;
  for (std::size_t i = 0; i < target.size(); ++i) row_of_id[target.id(i)] = i;
  auto rows_for = [&](const char* key) {
    std::vector<std::size_t> rows;
    for (std::int64_t id : j.at(key).get<std::vector<std::int64_t>>()) {
      auto it = row_of_id.find(id);
      if (it == row_of_id.end())
        throw DataError("split manifest id " + std::to_string(id) +
                        " not present in target dataset");
      rows.push_back(it->second);
    }
    return rows;
  };

  SSDASplit split;
  split.source = source;
  split.target_labeled = target.subset(rows_for("target_labeled_ids"));
  split.target_val = target.subset(rows_for("target_val_ids"));
  auto urows = rows_for("target_unlabeled_ids");
  split.target_unlabeled = target.subset(urows, /*strip_labels=*/true);
  split.unlabeled_eval = target.subset(urows);
  split.num_classes = j.at("num_classes").get<int>();
  split.shots = j.at("shots").get<int>();
  split.n_val_per_class = j.at("n_val_per_class").get<int>();
  split.validate();
  return split;
}

}  // namespace paclab
