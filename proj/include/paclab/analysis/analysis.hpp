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

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "paclab/analysis/svm.hpp"
#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/model/layers.hpp"

namespace paclab {

/// Divergence and label-transfer diagnostics for one feature dump.
struct AnalysisReport {
  double a_distance = 0.0;
  double domain_classifier_error = 0.0;  // reported raw, may exceed 0.5
  double dist_acc_target = 0.0;
  double dist_acc_source = 0.0;
  std::size_t n_features = 0;
};

inline void to_json(nlohmann::json& j, const AnalysisReport& r) {
  j = nlohmann::json{{"a_distance", r.a_distance},
                     {"domain_classifier_error", r.domain_classifier_error},
                     {"dist_acc_target", r.dist_acc_target},
                     {"dist_acc_source", r.dist_acc_source},
                     {"n_features", r.n_features}};
}

/// Proxy A-distance between two feature clouds: a linear max-margin domain
/// classifier is trained on a stratified 50/50 split; with test error eps,
/// the distance is 2 (1 - 2 eps), clipped into [0, 2]. Higher domain
/// classifier error means lower distance.
inline std::pair<double, double> a_distance(const MatRM& source_features,
                                            const MatRM& target_features,
                                            RngStream& rng) {
  if (source_features.rows() < 20 || target_features.rows() < 20)
    throw DataError("a_distance: need at least 20 features per domain");
  if (source_features.cols() != target_features.cols())
    throw ShapeError("a_distance: feature dims differ");

  auto split_half = [&](Eigen::Index n) {
    std::vector<std::size_t> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    return order;
  };
  const auto src_order = split_half(source_features.rows());
  const auto tgt_order = split_half(target_features.rows());
  const std::size_t src_half = src_order.size() / 2;
  const std::size_t tgt_half = tgt_order.size() / 2;

  const Eigen::Index d = source_features.cols();
  const std::size_t n_train = src_half + tgt_half;
  const std::size_t n_test =
      (src_order.size() - src_half) + (tgt_order.size() - tgt_half);
  MatT<double> Xtr(n_train, d), Xte(n_test, d);
  std::vector<int> ytr(n_train), yte(n_test);

  std::size_t r = 0;
  for (std::size_t i = 0; i < src_half; ++i, ++r) {
    Xtr.row(r) = source_features.row(src_order[i]).cast<double>();
    ytr[r] = -1;
  }
  for (std::size_t i = 0; i < tgt_half; ++i, ++r) {
    Xtr.row(r) = target_features.row(tgt_order[i]).cast<double>();
    ytr[r] = +1;
  }
  r = 0;
  for (std::size_t i = src_half; i < src_order.size(); ++i, ++r) {
    Xte.row(r) = source_features.row(src_order[i]).cast<double>();
    yte[r] = -1;
  }
  for (std::size_t i = tgt_half; i < tgt_order.size(); ++i, ++r) {
    Xte.row(r) = target_features.row(tgt_order[i]).cast<double>();
    yte[r] = +1;
  }

  LinearSvm svm;
  svm.fit(Xtr, ytr, LinearSvm::Options{});
  const double eps = svm.error_rate(Xte, yte);
  const double d_a = std::clamp(2.0 * (1.0 - 2.0 * eps), 0.0, 2.0);
  return {d_a, eps};
}

namespace analysisdetail {

/// Mean Euclidean distance from one query row to every row of a class pool,
/// argmin over classes, ties to the smallest class index.
inline int mean_distance_class(
    const MatRM& query, Eigen::Index qi,
    const std::vector<std::vector<Eigen::Index>>& class_rows,
    const MatRM& reference) {
  int best_class = -1;
  double best = 0.0;
  for (int cls = 0; cls < static_cast<int>(class_rows.size()); ++cls) {
    const auto& rows = class_rows[cls];
    double sum = 0.0;
    for (Eigen::Index rr : rows)
      sum += (reference.row(rr) - query.row(qi)).norm();
    const double mean = sum / static_cast<double>(rows.size());
    if (best_class < 0 || mean < best) {
      best = mean;
      best_class = cls;
    }
  }
  return best_class;
}

inline std::vector<std::vector<Eigen::Index>> rows_by_class(
    const std::vector<int>& labels, int num_classes) {
  std::vector<std::vector<Eigen::Index>> rows(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw ValidationError("rows_by_class: label out of range");
    rows[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  for (int cls = 0; cls < num_classes; ++cls)
    if (rows[cls].empty())
      throw DataError("distance classifier: class " + std::to_string(cls) +
                      " has no reference features");
  return rows;
}

}  // namespace analysisdetail

/// Accuracy of the average-distance label-transfer classifier: each query
/// feature takes the label of the reference class closest to it on average
/// (Euclidean, ties to the smallest class index).
inline double dist_acc(const MatRM& query_features,
                       const std::vector<int>& query_labels,
                       const MatRM& reference_features,
                       const std::vector<int>& reference_labels,
                       int num_classes) {
  if (query_features.rows() == 0)
    throw DataError("dist_acc: empty query set");
  auto class_rows =
      analysisdetail::rows_by_class(reference_labels, num_classes);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < query_features.rows(); ++i) {
    int pred = analysisdetail::mean_distance_class(query_features, i,
                                                   class_rows,
                                                   reference_features);
    if (pred == query_labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(query_features.rows());
}

/// Label transfer from the few labeled target examples.
inline double dist_acc_target(const MatRM& unlabeled_features,
                              const std::vector<int>& true_labels,
                              const MatRM& labeled_target_features,
                              const std::vector<int>& labeled_target_labels,
                              int num_classes) {
  return dist_acc(unlabeled_features, true_labels, labeled_target_features,
                  labeled_target_labels, num_classes);
}

/// Label transfer from the fully labeled source pool.
inline double dist_acc_source(const MatRM& unlabeled_features,
                              const std::vector<int>& true_labels,
                              const MatRM& source_features,
                              const std::vector<int>& source_labels,
                              int num_classes) {
  return dist_acc(unlabeled_features, true_labels, source_features,
                  source_labels, num_classes);
}

}  // namespace paclab
