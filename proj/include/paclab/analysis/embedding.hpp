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
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "paclab/analysis/feature_dump.hpp"
#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"

namespace paclab {

/// Picks `count` distinct classes present in the dump, seed-deterministic.
inline std::vector<int> pick_embedding_classes(const FeatureDump& dump,
                                               int count, RngStream& rng) {
  std::set<int> present;
  for (int l : dump.labels)
    if (l >= 0) present.insert(l);
  std::vector<int> classes(present.begin(), present.end());
  if (static_cast<int>(classes.size()) > count) {
    rng.shuffle(classes);
    classes.resize(count);
    std::sort(classes.begin(), classes.end());
  }
  return classes;
}

/// Filters the dump to the selected classes and computes a 2-D spectral
/// neighbor embedding (Laplacian eigenmap of the symmetrized kNN graph),
/// then writes CSV rows (x, y, label, domain, is_labeled_target). The
/// embedding serves plotting only; any standard 2-D embedder would do.
/// Deterministic given the dump and the class subset.
inline std::size_t export_embedding(const FeatureDump& dump,
                                    const std::vector<int>& classes,
                                    const std::string& out_path,
                                    int knn = 10, std::size_t max_points = 2500) {
  if (classes.size() < 2)
    throw ValidationError("export_embedding: need >= 2 classes");
  std::set<int> present;
  for (int l : dump.labels)
    if (l >= 0) present.insert(l);
  std::set<int> wanted;
  for (int c : classes) {
    if (!present.count(c))
      throw ValidationError("export_embedding: class " + std::to_string(c) +
                            " not present in the dump");
    wanted.insert(c);
  }

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dump.size(); ++i)
    if (dump.labels[i] >= 0 && wanted.count(dump.labels[i]))
      rows.push_back(i);
  if (rows.size() > max_points) rows.resize(max_points);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (n < 3) throw DataError("export_embedding: too few points");

  MatT<double> X(n, dump.dim);
  for (Eigen::Index i = 0; i < n; ++i)
    X.row(i) = dump.features.row(static_cast<Eigen::Index>(rows[i]))
                   .cast<double>();

  // Symmetrized kNN adjacency.
  Eigen::MatrixXd D2 = (-2.0 * X * X.transpose());
  Eigen::VectorXd sq = X.rowwise().squaredNorm();
  D2.colwise() += sq;
  D2.rowwise() += sq.transpose();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  const int k = std::min<int>(knn, static_cast<int>(n) - 1);
  std::vector<std::pair<double, Eigen::Index>> cand(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cand[j] = {D2(i, j), j};
    cand[i].first = 1e300;  // no self edge
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int m = 0; m < k; ++m) {
      W(i, cand[m].second) = 1.0;
      W(cand[m].second, i) = 1.0;
    }
  }

  // Unnormalized graph Laplacian; the two eigenvectors above the constant
  // one give the plane.
  Eigen::VectorXd deg = W.rowwise().sum();
  Eigen::MatrixXd L = -W;
  L.diagonal() += deg;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success)
    throw Error("export_embedding: eigensolver failed");
  Eigen::VectorXd e1 = es.eigenvectors().col(1);
  Eigen::VectorXd e2 = es.eigenvectors().col(2);

  auto rescale = [](Eigen::VectorXd& v) {
    const double lo = v.minCoeff(), hi = v.maxCoeff();
    if (hi > lo) v = (v.array() - lo) / (hi - lo);
  };
  rescale(e1);
  rescale(e2);

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write embedding: " + out_path);
  out << "x,y,label,domain,is_labeled_target\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    out << e1[i] << ',' << e2[i] << ',' << dump.labels[r] << ','
        << (dump.domains[r] == 0 ? "source" : "target") << ','
        << (dump.is_labeled_target[r] ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("embedding write failed: " + out_path);
  return static_cast<std::size_t>(n);
}

}  // namespace paclab
