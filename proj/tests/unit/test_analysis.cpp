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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "paclab/analysis/analysis.hpp"
#include "paclab/analysis/embedding.hpp"
#include "paclab/analysis/feature_dump.hpp"
#include "paclab/data/synthetic.hpp"

using namespace paclab;

namespace {

MatRM random_unit_rows(int n, int d, RngStream& rng) {
  MatRM m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<float>(rng.normal());
  for (int i = 0; i < n; ++i) m.row(i) /= m.row(i).norm();
  return m;
}

/// Independent oracle for the mean-distance classifier: plain double loops,
/// no shared code with the implementation.
int oracle_mean_distance_predict(const MatRM& queries, int qi,
                                 const MatRM& refs,
                                 const std::vector<int>& ref_labels, int K) {
  double best = 0.0;
  int arg = -1;
  for (int cls = 0; cls < K; ++cls) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < refs.rows(); ++r) {
      if (ref_labels[static_cast<std::size_t>(r)] != cls) continue;
      double sq = 0.0;
      for (Eigen::Index j = 0; j < refs.cols(); ++j) {
        double diff = refs(r, j) - queries(qi, j);
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
      ++count;
    }
    double mean = sum / count;
    if (arg < 0 || mean < best) {
      best = mean;
      arg = cls;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("a-distance endpoints", "[analysis][adistance]") {
  RngStream rng(4, Stream::kAnalysis);

  SECTION("identical feature multisets are indistinguishable") {
    MatRM feats = random_unit_rows(120, 16, rng);
    RngStream arng(0, Stream::kAnalysis);
    auto [d_a, eps] = a_distance(feats, feats, arng);
    INFO("eps " << eps);
    CHECK(d_a < 0.2);
  }

  SECTION("an injected indicator coordinate separates the domains") {
    MatRM a = random_unit_rows(100, 16, rng);
    MatRM b = random_unit_rows(100, 16, rng);
    MatRM a2(100, 17), b2(100, 17);
    a2.leftCols(16) = a;
    b2.leftCols(16) = b;
    a2.col(16).setZero();
    b2.col(16).setConstant(1.0f);  // constant domain indicator
    RngStream arng(0, Stream::kAnalysis);
    auto [d_a, eps] = a_distance(a2, b2, arng);
    INFO("eps " << eps);
    CHECK(d_a > 1.8);
    CHECK(eps < 0.05);
  }

  SECTION("the formula endpoints") {
    // eps = 0 -> 2, eps = 0.5 -> 0 (clipped).
    CHECK(std::clamp(2.0 * (1.0 - 2.0 * 0.0), 0.0, 2.0) == 2.0);
    CHECK(std::clamp(2.0 * (1.0 - 2.0 * 0.5), 0.0, 2.0) == 0.0);
  }

  SECTION("too few features is an error") {
    MatRM tiny = random_unit_rows(10, 8, rng);
    RngStream arng(0, Stream::kAnalysis);
    CHECK_THROWS_AS(a_distance(tiny, tiny, arng), DataError);
  }
}

TEST_CASE("mean-distance classifiers", "[analysis][distacc]") {
  RngStream rng(9, Stream::kAnalysis);

  SECTION("queries sitting exactly on their class prototype score 1.0") {
    MatRM refs = random_unit_rows(4, 8, rng);  // one per class
    std::vector<int> ref_labels = {0, 1, 2, 3};
    MatRM queries(8, 8);
    std::vector<int> truth;
    for (int i = 0; i < 8; ++i) {
      queries.row(i) = refs.row(i % 4);
      truth.push_back(i % 4);
    }
    CHECK(dist_acc_target(queries, truth, refs, ref_labels, 4) == 1.0);
  }

  SECTION("cyclically shifted reference labels score 0.0 on that geometry") {
    MatRM refs = random_unit_rows(4, 8, rng);
    std::vector<int> shifted = {1, 2, 3, 0};
    MatRM queries(8, 8);
    std::vector<int> truth;
    for (int i = 0; i < 8; ++i) {
      queries.row(i) = refs.row(i % 4);
      truth.push_back(i % 4);
    }
    CHECK(dist_acc_target(queries, truth, refs, shifted, 4) == 0.0);
  }

  SECTION("single reference class predicts that class everywhere") {
    MatRM refs = random_unit_rows(5, 8, rng);
    std::vector<int> ref_labels(5, 0);
    MatRM queries = random_unit_rows(40, 8, rng);
    std::vector<int> truth;
    int zeros = 0;
    RngStream lr(3, Stream::kAnalysis);
    for (int i = 0; i < 40; ++i) {
      int t = static_cast<int>(lr.uniform_index(4));
      truth.push_back(t);
      if (t == 0) ++zeros;
    }
    double acc = dist_acc(queries, truth, refs, ref_labels, 1);
    CHECK_THAT(acc, Catch::Matchers::WithinAbs(zeros / 40.0, 1e-12));
  }

  SECTION("identical reference geometry makes target and source agree") {
    MatRM refs = random_unit_rows(12, 8, rng);
    std::vector<int> ref_labels;
    for (int i = 0; i < 12; ++i) ref_labels.push_back(i % 3);
    MatRM queries = random_unit_rows(30, 8, rng);
    std::vector<int> truth;
    for (int i = 0; i < 30; ++i) truth.push_back(i % 3);
    CHECK(dist_acc_target(queries, truth, refs, ref_labels, 3) ==
          dist_acc_source(queries, truth, refs, ref_labels, 3));
  }

  SECTION("class with zero reference features is an error") {
    MatRM refs = random_unit_rows(4, 8, rng);
    std::vector<int> ref_labels = {0, 0, 1, 1};  // class 2 missing
    MatRM queries = random_unit_rows(4, 8, rng);
    std::vector<int> truth = {0, 1, 2, 0};
    CHECK_THROWS_AS(dist_acc_target(queries, truth, refs, ref_labels, 3),
                    DataError);
  }
}

TEST_CASE("mean-distance classifier equals the brute-force oracle",
          "[analysis][distacc][property]") {
  RngStream rng(13, Stream::kAnalysis);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 2 + static_cast<int>(rng.uniform_index(4));
    const int n_ref = K + static_cast<int>(rng.uniform_index(30));
    const int n_query = 1 + static_cast<int>(rng.uniform_index(30));
    const int d = 2 + static_cast<int>(rng.uniform_index(12));

    MatRM refs = random_unit_rows(n_ref, d, rng);
    std::vector<int> ref_labels;
    for (int i = 0; i < n_ref; ++i)
      ref_labels.push_back(i < K ? i : static_cast<int>(rng.uniform_index(K)));
    MatRM queries = random_unit_rows(n_query, d, rng);
    std::vector<int> truth;
    for (int i = 0; i < n_query; ++i)
      truth.push_back(static_cast<int>(rng.uniform_index(K)));

    int agree = 0;
    for (int i = 0; i < n_query; ++i) {
      int oracle =
          oracle_mean_distance_predict(queries, i, refs, ref_labels, K);
      if (oracle == truth[i]) ++agree;
    }
    double expect = static_cast<double>(agree) / n_query;
    REQUIRE(dist_acc(queries, truth, refs, ref_labels, K) == expect);
  }
}

TEST_CASE("feature dump round trip", "[analysis][dump]") {
  SyntheticDomainSpec spec;
  spec.num_classes = 3;
  spec.n_per_class_per_domain = 8;
  spec.image_size = 16;
  spec.seed = 21;
  auto [src, tgt] = make_synthetic_domain_pair(spec);

  Backbone bb(BackboneSpec{16, 3, {4}, 6});
  RngStream init(2, Stream::kInit);
  bb.init(init);

  FeatureDump dump;
  dump.checkpoint_hash = "cafe";
  dump.dataset_id = "synthetic-test";
  dump.append(bb, src, false, true);
  dump.append(bb, tgt, true, true);
  REQUIRE(dump.size() == src.size() + tgt.size());

  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "paclab_dump_test.bin").string();
  save_feature_dump(dump, path);
  FeatureDump back = load_feature_dump(path);
  CHECK(back.dim == dump.dim);
  CHECK(back.features == dump.features);
  CHECK(back.labels == dump.labels);
  CHECK(back.domains == dump.domains);
  CHECK(back.ids == dump.ids);
  CHECK(back.checkpoint_hash == "cafe");
  fs::remove(path);
}

TEST_CASE("embedding export", "[analysis][embedding]") {
  RngStream rng(31, Stream::kAnalysis);
  FeatureDump dump;
  dump.dim = 8;
  const int per_class = 30;
  const int K = 4;
  dump.features.resize(K * per_class, 8);
  for (int cls = 0; cls < K; ++cls) {
    MatRM center = random_unit_rows(1, 8, rng);
    for (int i = 0; i < per_class; ++i) {
      Eigen::Index row = cls * per_class + i;
      for (int j = 0; j < 8; ++j)
        dump.features(row, j) =
            center(0, j) + 0.05f * static_cast<float>(rng.normal());
      dump.labels.push_back(cls);
      dump.domains.push_back(i % 2);
      dump.ids.push_back(row);
      dump.is_labeled_target.push_back(i % 7 == 0 ? 1 : 0);
    }
  }

  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "paclab_embed_test.csv").string();

  SECTION("row count equals the filtered input rows") {
    std::size_t n = export_embedding(dump, {0, 1, 2}, path);
    CHECK(n == 3 * per_class);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,y,label,domain,is_labeled_target");
    std::size_t rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == n);
  }

  SECTION("deterministic output bytes") {
    export_embedding(dump, {0, 1}, path);
    std::ifstream f1(path);
    std::stringstream s1;
    s1 << f1.rdbuf();
    export_embedding(dump, {0, 1}, path);
    std::ifstream f2(path);
    std::stringstream s2;
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
  }

  SECTION("class subset picking defaults to five and is seeded") {
    RngStream pick1(5, Stream::kAnalysis);
    RngStream pick2(5, Stream::kAnalysis);
    auto c1 = pick_embedding_classes(dump, 5, pick1);
    auto c2 = pick_embedding_classes(dump, 5, pick2);
    CHECK(c1 == c2);
    CHECK(c1.size() == 4);  // only 4 classes exist here
    auto c3 = pick_embedding_classes(dump, 2, pick1);
    CHECK(c3.size() == 2);
  }

  SECTION("unknown class in the subset is an error") {
    CHECK_THROWS_AS(export_embedding(dump, {0, 9}, path), ValidationError);
  }

  SECTION("fewer than two classes is an error") {
    CHECK_THROWS_AS(export_embedding(dump, {0}, path), ValidationError);
  }

  fs::remove(path);
}
