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

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paclab/core/errors.hpp"
#include "paclab/data/dataset.hpp"
#include "paclab/model/backbone.hpp"

namespace paclab {

inline constexpr const char* kFeatureDumpMagic = "PACLABFD1\n";

/// Feature rows with their metadata: binary container with a JSON header
/// (dim, count, provenance and the per-row metadata arrays) followed by a
/// flat float32 payload of count * dim features.
struct FeatureDump {
  int dim = 0;
  MatRM features;            // count x dim, unit-norm rows
  std::vector<int> labels;   // -1 when absent
  std::vector<int> domains;  // 0 source, 1 target
  std::vector<std::int64_t> ids;
  std::vector<char> is_labeled_target;
  std::string checkpoint_hash;
  std::string dataset_id;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }

  void append(Backbone& backbone, const Dataset& ds, bool labeled_target_flag,
              bool with_labels) {
    if (ds.empty()) return;
    MatRM feats = extract_features(backbone, ds);
    const Eigen::Index base = features.rows();
    MatRM merged(base + feats.rows(), feats.cols());
    if (base > 0) merged.topRows(base) = features;
    merged.bottomRows(feats.rows()) = feats;
    features = std::move(merged);
    dim = static_cast<int>(features.cols());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      labels.push_back(with_labels && ds.has_label(i) ? ds.eval_label(i) : -1);
      domains.push_back(ds.domain(i) == Domain::kSource ? 0 : 1);
      ids.push_back(ds.id(i));
      is_labeled_target.push_back(labeled_target_flag ? 1 : 0);
    }
  }
};

inline void save_feature_dump(const FeatureDump& dump,
                              const std::string& path) {
  nlohmann::json header{{"format", "paclab-feature-dump"},
                        {"version", 1},
                        {"dim", dump.dim},
                        {"count", dump.size()},
                        {"labels", dump.labels},
                        {"domains", dump.domains},
                        {"ids", dump.ids},
                        {"is_labeled_target",
                         std::vector<int>(dump.is_labeled_target.begin(),
                                          dump.is_labeled_target.end())},
                        {"checkpoint_hash", dump.checkpoint_hash},
                        {"dataset_id", dump.dataset_id}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write feature dump: " + path);
  const std::string hs = header.dump();
  const std::uint64_t hlen = hs.size();
  out.write(kFeatureDumpMagic, 10);
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  out.write(reinterpret_cast<const char*>(dump.features.data()),
            static_cast<std::streamsize>(dump.size() * dump.dim *
                                         sizeof(float)));
  if (!out) throw IoError("feature dump write failed: " + path);
}

inline FeatureDump load_feature_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature dump: " + path);
  char magic[10];
  in.read(magic, 10);
  if (!in || std::string(magic, 10) != kFeatureDumpMagic)
    throw IoError("not a feature dump: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  nlohmann::json header = nlohmann::json::parse(hs);

  FeatureDump dump;
  dump.dim = header.at("dim").get<int>();
  const std::size_t count = header.at("count").get<std::size_t>();
  header.at("labels").get_to(dump.labels);
  header.at("domains").get_to(dump.domains);
  header.at("ids").get_to(dump.ids);
  std::vector<int> ilt = header.at("is_labeled_target").get<std::vector<int>>();
  dump.is_labeled_target.assign(ilt.begin(), ilt.end());
  dump.checkpoint_hash = header.value("checkpoint_hash", "");
  dump.dataset_id = header.value("dataset_id", "");
  dump.features.resize(count, dump.dim);
  in.read(reinterpret_cast<char*>(dump.features.data()),
          static_cast<std::streamsize>(count * dump.dim * sizeof(float)));
  if (!in) throw IoError("truncated feature dump: " + path);
  return dump;
}

}  // namespace paclab
