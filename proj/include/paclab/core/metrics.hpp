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

namespace paclab {

/// One evaluation point of a training run.
struct MetricsRecord {
  std::int64_t step = 0;
  double loss_source = 0.0;
  double loss_target_labeled = 0.0;
  double loss_consistency = 0.0;
  double frac_above_threshold = 0.0;
  double val_accuracy = 0.0;
  double target_accuracy = 0.0;

  void validate() const {
    if (loss_source < 0.0 || loss_target_labeled < 0.0 ||
        loss_consistency < 0.0)
      throw ValidationError("MetricsRecord: losses must be >= 0");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(frac_above_threshold) || !in01(val_accuracy) ||
        !in01(target_accuracy))
      throw ValidationError("MetricsRecord: fractions must lie in [0, 1]");
  }

  bool operator==(const MetricsRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const MetricsRecord& r) {
  j = nlohmann::json{{"step", r.step},
                     {"loss_source", r.loss_source},
                     {"loss_target_labeled", r.loss_target_labeled},
                     {"loss_consistency", r.loss_consistency},
                     {"frac_above_threshold", r.frac_above_threshold},
                     {"val_accuracy", r.val_accuracy},
                     {"target_accuracy", r.target_accuracy}};
}

inline void from_json(const nlohmann::json& j, MetricsRecord& r) {
  j.at("step").get_to(r.step);
  j.at("loss_source").get_to(r.loss_source);
  j.at("loss_target_labeled").get_to(r.loss_target_labeled);
  j.at("loss_consistency").get_to(r.loss_consistency);
  j.at("frac_above_threshold").get_to(r.frac_above_threshold);
  j.at("val_accuracy").get_to(r.val_accuracy);
  j.at("target_accuracy").get_to(r.target_accuracy);
}

inline constexpr const char* kMetricsCsvHeader =
    "step,loss_source,loss_target_labeled,loss_consistency,"
    "frac_above_threshold,val_accuracy,target_accuracy";

/// Appends records to a JSON-lines file plus a CSV mirror with a fixed
/// header. JSON serialization is lossless for doubles (shortest round-trip
/// representation), so write -> read -> identical record.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& jsonl_path, const std::string& csv_path)
      : jsonl_(jsonl_path, std::ios::trunc), csv_(csv_path, std::ios::trunc) {
    if (!jsonl_) throw IoError("cannot open metrics file: " + jsonl_path);
    if (!csv_) throw IoError("cannot open metrics file: " + csv_path);
    csv_ << kMetricsCsvHeader << "\n";
  }

  void append(const MetricsRecord& r) {
    nlohmann::json j = r;
    jsonl_ << j.dump() << "\n";
    jsonl_.flush();
    csv_ << r.step << ',' << fmt(r.loss_source) << ','
         << fmt(r.loss_target_labeled) << ',' << fmt(r.loss_consistency) << ','
         << fmt(r.frac_above_threshold) << ',' << fmt(r.val_accuracy) << ','
         << fmt(r.target_accuracy) << "\n";
    csv_.flush();
  }

 private:
  static std::string fmt(double v) {
    nlohmann::json j = v;  // shortest lossless decimal form
    return j.dump();
  }

  std::ofstream jsonl_;
  std::ofstream csv_;
};

inline std::vector<MetricsRecord> read_metrics_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file: " + path);
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line).get<MetricsRecord>());
  }
  return out;
}

}  // namespace paclab
