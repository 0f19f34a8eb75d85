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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paclab/core/errors.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

enum class Domain { kSource, kTarget };

inline const char* domain_name(Domain d) {
  return d == Domain::kSource ? "source" : "target";
}

/// An immutable-after-construction pool of examples. Labels are optional per
/// example and every read through label() is counted, which lets tests assert
/// that label-free code paths (pretraining, unlabeled-pool training) never
/// touch them. Evaluation reads labels through eval_label(), a separate
/// accessor that is not counted against that contract.
class Dataset {
 public:
  Dataset() : label_reads_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  void add(Image pixels, std::optional<int> label, Domain domain,
           std::int64_t id) {
    pixels_.push_back(std::move(pixels));
    labels_.push_back(label.value_or(-1));
    has_label_.push_back(label.has_value());
    domains_.push_back(domain);
    ids_.push_back(id);
  }

  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  const Image& pixels(std::size_t i) const { return pixels_[i]; }
  bool has_label(std::size_t i) const { return has_label_[i]; }
  Domain domain(std::size_t i) const { return domains_[i]; }
  std::int64_t id(std::size_t i) const { return ids_[i]; }

  /// Counted label access: the training/pretraining contract accessor.
  int label(std::size_t i) const {
    label_reads_->fetch_add(1, std::memory_order_relaxed);
    if (!has_label_[i])
      throw DataError("label requested for unlabeled example id=" +
                      std::to_string(ids_[i]));
    return labels_[i];
  }

  /// Uncounted label access for evaluation/reporting paths.
  int eval_label(std::size_t i) const {
    if (!has_label_[i])
      throw DataError("eval label requested for unlabeled example id=" +
                      std::to_string(ids_[i]));
    return labels_[i];
  }

  std::uint64_t label_reads() const {
    return label_reads_->load(std::memory_order_relaxed);
  }

  int num_classes() const { return num_classes_; }
  void set_num_classes(int k) { num_classes_ = k; }

  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names) {
    class_names_ = std::move(names);
  }

  /// Copy of selected rows; labels dropped when strip_labels is set.
  Dataset subset(const std::vector<std::size_t>& rows,
                 bool strip_labels = false) const {
    Dataset out;
    out.num_classes_ = num_classes_;
    out.class_names_ = class_names_;
    for (std::size_t r : rows) {
      std::optional<int> lab;
      if (!strip_labels && has_label_[r]) lab = labels_[r];
      out.add(pixels_[r], lab, domains_[r], ids_[r]);
    }
    return out;
  }

  std::vector<std::size_t> rows_of_class(int k) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i)
      if (has_label_[i] && labels_[i] == k) rows.push_back(i);
    return rows;
  }

 private:
  std::vector<Image> pixels_;
  std::vector<int> labels_;
  std::vector<char> has_label_;
  std::vector<Domain> domains_;
  std::vector<std::int64_t> ids_;
  int num_classes_ = 0;
  std::vector<std::string> class_names_;
  std::shared_ptr<std::atomic<std::uint64_t>> label_reads_;
};

}  // namespace paclab
