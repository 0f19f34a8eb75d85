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

#include <memory>
#include <vector>

#include <json.hpp>

#include "paclab/core/errors.hpp"
#include "paclab/model/layers.hpp"

namespace paclab {

/// The temperature-softmax classifier C: logits = affine(features) / T.
/// 1 affine layer by default; the 2-layer variant inserts a 512-unit hidden
/// layer with ReLU.
struct ClassifierSpec {
  int feature_dim = 128;
  int num_classes = 8;
  int layers = 1;  // 1 or 2
  int hidden = 512;
  double temperature = 0.05;

  void validate() const {
    if (num_classes < 2)
      throw ValidationError("ClassifierSpec: num_classes must be >= 2");
    if (layers != 1 && layers != 2)
      throw ValidationError("ClassifierSpec: layers must be 1 or 2");
    if (!(temperature > 0.0))
      throw ValidationError("ClassifierSpec: temperature must be > 0");
    if (hidden < 1) throw ValidationError("ClassifierSpec: hidden must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const ClassifierSpec& s) {
  j = nlohmann::json{{"feature_dim", s.feature_dim},
                     {"num_classes", s.num_classes},
                     {"layers", s.layers},
                     {"hidden", s.hidden},
                     {"temperature", s.temperature}};
}

inline void from_json(const nlohmann::json& j, ClassifierSpec& s) {
  j.at("feature_dim").get_to(s.feature_dim);
  j.at("num_classes").get_to(s.num_classes);
  j.at("layers").get_to(s.layers);
  j.at("hidden").get_to(s.hidden);
  j.at("temperature").get_to(s.temperature);
}

class ClassifierHead {
 public:
  explicit ClassifierHead(const ClassifierSpec& spec = ClassifierSpec{})
      : spec_(spec) {
    spec.validate();
    if (spec.layers == 2) {
      l1_ = std::make_unique<Linear>(spec.feature_dim, spec.hidden);
      l2_ = std::make_unique<Linear>(spec.hidden, spec.num_classes);
    } else {
      l1_ = std::make_unique<Linear>(spec.feature_dim, spec.num_classes);
    }
  }

  ClassifierHead(const ClassifierHead& o) : spec_(o.spec_), relu_(o.relu_) {
    l1_ = std::make_unique<Linear>(*o.l1_);
    if (o.l2_) l2_ = std::make_unique<Linear>(*o.l2_);
  }
  ClassifierHead& operator=(const ClassifierHead& o) {
    spec_ = o.spec_;
    relu_ = o.relu_;
    l1_ = std::make_unique<Linear>(*o.l1_);
    l2_ = o.l2_ ? std::make_unique<Linear>(*o.l2_) : nullptr;
    return *this;
  }

  const ClassifierSpec& spec() const { return spec_; }
  int num_classes() const { return spec_.num_classes; }

  void init(RngStream& rng) {
    l1_->init(rng);
    if (l2_) l2_->init(rng);
  }

  /// features -> temperature-scaled logits.
  void forward(const MatRM& features, MatRM& logits) {
    if (features.cols() != spec_.feature_dim)
      throw ShapeError("ClassifierHead: feature dim mismatch");
    MatRM affine;
    if (l2_) {
      MatRM h1, h1r;
      l1_->forward(features, h1);
      relu_.forward(h1, h1r);
      l2_->forward(h1r, affine);
    } else {
      l1_->forward(features, affine);
    }
    logits = affine / static_cast<float>(spec_.temperature);
  }

  void backward(const MatRM& dlogits, MatRM* dfeatures) {
    MatRM daffine = dlogits / static_cast<float>(spec_.temperature);
    if (l2_) {
      MatRM dh1r, dh1;
      l2_->backward(daffine, &dh1r);
      relu_.backward(dh1r, &dh1);
      l1_->backward(dh1, dfeatures);
    } else {
      l1_->backward(daffine, dfeatures);
    }
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (Param* p : l1_->params()) out.push_back(p);
    if (l2_)
      for (Param* p : l2_->params()) out.push_back(p);
    return out;
  }

 private:
  ClassifierSpec spec_;
  std::unique_ptr<Linear> l1_, l2_;
  ReluRows relu_;
};

/// Classifier scores for a feature batch (spec'd contract form).
inline MatRM class_scores(ClassifierHead& head, const MatRM& features) {
  MatRM logits;
  head.forward(features, logits);
  return logits;
}

/// 4-way rotation prediction head: one affine map, no temperature.
class RotationHead {
 public:
  explicit RotationHead(int feature_dim = 128) : lin_(feature_dim, 4) {}

  void init(RngStream& rng) { lin_.init(rng); }

  void forward(const MatRM& features, MatRM& logits) {
    lin_.forward(features, logits);
  }
  void backward(const MatRM& dlogits, MatRM* dfeatures) {
    lin_.backward(dlogits, dfeatures);
  }
  std::vector<Param*> params() { return lin_.params(); }

 private:
  Linear lin_;
};

}  // namespace paclab
