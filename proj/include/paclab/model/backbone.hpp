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
#include <string>
#include <vector>

#include <json.hpp>

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/dataset.hpp"
#include "paclab/model/layers.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

/// Architecture of the configurable small convolutional feature extractor:
/// conv-norm-relu-pool blocks followed by a projection to feature_dim and a
/// unit-norm constraint on the output rows.
struct BackboneSpec {
  int input_size = 32;
  int in_channels = 3;
  std::vector<int> channels = {32, 64, 128};
  int feature_dim = 128;

  void validate() const {
    if (channels.empty()) throw ValidationError("BackboneSpec: no conv blocks");
    if (feature_dim < 1)
      throw ValidationError("BackboneSpec: feature_dim must be >= 1");
    int sz = input_size;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (sz % 2 != 0)
        throw ValidationError(
            "BackboneSpec: input_size must be divisible by 2^blocks");
      sz /= 2;
    }
    if (sz < 1) throw ValidationError("BackboneSpec: too many blocks");
  }

  int final_spatial() const {
    int sz = input_size;
    for (std::size_t i = 0; i < channels.size(); ++i) sz /= 2;
    return sz;
  }

  int flat_dim() const {
    return channels.back() * final_spatial() * final_spatial();
  }
};

inline void to_json(nlohmann::json& j, const BackboneSpec& s) {
  j = nlohmann::json{{"input_size", s.input_size},
                     {"in_channels", s.in_channels},
                     {"channels", s.channels},
                     {"feature_dim", s.feature_dim}};
}

inline void from_json(const nlohmann::json& j, BackboneSpec& s) {
  j.at("input_size").get_to(s.input_size);
  j.at("in_channels").get_to(s.in_channels);
  j.at("channels").get_to(s.channels);
  j.at("feature_dim").get_to(s.feature_dim);
}

/// The feature extractor F. Output rows are L2-normalized (guarded at 1e-12).
class Backbone {
 public:
  explicit Backbone(const BackboneSpec& spec = BackboneSpec{}) : spec_(spec) {
    spec.validate();
    int in_c = spec.in_channels;
    for (int out_c : spec.channels) {
      blocks_.push_back(Block{Conv3x3(in_c, out_c), InstanceNorm(out_c),
                              ReluLayer{}, MaxPool2{}});
      in_c = out_c;
    }
    proj_ = std::make_unique<Linear>(spec.flat_dim(), spec.feature_dim);
  }

  Backbone(const Backbone& o) : spec_(o.spec_), blocks_(o.blocks_) {
    proj_ = std::make_unique<Linear>(*o.proj_);
    l2_ = o.l2_;
  }
  Backbone& operator=(const Backbone& o) {
    spec_ = o.spec_;
    blocks_ = o.blocks_;
    proj_ = std::make_unique<Linear>(*o.proj_);
    l2_ = o.l2_;
    return *this;
  }

  const BackboneSpec& spec() const { return spec_; }
  int feature_dim() const { return spec_.feature_dim; }

  void init(RngStream& rng) {
    for (auto& b : blocks_) {
      b.conv.init(rng);
      b.norm.init(rng);
    }
    proj_->init(rng);
  }

  /// images -> unit-norm features, one row per image.
  void forward(const Batch4& images, MatRM& features) {
    if (images.c != spec_.in_channels || images.h != spec_.input_size ||
        images.w != spec_.input_size)
      throw ShapeError("Backbone: input batch shape mismatch");
    const Batch4* cur = &images;
    for (auto& b : blocks_) {
      b.conv.forward(*cur, b.conv_out);
      b.norm.forward(b.conv_out, b.norm_out);
      b.relu.forward(b.norm_out, b.relu_out);
      b.pool.forward(b.relu_out, b.pool_out);
      cur = &b.pool_out;
    }
    flat_rows_ = cur->n;
    Eigen::Map<const MatRM> flat(cur->v.data(), cur->n,
                                 static_cast<Eigen::Index>(cur->per_image()));
    proj_->forward(MatRM(flat), pre_norm_);
    l2_.forward(pre_norm_, features);
  }

  /// Accumulates parameter gradients; optionally returns input gradients.
  void backward(const MatRM& dfeatures, Batch4* dimages = nullptr) {
    MatRM dpre, dflat;
    l2_.backward(dfeatures, &dpre);
    proj_->backward(dpre, &dflat);

    Batch4 grad;
    Batch4& last = blocks_.back().pool_out;
    grad.resize(last.n, last.c, last.h, last.w);
    std::copy(dflat.data(), dflat.data() + dflat.size(), grad.v.begin());

    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
      Block& b = blocks_[bi];
      Batch4 d_relu, d_norm, d_conv;
      b.pool.backward(grad, &d_relu);
      b.relu.backward(d_relu, &d_norm);
      b.norm.backward(d_norm, &d_conv);
      const bool need_dx = bi > 0 || dimages != nullptr;
      if (bi > 0) {
        b.conv.backward(d_conv, &grad);
      } else {
        b.conv.backward(d_conv, need_dx ? dimages : nullptr);
      }
    }
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (auto& b : blocks_) {
      for (Param* p : b.conv.params()) out.push_back(p);
      for (Param* p : b.norm.params()) out.push_back(p);
    }
    for (Param* p : proj_->params()) out.push_back(p);
    return out;
  }

 private:
  struct Block {
    Conv3x3 conv;
    InstanceNorm norm;
    ReluLayer relu;
    MaxPool2 pool;
    Batch4 conv_out, norm_out, relu_out, pool_out;
  };

  BackboneSpec spec_;
  std::vector<Block> blocks_;
  std::unique_ptr<Linear> proj_;
  L2NormalizeRows l2_;
  MatRM pre_norm_;
  int flat_rows_ = 0;
};

/// Batched feature extraction over a dataset (inference only, chunked).
inline MatRM extract_features(Backbone& backbone, const Dataset& ds,
                              int chunk = 64) {
  if (ds.empty()) throw DataError("extract_features: empty dataset");
  MatRM all(ds.size(), backbone.feature_dim());
  std::size_t done = 0;
  while (done < ds.size()) {
    std::size_t take = std::min<std::size_t>(chunk, ds.size() - done);
    std::vector<const Image*> imgs;
    for (std::size_t i = 0; i < take; ++i)
      imgs.push_back(&ds.pixels(done + i));
    Batch4 batch = pack_batch(imgs);
    MatRM feats;
    backbone.forward(batch, feats);
    all.middleRows(static_cast<Eigen::Index>(done), feats.rows()) = feats;
    done += take;
  }
  return all;
}

/// Feature extraction for an explicit image list.
inline MatRM extract_features(Backbone& backbone,
                              const std::vector<const Image*>& images) {
  Batch4 batch = pack_batch(images);
  MatRM feats;
  backbone.forward(batch, feats);
  return feats;
}

}  // namespace paclab
