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
#include <cstddef>
#include <vector>

#include "paclab/core/errors.hpp"

namespace paclab {

/// A single image, CHW float32, values in [0, 1].
struct Image {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Image() = default;
  Image(int c_, int h_, int w_, float fill = 0.0f)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

  std::size_t size() const { return v.size(); }

  float& at(int ch, int y, int x) {
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  float at(int ch, int y, int x) const {
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }

  bool same_shape(const Image& o) const {
    return c == o.c && h == o.h && w == o.w;
  }

  void clip01() {
    for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
  }

  /// Mean value of one channel.
  float channel_mean(int ch) const {
    double s = 0.0;
    const float* p = v.data() + static_cast<std::size_t>(ch) * h * w;
    for (int i = 0; i < h * w; ++i) s += p[i];
    return static_cast<float>(s / (h * w));
  }

  bool operator==(const Image&) const = default;
};

/// A batch of images, NCHW float32, packed contiguously.
struct Batch4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  void resize(int n_, int c_, int h_, int w_) {
    const std::size_t want = static_cast<std::size_t>(n_) * c_ * h_ * w_;
    if (n == n_ && c == c_ && h == h_ && w == w_ && v.size() == want) return;
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    v.assign(want, 0.0f);
  }

  std::size_t per_image() const { return static_cast<std::size_t>(c) * h * w; }

  float* image_data(int i) { return v.data() + per_image() * i; }
  const float* image_data(int i) const { return v.data() + per_image() * i; }
};

/// Packs images (all same shape) into an NCHW batch.
inline Batch4 pack_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("pack_batch: empty image list");
  const Image& first = *images[0];
  Batch4 b;
  b.resize(static_cast<int>(images.size()), first.c, first.h, first.w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i]->same_shape(first))
      throw ShapeError("pack_batch: inconsistent image shapes");
    std::copy(images[i]->v.begin(), images[i]->v.end(), b.image_data(static_cast<int>(i)));
  }
  return b;
}

/// Bilinear resize to out_h x out_w (align-corners-false convention).
inline Image resize_bilinear(const Image& src, int out_h, int out_w) {
  if (src.h == out_h && src.w == out_w) return src;
  Image dst(src.c, out_h, out_w);
  const float sy = static_cast<float>(src.h) / out_h;
  const float sx = static_cast<float>(src.w) / out_w;
  for (int ch = 0; ch < src.c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      float fy = (y + 0.5f) * sy - 0.5f;
      int y0 = static_cast<int>(std::floor(fy));
      float wy = fy - y0;
      int y0c = std::clamp(y0, 0, src.h - 1);
      int y1c = std::clamp(y0 + 1, 0, src.h - 1);
      for (int x = 0; x < out_w; ++x) {
        float fx = (x + 0.5f) * sx - 0.5f;
        int x0 = static_cast<int>(std::floor(fx));
        float wx = fx - x0;
        int x0c = std::clamp(x0, 0, src.w - 1);
        int x1c = std::clamp(x0 + 1, 0, src.w - 1);
        float top = src.at(ch, y0c, x0c) * (1 - wx) + src.at(ch, y0c, x1c) * wx;
        float bot = src.at(ch, y1c, x0c) * (1 - wx) + src.at(ch, y1c, x1c) * wx;
        dst.at(ch, y, x) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return dst;
}

}  // namespace paclab
