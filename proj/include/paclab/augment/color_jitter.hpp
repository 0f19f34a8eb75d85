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

#include "paclab/augment/randaugment.hpp"
#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

namespace augdetail {

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s,
                       float& v) {
  float mx = std::max({r, g, b});
  float mn = std::min({r, g, b});
  v = mx;
  float d = mx - mn;
  s = mx == 0.0f ? 0.0f : d / mx;
  if (d == 0.0f) {
    h = 0.0f;
    return;
  }
  if (mx == r)
    h = (g - b) / d + (g < b ? 6.0f : 0.0f);
  else if (mx == g)
    h = (b - r) / d + 2.0f;
  else
    h = (r - g) / d + 4.0f;
  h /= 6.0f;
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g,
                       float& b) {
  if (s == 0.0f) {
    r = g = b = v;
    return;
  }
  h = h - std::floor(h);
  float hf = h * 6.0f;
  int i = static_cast<int>(hf) % 6;
  float f = hf - std::floor(hf);
  float p = v * (1.0f - s);
  float q = v * (1.0f - s * f);
  float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace augdetail

/// Rotates hue by `shift` (fraction of the full hue circle). Exact identity
/// at shift == 0; gray pixels are unchanged for any shift.
inline Image shift_hue(const Image& img, float shift) {
  if (shift == 0.0f) return img;
  Image out = img;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float h, s, v;
      augdetail::rgb_to_hsv(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x),
                            h, s, v);
      float r, g, b;
      augdetail::hsv_to_rgb(h + shift, s, v, r, g, b);
      out.at(0, y, x) = std::clamp(r, 0.0f, 1.0f);
      out.at(1, y, x) = std::clamp(g, 0.0f, 1.0f);
      out.at(2, y, x) = std::clamp(b, 0.0f, 1.0f);
    }
  return out;
}

/// Brightness/contrast/saturation factors drawn uniformly from [1-s, 1+s]
/// and a hue shift from [-s_h, +s_h], applied in a random order. Defined on
/// 3-channel images only.
inline Image color_jitter(const Image& img, const PerturbationSpec& spec,
                          RngStream& rng) {
  spec.validate();
  if (img.c != 3)
    throw ShapeError("color_jitter: requires a 3-channel image");

  float fb = static_cast<float>(
      rng.uniform(1.0 - spec.jitter_brightness, 1.0 + spec.jitter_brightness));
  float fc = static_cast<float>(
      rng.uniform(1.0 - spec.jitter_contrast, 1.0 + spec.jitter_contrast));
  float fs = static_cast<float>(
      rng.uniform(1.0 - spec.jitter_saturation, 1.0 + spec.jitter_saturation));
  float fh =
      static_cast<float>(rng.uniform(-spec.jitter_hue, spec.jitter_hue));
  // Strength zero must mean an exact identity; the uniform draw on a
  // zero-width interval already returns the endpoints, but the hue draw on
  // [-0, 0] may produce -0.0, so normalize.
  if (spec.jitter_hue == 0.0f) fh = 0.0f;

  std::vector<int> order = {0, 1, 2, 3};
  rng.shuffle(order);

  Image out = img;
  for (int op : order) {
    switch (op) {
      case 0: out = enhance_brightness(out, fb); break;
      case 1: out = enhance_contrast(out, fc); break;
      case 2: out = enhance_saturation(out, fs); break;
      default: out = shift_hue(out, fh); break;
    }
  }
  return out;
}

/// The perturbation delta used for the consistency branch and the perturbed
/// supervised branches: RandAugment first, color jitter last.
inline Image perturb(const Image& img, const PerturbationSpec& spec,
                     RngStream& rng) {
  Image out = img;
  if (spec.use_randaugment) out = randaugment(out, spec, rng);
  if (spec.use_color_jitter) out = color_jitter(out, spec, rng);
  return out;
}

}  // namespace paclab
