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

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

/// Image-level perturbation stack configuration. Magnitude is a fixed
/// integer on a 0..30 scale shared by all RandAugment ops.
struct PerturbationSpec {
  bool use_randaugment = true;
  int randaugment_n = 2;
  int randaugment_magnitude = 10;
  static constexpr int kMagnitudeScale = 30;
  bool use_color_jitter = true;
  float jitter_brightness = 0.4f;
  float jitter_contrast = 0.4f;
  float jitter_saturation = 0.4f;
  float jitter_hue = 0.1f;

  void validate() const {
    if (randaugment_n < 1)
      throw ValidationError("PerturbationSpec: randaugment_n must be >= 1");
    if (randaugment_magnitude < 0 || randaugment_magnitude > kMagnitudeScale)
      throw ValidationError(
          "PerturbationSpec: randaugment_magnitude must be in [0, 30]");
    if (jitter_brightness < 0 || jitter_contrast < 0 || jitter_saturation < 0 ||
        jitter_hue < 0)
      throw ValidationError("PerturbationSpec: jitter strengths must be >= 0");
    if (jitter_hue > 0.5f)
      throw ValidationError("PerturbationSpec: hue strength must be <= 0.5");
  }

  static PerturbationSpec identity() {
    PerturbationSpec s;
    s.use_randaugment = false;
    s.use_color_jitter = false;
    return s;
  }
};

namespace augdetail {

/// Inverse-mapped affine resample about the image center with bilinear
/// interpolation. Out-of-bounds samples are filled with the per-channel mean.
/// m maps output coordinates to input coordinates:
///   xin = m00*(x-cx) + m01*(y-cy) + cx + tx
///   yin = m10*(x-cx) + m11*(y-cy) + cy + ty
inline Image affine(const Image& img, float m00, float m01, float m10,
                    float m11, float tx, float ty) {
  Image out(img.c, img.h, img.w);
  const float cx = (img.w - 1) * 0.5f;
  const float cy = (img.h - 1) * 0.5f;
  for (int ch = 0; ch < img.c; ++ch) {
    const float fill = img.channel_mean(ch);
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x) {
        float xin = m00 * (x - cx) + m01 * (y - cy) + cx + tx;
        float yin = m10 * (x - cx) + m11 * (y - cy) + cy + ty;
        int x0 = static_cast<int>(std::floor(xin));
        int y0 = static_cast<int>(std::floor(yin));
        float fx = xin - x0;
        float fy = yin - y0;
        auto sample = [&](int yy, int xx) -> float {
          if (xx < 0 || xx >= img.w || yy < 0 || yy >= img.h) return fill;
          return img.at(ch, yy, xx);
        };
        float top = sample(y0, x0) * (1 - fx) + sample(y0, x0 + 1) * fx;
        float bot = sample(y0 + 1, x0) * (1 - fx) + sample(y0 + 1, x0 + 1) * fx;
        out.at(ch, y, x) = top * (1 - fy) + bot * fy;
      }
    }
  }
  out.clip01();
  return out;
}

inline Image blend(const Image& a, const Image& b, float t) {
  // (1-t)*a + t*b, clipped.
  Image out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = std::clamp((1 - t) * a.v[i] + t * b.v[i], 0.0f, 1.0f);
  return out;
}

inline Image grayscale(const Image& img) {
  Image g(1, img.h, img.w);
  if (img.c == 3) {
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        g.at(0, y, x) = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) +
                        0.114f * img.at(2, y, x);
  } else {
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) g.at(0, y, x) = img.at(0, y, x);
  }
  return g;
}

inline Image autocontrast_full(const Image& img) {
  Image out = img;
  for (int ch = 0; ch < img.c; ++ch) {
    float lo = 1.0f, hi = 0.0f;
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        lo = std::min(lo, img.at(ch, y, x));
        hi = std::max(hi, img.at(ch, y, x));
      }
    if (hi - lo < 1e-6f) continue;
    float scale = 1.0f / (hi - lo);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        out.at(ch, y, x) = std::clamp((img.at(ch, y, x) - lo) * scale, 0.0f, 1.0f);
  }
  return out;
}

inline Image equalize_full(const Image& img) {
  Image out = img;
  constexpr int kBins = 256;
  for (int ch = 0; ch < img.c; ++ch) {
    std::array<int, kBins> hist{};
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        int b = std::clamp(static_cast<int>(img.at(ch, y, x) * 255.0f + 0.5f),
                           0, 255);
        ++hist[b];
      }
    std::array<float, kBins> cdf{};
    int running = 0;
    int total = img.h * img.w;
    // Ignore the first nonzero bin, matching the usual uint8 equalize.
    int first_nonzero = 0;
    while (first_nonzero < kBins - 1 && hist[first_nonzero] == 0)
      ++first_nonzero;
    int denom = total - hist[first_nonzero];
    if (denom <= 0) continue;
    for (int b = 0; b < kBins; ++b) {
      running += hist[b];
      cdf[b] = std::clamp(
          static_cast<float>(running - hist[first_nonzero]) / denom, 0.0f,
          1.0f);
    }
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        int b = std::clamp(static_cast<int>(img.at(ch, y, x) * 255.0f + 0.5f),
                           0, 255);
        out.at(ch, y, x) = cdf[b];
      }
  }
  return out;
}

inline Image smooth3x3(const Image& img) {
  // PIL SMOOTH kernel: center 5, neighbors 1, normalized by 13. Borders keep
  // their original value.
  Image out = img;
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 1; y < img.h - 1; ++y)
      for (int x = 1; x < img.w - 1; ++x) {
        float s = 5.0f * img.at(ch, y, x);
        s += img.at(ch, y - 1, x - 1) + img.at(ch, y - 1, x) +
             img.at(ch, y - 1, x + 1);
        s += img.at(ch, y, x - 1) + img.at(ch, y, x + 1);
        s += img.at(ch, y + 1, x - 1) + img.at(ch, y + 1, x) +
             img.at(ch, y + 1, x + 1);
        out.at(ch, y, x) = s / 13.0f;
      }
  return out;
}

}  // namespace augdetail

/// Point enhancement helpers shared by RandAugment and color jitter.
/// All are exact identities at factor == 1 / shift == 0.

inline Image enhance_brightness(const Image& img, float factor) {
  if (factor == 1.0f) return img;
  Image out = img;
  for (float& v : out.v) v = std::clamp(v * factor, 0.0f, 1.0f);
  return out;
}

inline Image enhance_contrast(const Image& img, float factor) {
  if (factor == 1.0f) return img;
  Image gray = augdetail::grayscale(img);
  double mean = 0.0;
  for (float v : gray.v) mean += v;
  float m = static_cast<float>(mean / gray.v.size());
  Image out = img;
  for (float& v : out.v) v = std::clamp(m + factor * (v - m), 0.0f, 1.0f);
  return out;
}

inline Image enhance_saturation(const Image& img, float factor) {
  if (factor == 1.0f || img.c != 3) return img;
  Image out = img;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float l = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) +
                0.114f * img.at(2, y, x);
      for (int ch = 0; ch < 3; ++ch)
        out.at(ch, y, x) =
            std::clamp(l + factor * (img.at(ch, y, x) - l), 0.0f, 1.0f);
    }
  return out;
}

inline Image enhance_sharpness(const Image& img, float factor) {
  if (factor == 1.0f) return img;
  Image smooth = augdetail::smooth3x3(img);
  Image out = img;
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] =
        std::clamp(smooth.v[i] + factor * (img.v[i] - smooth.v[i]), 0.0f, 1.0f);
  return out;
}

inline Image posterize(const Image& img, int bits) {
  if (bits >= 8) return img;
  if (bits < 1) bits = 1;
  Image out = img;
  const int mask = ~((1 << (8 - bits)) - 1) & 0xFF;
  for (float& v : out.v) {
    int u = std::clamp(static_cast<int>(v * 255.0f + 0.5f), 0, 255);
    v = static_cast<float>(u & mask) / 255.0f;
  }
  return out;
}

inline Image solarize(const Image& img, float threshold) {
  Image out = img;
  for (float& v : out.v)
    if (v > threshold) v = 1.0f - v;
  return out;
}

/// The 14-op RandAugment registry. Ops are indexed 0..13; each op maps a
/// signed magnitude in [-1, 1] (shared integer magnitude / 30, with a random
/// sign for the signed ops) to its own parameter range. Every op is an exact
/// identity at magnitude 0.
inline constexpr int kRandAugmentOps = 14;

inline const char* randaugment_op_name(int op) {
  static constexpr std::array<const char*, kRandAugmentOps> names = {
      "identity",   "auto-contrast", "equalize",  "rotate",      "solarize",
      "color",      "posterize",     "contrast",  "brightness",  "sharpness",
      "shear-x",    "shear-y",       "translate-x", "translate-y"};
  return names[op];
}

inline Image apply_randaugment_op(const Image& img, int op, float signed_mag) {
  const float m = std::abs(signed_mag);
  const float sg = signed_mag < 0 ? -1.0f : 1.0f;
  switch (op) {
    case 0:  // identity
      return img;
    case 1:  // auto-contrast, blended so magnitude 0 is the identity
      return m == 0.0f ? img
                       : augdetail::blend(img, augdetail::autocontrast_full(img), m);
    case 2:  // equalize, blended likewise
      return m == 0.0f ? img
                       : augdetail::blend(img, augdetail::equalize_full(img), m);
    case 3: {  // rotate up to 30 degrees
      float ang = sg * m * 30.0f * 3.14159265358979323846f / 180.0f;
      if (ang == 0.0f) return img;
      float c = std::cos(ang), s = std::sin(ang);
      return augdetail::affine(img, c, -s, s, c, 0.0f, 0.0f);
    }
    case 4:  // solarize: threshold walks down from 1
      return solarize(img, 1.0f - m);
    case 5:  // color (saturation enhance)
      return enhance_saturation(img, 1.0f + sg * 0.9f * m);
    case 6:  // posterize: 8 -> 4 bits
      return posterize(img, 8 - static_cast<int>(std::lround(4.0f * m)));
    case 7:
      return enhance_contrast(img, 1.0f + sg * 0.9f * m);
    case 8:
      return enhance_brightness(img, 1.0f + sg * 0.9f * m);
    case 9:
      return enhance_sharpness(img, 1.0f + sg * 0.9f * m);
    case 10: {  // shear-x up to 0.3
      float sh = sg * m * 0.3f;
      if (sh == 0.0f) return img;
      return augdetail::affine(img, 1.0f, sh, 0.0f, 1.0f, 0.0f, 0.0f);
    }
    case 11: {
      float sh = sg * m * 0.3f;
      if (sh == 0.0f) return img;
      return augdetail::affine(img, 1.0f, 0.0f, sh, 1.0f, 0.0f, 0.0f);
    }
    case 12: {  // translate-x up to 1/3 of width
      float t = sg * m * img.w / 3.0f;
      if (t == 0.0f) return img;
      return augdetail::affine(img, 1.0f, 0.0f, 0.0f, 1.0f, t, 0.0f);
    }
    case 13: {
      float t = sg * m * img.h / 3.0f;
      if (t == 0.0f) return img;
      return augdetail::affine(img, 1.0f, 0.0f, 0.0f, 1.0f, 0.0f, t);
    }
    default:
      throw ValidationError("apply_randaugment_op: bad op index");
  }
}

/// Applies randaugment_n ops drawn uniformly (with replacement) from the
/// registry. Consumes exactly randaugment_n draws from rng: each draw picks
/// the op and its sign together. Output stays in [0, 1] with the input shape.
inline Image randaugment(const Image& img, const PerturbationSpec& spec,
                         RngStream& rng) {
  spec.validate();
  const float m = static_cast<float>(spec.randaugment_magnitude) /
                  PerturbationSpec::kMagnitudeScale;
  Image out = img;
  for (int i = 0; i < spec.randaugment_n; ++i) {
    std::uint32_t pick = rng.uniform_index(2 * kRandAugmentOps);
    int op = static_cast<int>(pick >> 1);
    float sign = (pick & 1) ? -1.0f : 1.0f;
    out = apply_randaugment_op(out, op, sign * m);
  }
  return out;
}

}  // namespace paclab
