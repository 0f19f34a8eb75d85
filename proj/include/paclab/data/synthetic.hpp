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
#include <utility>
#include <vector>

#include "paclab/core/errors.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/data/dataset.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

/// How the target domain's rendering differs from the source domain's.
struct DomainShift {
  bool invert_colors = false;
  float noise_level = 0.0f;   // additive Gaussian sigma
  float stroke_delta = 0.0f;  // added to the stroke width (unit coords)

  bool is_null() const {
    return !invert_colors && noise_level == 0.0f && stroke_delta == 0.0f;
  }
};

/// Specification of one synthetic two-domain benchmark.
struct SyntheticDomainSpec {
  int num_classes = 8;
  int n_per_class_per_domain = 200;
  int image_size = 32;
  DomainShift shift{true, 0.14f, -0.008f};
  std::int64_t seed = 0;

  void validate() const {
    if (num_classes < 2)
      throw ValidationError("SyntheticDomainSpec: num_classes must be >= 2");
    if (image_size < 16)
      throw ValidationError("SyntheticDomainSpec: image_size must be >= 16");
    if (n_per_class_per_domain < 1)
      throw ValidationError(
          "SyntheticDomainSpec: n_per_class_per_domain must be >= 1");
    if (shift.noise_level < 0.0f)
      throw ValidationError("SyntheticDomainSpec: noise level must be >= 0");
  }
};

namespace glyphs {

struct Segment {
  float x0, y0, x1, y1;
};

/// Parametric stroke glyphs in a [0,1]^2 frame (y up). Every prototype is
/// asymmetric under 90/180/270 degree rotations, so the rotation pretext
/// task stays well-posed, while the class identity survives rotation.
inline const std::vector<std::vector<Segment>>& prototypes() {
  static const std::vector<std::vector<Segment>> protos = {
      // 0: F
      {{0.30f, 0.10f, 0.30f, 0.90f},
       {0.30f, 0.90f, 0.75f, 0.90f},
       {0.30f, 0.52f, 0.68f, 0.52f}},
      // 1: L
      {{0.32f, 0.90f, 0.32f, 0.10f}, {0.32f, 0.10f, 0.78f, 0.10f}},
      // 2: seven
      {{0.22f, 0.88f, 0.78f, 0.88f}, {0.78f, 0.88f, 0.40f, 0.10f}},
      // 3: up-arrow
      {{0.50f, 0.10f, 0.50f, 0.85f},
       {0.50f, 0.85f, 0.30f, 0.60f},
       {0.50f, 0.85f, 0.70f, 0.60f}},
      // 4: J with hook
      {{0.30f, 0.88f, 0.80f, 0.88f},
       {0.62f, 0.88f, 0.62f, 0.24f},
       {0.62f, 0.24f, 0.44f, 0.10f},
       {0.44f, 0.10f, 0.28f, 0.22f}},
      // 5: h
      {{0.30f, 0.90f, 0.30f, 0.10f},
       {0.30f, 0.55f, 0.62f, 0.55f},
       {0.62f, 0.55f, 0.62f, 0.10f}},
      // 6: open four
      {{0.58f, 0.90f, 0.22f, 0.42f},
       {0.22f, 0.42f, 0.80f, 0.42f},
       {0.58f, 0.90f, 0.58f, 0.10f}},
      // 7: r
      {{0.35f, 0.68f, 0.35f, 0.10f},
       {0.35f, 0.52f, 0.54f, 0.66f},
       {0.54f, 0.66f, 0.70f, 0.60f}},
      // 8: flag
      {{0.30f, 0.10f, 0.30f, 0.90f},
       {0.30f, 0.90f, 0.75f, 0.75f},
       {0.75f, 0.75f, 0.30f, 0.60f}},
      // 9: y
      {{0.28f, 0.90f, 0.50f, 0.50f}, {0.72f, 0.90f, 0.38f, 0.10f}},
      // 10: t with foot
      {{0.50f, 0.90f, 0.50f, 0.12f},
       {0.28f, 0.70f, 0.72f, 0.70f},
       {0.50f, 0.12f, 0.68f, 0.18f}},
      // 11: P
      {{0.32f, 0.10f, 0.32f, 0.90f},
       {0.32f, 0.90f, 0.68f, 0.82f},
       {0.68f, 0.82f, 0.68f, 0.58f},
       {0.68f, 0.58f, 0.32f, 0.50f}},
      // 12: check mark
      {{0.20f, 0.45f, 0.42f, 0.15f}, {0.42f, 0.15f, 0.82f, 0.80f}},
      // 13: G hook
      {{0.72f, 0.80f, 0.40f, 0.88f},
       {0.40f, 0.88f, 0.22f, 0.60f},
       {0.22f, 0.60f, 0.30f, 0.25f},
       {0.30f, 0.25f, 0.62f, 0.12f},
       {0.62f, 0.12f, 0.72f, 0.35f},
       {0.72f, 0.35f, 0.55f, 0.38f}},
      // 14: E
      {{0.70f, 0.88f, 0.32f, 0.88f},
       {0.32f, 0.88f, 0.32f, 0.12f},
       {0.32f, 0.12f, 0.70f, 0.12f},
       {0.32f, 0.50f, 0.62f, 0.50f}},
      // 15: k
      {{0.32f, 0.90f, 0.32f, 0.10f},
       {0.32f, 0.45f, 0.68f, 0.78f},
       {0.44f, 0.55f, 0.70f, 0.10f}},
  };
  return protos;
}

inline int max_classes() {
  return static_cast<int>(prototypes().size());
}

struct Latents {
  float rot;       // radians, canonical-orientation jitter
  float scale;     // glyph scale about the frame center
  float tx, ty;    // translation of the frame center
  float width;     // stroke width (unit coords)
  float fg_r, fg_g, fg_b;
  float bg_r, bg_g, bg_b;
  std::vector<float> seg_jitter;  // 4 entries per segment
};

inline void hsv_to_rgbf(float h, float s, float v, float& r, float& g,
                        float& b) {
  h = h - std::floor(h);
  float hf = h * 6.0f;
  int i = static_cast<int>(hf) % 6;
  float f = hf - std::floor(hf);
  float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

/// Per-instance latent draws. Derived purely from (seed, class, instance),
/// so the same underlying glyph instance can be rendered under either
/// domain style.
inline Latents draw_latents(std::int64_t seed, int class_id,
                            std::int64_t instance, std::size_t n_segments) {
  RngStream rng(static_cast<std::uint64_t>(seed), Stream::kDataSampling,
                {0x517e, static_cast<std::uint64_t>(class_id),
                 static_cast<std::uint64_t>(instance)});
  Latents lat;
  // Wide pose/stroke/color variation keeps the task from collapsing into
  // template matching while the canonical orientation stays unambiguous
  // (jitter well below 45 degrees).
  lat.rot = static_cast<float>(rng.uniform(-0.40, 0.40));  // ~±23 degrees
  lat.scale = static_cast<float>(rng.uniform(0.55, 0.92));
  lat.tx = static_cast<float>(rng.uniform(-0.12, 0.12));
  lat.ty = static_cast<float>(rng.uniform(-0.12, 0.12));
  lat.width = static_cast<float>(rng.uniform(0.045, 0.075));
  float hue = static_cast<float>(rng.uniform(0.0, 1.0));
  float sat = static_cast<float>(rng.uniform(0.30, 0.95));
  float val = static_cast<float>(rng.uniform(0.15, 0.55));
  hsv_to_rgbf(hue, sat, val, lat.fg_r, lat.fg_g, lat.fg_b);
  float bg_v = static_cast<float>(rng.uniform(0.75, 0.97));
  float bg_tint = static_cast<float>(rng.uniform(-0.06, 0.06));
  lat.bg_r = std::clamp(bg_v + bg_tint, 0.0f, 1.0f);
  lat.bg_g = bg_v;
  lat.bg_b = std::clamp(bg_v - bg_tint, 0.0f, 1.0f);
  lat.seg_jitter.resize(n_segments * 4);
  for (float& j : lat.seg_jitter)
    j = static_cast<float>(rng.uniform(-0.025, 0.025));
  return lat;
}

inline float point_segment_dist(float px, float py, const Segment& s) {
  float dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  float len2 = dx * dx + dy * dy;
  float t = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0f;
  t = std::clamp(t, 0.0f, 1.0f);
  float cx = s.x0 + t * dx, cy = s.y0 + t * dy;
  return std::sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy));
}

}  // namespace glyphs

/// Renders one glyph instance under the given domain style. Deterministic in
/// (spec.seed, class_id, instance); with a null shift the target rendering
/// equals the source rendering bit for bit.
inline Image render_synthetic_example(const SyntheticDomainSpec& spec,
                                      int class_id, std::int64_t instance,
                                      bool target_style) {
  const auto& protos = glyphs::prototypes();
  if (class_id < 0 || class_id >= static_cast<int>(protos.size()))
    throw ValidationError("render_synthetic_example: class out of range");
  const auto& proto = protos[class_id];
  glyphs::Latents lat =
      glyphs::draw_latents(spec.seed, class_id, instance, proto.size());

  const DomainShift shift =
      target_style ? spec.shift : DomainShift{false, 0.0f, 0.0f};
  const float width = lat.width + shift.stroke_delta;

  // Place the jittered glyph in frame coordinates.
  std::vector<glyphs::Segment> segs(proto.size());
  const float cr = std::cos(lat.rot), sr = std::sin(lat.rot);
  for (std::size_t i = 0; i < proto.size(); ++i) {
    auto place = [&](float x, float y, float jx, float jy, float& ox,
                     float& oy) {
      x += jx - 0.5f;
      y += jy - 0.5f;
      float rx = cr * x - sr * y, ry = sr * x + cr * y;
      ox = 0.5f + lat.tx + lat.scale * rx;
      oy = 0.5f + lat.ty + lat.scale * ry;
    };
    place(proto[i].x0, proto[i].y0, lat.seg_jitter[4 * i],
          lat.seg_jitter[4 * i + 1], segs[i].x0, segs[i].y0);
    place(proto[i].x1, proto[i].y1, lat.seg_jitter[4 * i + 2],
          lat.seg_jitter[4 * i + 3], segs[i].x1, segs[i].y1);
  }

  const int S = spec.image_size;
  Image img(3, S, S);
  const float aa = 0.7f / S;  // soft edge width
  for (int py = 0; py < S; ++py) {
    for (int px = 0; px < S; ++px) {
      float x = (px + 0.5f) / S;
      float y = 1.0f - (py + 0.5f) / S;
      float d = 1e9f;
      for (const auto& s : segs)
        d = std::min(d, glyphs::point_segment_dist(x, y, s));
      float alpha =
          std::clamp((width * 0.5f + aa - d) / (2.0f * aa), 0.0f, 1.0f);
      img.at(0, py, px) = lat.bg_r + alpha * (lat.fg_r - lat.bg_r);
      img.at(1, py, px) = lat.bg_g + alpha * (lat.fg_g - lat.bg_g);
      img.at(2, py, px) = lat.bg_b + alpha * (lat.fg_b - lat.bg_b);
    }
  }

  if (target_style && shift.invert_colors)
    for (float& v : img.v) v = 1.0f - v;

  if (target_style && shift.noise_level > 0.0f) {
    RngStream noise(static_cast<std::uint64_t>(spec.seed),
                    Stream::kDataSampling,
                    {0x401e, static_cast<std::uint64_t>(class_id),
                     static_cast<std::uint64_t>(instance)});
    // Texture: a random-orientation stripe field plus per-pixel grain. The
    // stripes move the low-level statistics far from the source style while
    // leaving the stroke shapes legible.
    const float stripe_amp = 2.2f * shift.noise_level;
    const float angle = static_cast<float>(noise.uniform(0.0, 3.14159265));
    const float freq =
        static_cast<float>(noise.uniform(1.2, 2.6));  // cycles per 8 px
    const float phase = static_cast<float>(noise.uniform(0.0, 6.2831853));
    const float ca = std::cos(angle), sa = std::sin(angle);
    for (int py = 0; py < S; ++py)
      for (int px = 0; px < S; ++px) {
        const float u = (ca * px + sa * py) * freq * (6.2831853f / 8.0f);
        const float stripe = stripe_amp * std::sin(u + phase);
        for (int ch = 0; ch < 3; ++ch) img.at(ch, py, px) += stripe;
      }
    for (float& v : img.v)
      v += 0.8f * shift.noise_level * static_cast<float>(noise.normal());
  }
  img.clip01();
  return img;
}

/// Renders the two-domain benchmark: K glyph classes drawn twice, a clean
/// source style and a shifted target style. Instances are disjoint across
/// domains; everything is deterministic in the spec.
inline std::pair<Dataset, Dataset> make_synthetic_domain_pair(
    const SyntheticDomainSpec& spec) {
  spec.validate();
  if (spec.num_classes > glyphs::max_classes())
    throw ValidationError(
        "make_synthetic_domain_pair: only " +
        std::to_string(glyphs::max_classes()) +
        " distinct glyph classes are representable, requested " +
        std::to_string(spec.num_classes));

  Dataset source, target;
  source.set_num_classes(spec.num_classes);
  target.set_num_classes(spec.num_classes);
  std::vector<std::string> names;
  for (int k = 0; k < spec.num_classes; ++k)
    names.push_back("class_" + std::to_string(k));
  source.set_class_names(names);
  target.set_class_names(names);

  const int n = spec.n_per_class_per_domain;
  std::int64_t id = 0;
  for (int k = 0; k < spec.num_classes; ++k)
    for (int i = 0; i < n; ++i)
      source.add(render_synthetic_example(spec, k, i, false), k,
                 Domain::kSource, id++);
  id = 1000000;
  for (int k = 0; k < spec.num_classes; ++k)
    for (int i = 0; i < n; ++i)
      target.add(render_synthetic_example(spec, k, n + i, true), k,
                 Domain::kTarget, id++);
  return {std::move(source), std::move(target)};
}

}  // namespace paclab
