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

#include "paclab/core/errors.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

/// Discrete rotation label: r in {0,1,2,3} meaning {0, 90, 180, 270} degrees
/// counter-clockwise.
struct RotationLabel {
  int r = 0;

  explicit RotationLabel(int r_ = 0) : r(r_) {
    if (r < 0 || r > 3)
      throw ValidationError("RotationLabel: r must be in {0,1,2,3}");
  }
};

/// Exact lossless 90*r degree counter-clockwise pixel permutation.
/// Requires a square image.
inline Image rotate90(const Image& img, const RotationLabel& rot) {
  if (img.h != img.w)
    throw ShapeError("rotate90: image must be square");
  if (rot.r == 0) return img;
  const int s = img.h;
  Image out(img.c, s, s);
  for (int ch = 0; ch < img.c; ++ch) {
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        float v;
        switch (rot.r) {
          case 1: v = img.at(ch, x, s - 1 - y); break;
          case 2: v = img.at(ch, s - 1 - y, s - 1 - x); break;
          default: v = img.at(ch, s - 1 - x, y); break;  // r == 3
        }
        out.at(ch, y, x) = v;
      }
    }
  }
  return out;
}

}  // namespace paclab
