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

#include <catch2/catch_amalgamated.hpp>

#include "paclab/augment/color_jitter.hpp"
#include "paclab/augment/randaugment.hpp"
#include "paclab/augment/rotate.hpp"
#include "paclab/core/rng.hpp"

using namespace paclab;

namespace {

Image random_image(int c, int h, int w, RngStream& rng) {
  Image img(c, h, w);
  for (float& v : img.v) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("rotate90 conventions", "[augment][rotate]") {
  SECTION("r = 0 is the identity") {
    RngStream rng(0, Stream::kAugmentation);
    Image img = random_image(3, 8, 8, rng);
    CHECK(rotate90(img, RotationLabel(0)) == img);
  }

  SECTION("2x2 index permutation under the CCW convention") {
    // Enumerated by hand: [[a,b],[c,d]] rotated 90 CCW is [[b,d],[a,c]].
    Image img(1, 2, 2);
    img.at(0, 0, 0) = 1.0f;  // a
    img.at(0, 0, 1) = 2.0f;  // b
    img.at(0, 1, 0) = 3.0f;  // c
    img.at(0, 1, 1) = 4.0f;  // d
    Image r = rotate90(img, RotationLabel(1));
    CHECK(r.at(0, 0, 0) == 2.0f);
    CHECK(r.at(0, 0, 1) == 4.0f);
    CHECK(r.at(0, 1, 0) == 1.0f);
    CHECK(r.at(0, 1, 1) == 3.0f);
  }

  SECTION("group inverse: r then (4-r) mod 4 is the identity") {
    RngStream rng(1, Stream::kAugmentation);
    Image img = random_image(3, 6, 6, rng);
    for (int r = 0; r < 4; ++r) {
      Image once = rotate90(img, RotationLabel(r));
      Image back = rotate90(once, RotationLabel((4 - r) % 4));
      REQUIRE(back == img);
    }
  }

  SECTION("non-square image is an error") {
    Image img(1, 4, 6);
    CHECK_THROWS_AS(rotate90(img, RotationLabel(1)), ShapeError);
  }

  SECTION("bad label is an error") { CHECK_THROWS_AS(RotationLabel(4), ValidationError); }
}

TEST_CASE("rotate90 fourth power is the exact identity",
          "[augment][rotate][property]") {
  RngStream rng(2, Stream::kAugmentation);
  for (int trial = 0; trial < 200; ++trial) {
    int s = 2 + static_cast<int>(rng.uniform_index(20));
    Image img = random_image(1 + static_cast<int>(rng.uniform_index(3)), s, s, rng);
    Image cur = img;
    for (int i = 0; i < 4; ++i) cur = rotate90(cur, RotationLabel(1));
    REQUIRE(cur == img);  // exact equality, no tolerance
  }
}

TEST_CASE("randaugment contracts", "[augment][randaugment]") {
  RngStream data_rng(5, Stream::kAugmentation);
  PerturbationSpec spec;

  SECTION("consumes exactly n draws per call") {
    Image img = random_image(3, 16, 16, data_rng);
    for (int n : {1, 2, 5}) {
      spec.randaugment_n = n;
      RngStream rng(9, Stream::kAugmentation);
      auto before = rng.draws();
      randaugment(img, spec, rng);
      CHECK(rng.draws() - before == static_cast<std::uint64_t>(n));
    }
  }

  SECTION("zero magnitude is the identity for every op") {
    Image img = random_image(3, 12, 12, data_rng);
    for (int op = 0; op < kRandAugmentOps; ++op) {
      INFO("op " << randaugment_op_name(op));
      CHECK(apply_randaugment_op(img, op, 0.0f) == img);
      CHECK(apply_randaugment_op(img, op, -0.0f) == img);
    }
    spec.randaugment_magnitude = 0;
    spec.randaugment_n = 4;
    RngStream rng(3, Stream::kAugmentation);
    CHECK(randaugment(img, spec, rng) == img);
  }

  SECTION("output respects range and shape for any op and magnitude") {
    RngStream rng(6, Stream::kAugmentation);
    for (int trial = 0; trial < 200; ++trial) {
      Image img = random_image(3, 10, 10, rng);
      spec.randaugment_n = 2;
      spec.randaugment_magnitude = static_cast<int>(rng.uniform_index(31));
      Image out = randaugment(img, spec, rng);
      REQUIRE(out.c == img.c);
      REQUIRE(out.h == img.h);
      REQUIRE(out.w == img.w);
      for (float v : out.v) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
      }
    }
  }

  SECTION("deterministic under an equal stream") {
    Image img = random_image(3, 16, 16, data_rng);
    RngStream r1(77, Stream::kAugmentation);
    RngStream r2(77, Stream::kAugmentation);
    CHECK(randaugment(img, spec, r1) == randaugment(img, spec, r2));
  }
}

TEST_CASE("color jitter contracts", "[augment][jitter]") {
  RngStream data_rng(8, Stream::kAugmentation);

  SECTION("all strengths zero is the identity") {
    PerturbationSpec spec;
    spec.jitter_brightness = spec.jitter_contrast = spec.jitter_saturation =
        spec.jitter_hue = 0.0f;
    Image img = random_image(3, 9, 9, data_rng);
    RngStream rng(4, Stream::kAugmentation);
    CHECK(color_jitter(img, spec, rng) == img);
  }

  SECTION("a unit factor leaves the image unchanged") {
    Image img = random_image(3, 9, 9, data_rng);
    CHECK(enhance_brightness(img, 1.0f) == img);
    CHECK(enhance_contrast(img, 1.0f) == img);
    CHECK(enhance_saturation(img, 1.0f) == img);
    CHECK(shift_hue(img, 0.0f) == img);
  }

  SECTION("saturation-only jitter fixes a constant gray image") {
    // Oracle: a constant gray image has S = 0 in HSV space, so any
    // saturation scaling leaves every pixel at the same point.
    Image gray(3, 7, 7);
    for (float& v : gray.v) v = 0.42f;
    PerturbationSpec spec;
    spec.jitter_brightness = spec.jitter_contrast = spec.jitter_hue = 0.0f;
    spec.jitter_saturation = 0.4f;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
      RngStream rng(seed, Stream::kAugmentation);
      REQUIRE(color_jitter(gray, spec, rng) == gray);
    }
    // Hue rotation also fixes gray pixels.
    CHECK(shift_hue(gray, 0.3f) == gray);
  }

  SECTION("rejects non-color images") {
    Image mono(1, 8, 8);
    PerturbationSpec spec;
    RngStream rng(0, Stream::kAugmentation);
    CHECK_THROWS_AS(color_jitter(mono, spec, rng), ShapeError);
  }

  SECTION("output range stays in [0,1]") {
    PerturbationSpec spec;  // default strengths
    RngStream rng(12, Stream::kAugmentation);
    for (int trial = 0; trial < 200; ++trial) {
      Image img = random_image(3, 8, 8, rng);
      Image out = color_jitter(img, spec, rng);
      for (float v : out.v) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
      }
    }
  }
}

TEST_CASE("perturb composition", "[augment][perturb]") {
  RngStream data_rng(9, Stream::kAugmentation);
  Image img = random_image(3, 16, 16, data_rng);

  SECTION("both stages disabled is the identity") {
    RngStream rng(1, Stream::kAugmentation);
    CHECK(perturb(img, PerturbationSpec::identity(), rng) == img);
  }

  SECTION("deterministic under a fixed stream") {
    PerturbationSpec spec;
    RngStream r1(21, Stream::kAugmentation);
    RngStream r2(21, Stream::kAugmentation);
    CHECK(perturb(img, spec, r1) == perturb(img, spec, r2));
  }

  SECTION("equals jitter applied after randaugment") {
    PerturbationSpec spec;
    RngStream r1(33, Stream::kAugmentation);
    Image direct = perturb(img, spec, r1);
    RngStream r2(33, Stream::kAugmentation);
    Image staged = color_jitter(randaugment(img, spec, r2), spec, r2);
    CHECK(direct == staged);
  }
}
