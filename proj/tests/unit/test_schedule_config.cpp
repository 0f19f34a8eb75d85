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

#include <cmath>

#include "paclab/core/config.hpp"
#include "paclab/core/rng.hpp"
#include "paclab/core/schedule.hpp"

using namespace paclab;

TEST_CASE("lr_at_step matches the closed form", "[core][schedule]") {
  ScheduleParams sched{0.01, 0.0001, 0.75};

  SECTION("i = 0 collapses the denominator to 1") {
    CHECK(lr_at_step(sched, 0) == 0.01);
  }

  SECTION("i = 10000 halves-to-the-3/4 the rate") {
    // Oracle: 0.01 / (1 + 0.0001*10000)^0.75 = 0.01 / 2^0.75.
    CHECK_THAT(lr_at_step(sched, 10000),
               Catch::Matchers::WithinAbs(0.005946035575013605, 1e-12));
  }

  SECTION("scaling linearity in eta0") {
    ScheduleParams small{0.001, 0.0001, 0.75};
    CHECK_THAT(lr_at_step(small, 10000),
               Catch::Matchers::WithinAbs(0.0005946035575013605, 1e-12));
  }
}

TEST_CASE("lr_at_step is non-increasing and equals eta0 at 0",
          "[core][schedule][property]") {
  RngStream rng(7, Stream::kAnalysis);
  for (int trial = 0; trial < 200; ++trial) {
    ScheduleParams sched;
    sched.eta0 = rng.uniform(1e-5, 10.0);
    sched.decay_coeff = rng.uniform(0.0, 0.01);
    sched.decay_power = rng.uniform(0.0, 2.0);
    CHECK(lr_at_step(sched, 0) == sched.eta0);
    double prev = lr_at_step(sched, 0);
    std::int64_t i = 1;
    for (int hop = 0; hop < 8; ++hop) {
      double cur = lr_at_step(sched, i);
      CHECK(cur <= prev);
      prev = cur;
      i *= 4;
    }
  }
}

TEST_CASE("load_config fills hyperparameter defaults", "[core][config]") {
  auto cfg = train_config_from_kv(KeyValueFile::parse_text(""));
  CHECK(cfg.tau == 0.9);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.weight_decay == 0.0005);
  CHECK(cfg.lr_backbone == 0.001);
  CHECK(cfg.lr_classifier == 0.01);
  CHECK(cfg.lr_decay_coeff == 0.0001);
  CHECK(cfg.lr_decay_power == 0.75);
}

TEST_CASE("load_config validation and overrides", "[core][config]") {
  SECTION("out-of-range tau names the invariant") {
    CHECK_THROWS_AS(train_config_from_kv(KeyValueFile::parse_text("tau = 1.5")),
                    ValidationError);
  }

  SECTION("s override keeps the other defaults") {
    auto cfg = train_config_from_kv(KeyValueFile::parse_text("s = 24"));
    CHECK(cfg.s == 24);
    CHECK(cfg.tau == 0.9);
    CHECK(cfg.lr_classifier == 0.01);
  }

  SECTION("unknown keys are an error") {
    CHECK_THROWS_AS(
        train_config_from_kv(KeyValueFile::parse_text("learning_rate = 0.1")),
        ConfigError);
  }

  SECTION("duplicate keys are an error") {
    CHECK_THROWS_AS(KeyValueFile::parse_text("s = 1\ns = 2"), ConfigError);
  }

  SECTION("comments and blank lines are ignored") {
    auto cfg = train_config_from_kv(
        KeyValueFile::parse_text("# a comment\n\n  tau = 0.8  # trailing\n"));
    CHECK(cfg.tau == 0.8);
  }

  SECTION("malformed values name the key") {
    CHECK_THROWS_WITH(
        train_config_from_kv(KeyValueFile::parse_text("tau = high")),
        Catch::Matchers::ContainsSubstring("tau"));
  }

  SECTION("eval_interval must not exceed total_steps") {
    CHECK_THROWS_AS(train_config_from_kv(KeyValueFile::parse_text(
                        "total_steps = 10\neval_interval = 20")),
                    ValidationError);
  }
}
