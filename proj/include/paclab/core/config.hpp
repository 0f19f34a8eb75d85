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

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "paclab/core/errors.hpp"
#include "paclab/core/schedule.hpp"

namespace paclab {

/// Flat `key = value` text document. UTF-8, one pair per line, `#` comments.
/// Duplicate keys are an error; so are keys outside the known registry
/// (catches typos in hyperparameter names).
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
  }

  static KeyValueFile parse_text(const std::string& text,
                                 const std::string& origin = "<text>") {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value', got '" + trimmed + "'");
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty key");
      if (kv.values_.count(key))
        throw ConfigError(origin + ": duplicate key '" + key + "'");
      kv.values_[key] = value;
    }
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      std::int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': not an integer: '" + it->second +
                        "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  /// Throws ConfigError on the first key that is not in `known`.
  void require_known_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      (void)value;
      if (!known.count(key))
        throw ConfigError("unknown config key '" + key + "'");
    }
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return d;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

/// Stage-2 training hyperparameters. Defaults are the published values:
/// tau = 0.9, SGD momentum 0.9, weight decay 5e-4, backbone lr 1e-3,
/// classifier lr 1e-2. Batch/step counts default to the desk preset.
struct TrainConfig {
  std::int64_t s = 8;              // labeled batch size per domain
  double tau = 0.9;                // confidence threshold
  std::int64_t total_steps = 2000;
  std::int64_t eval_interval = 100;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double lr_backbone = 0.001;
  double lr_classifier = 0.01;
  std::int64_t seed = 0;
  double lr_decay_coeff = 0.0001;
  double lr_decay_power = 0.75;

  ScheduleParams backbone_schedule() const {
    return ScheduleParams{lr_backbone, lr_decay_coeff, lr_decay_power};
  }
  ScheduleParams classifier_schedule() const {
    return ScheduleParams{lr_classifier, lr_decay_coeff, lr_decay_power};
  }

  void validate() const {
    if (s < 1) throw ValidationError("TrainConfig: s must be >= 1");
    if (!(tau >= 0.0 && tau <= 1.0))
      throw ValidationError("TrainConfig: tau must lie in [0, 1]");
    if (total_steps < 1)
      throw ValidationError("TrainConfig: total_steps must be >= 1");
    if (eval_interval < 1)
      throw ValidationError("TrainConfig: eval_interval must be >= 1");
    if (eval_interval > total_steps)
      throw ValidationError(
          "TrainConfig: eval_interval must be <= total_steps");
    if (!(lr_backbone > 0.0))
      throw ValidationError("TrainConfig: lr_backbone must be > 0");
    if (!(lr_classifier > 0.0))
      throw ValidationError("TrainConfig: lr_classifier must be > 0");
    if (lr_decay_coeff < 0.0)
      throw ValidationError("TrainConfig: lr_decay_coeff must be >= 0");
    if (lr_decay_power < 0.0)
      throw ValidationError("TrainConfig: lr_decay_power must be >= 0");
  }
};

/// Every key an experiment config file may contain. load_config validates
/// the whole file against this registry even though it only consumes the
/// TrainConfig subset; the augmentation keys are read by the augment module.
inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      // TrainConfig
      "s", "tau", "total_steps", "eval_interval", "momentum", "weight_decay",
      "lr_backbone", "lr_classifier", "seed", "lr_decay_coeff",
      "lr_decay_power",
      // PerturbationSpec
      "use_randaugment", "randaugment_n", "randaugment_magnitude",
      "use_color_jitter", "jitter_brightness", "jitter_contrast",
      "jitter_saturation", "jitter_hue",
      // model
      "temperature", "classifier_layers", "feature_dim", "image_size",
      // method extras
      "mme_lambda",
  };
  return keys;
}

inline TrainConfig train_config_from_kv(const KeyValueFile& kv) {
  kv.require_known_keys(known_config_keys());
  TrainConfig cfg;
  cfg.s = kv.get_int("s", cfg.s);
  cfg.tau = kv.get_double("tau", cfg.tau);
  cfg.total_steps = kv.get_int("total_steps", cfg.total_steps);
  cfg.eval_interval = kv.get_int("eval_interval", cfg.eval_interval);
  cfg.momentum = kv.get_double("momentum", cfg.momentum);
  cfg.weight_decay = kv.get_double("weight_decay", cfg.weight_decay);
  cfg.lr_backbone = kv.get_double("lr_backbone", cfg.lr_backbone);
  cfg.lr_classifier = kv.get_double("lr_classifier", cfg.lr_classifier);
  cfg.seed = kv.get_int("seed", cfg.seed);
  cfg.lr_decay_coeff = kv.get_double("lr_decay_coeff", cfg.lr_decay_coeff);
  cfg.lr_decay_power = kv.get_double("lr_decay_power", cfg.lr_decay_power);
  cfg.validate();
  return cfg;
}

/// Loads a TrainConfig from a flat key=value file. Absent keys keep their
/// defaults; unknown keys and out-of-range values are errors.
inline TrainConfig load_config(const std::string& path) {
  return train_config_from_kv(KeyValueFile::parse_file(path));
}

}  // namespace paclab
