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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paclab/core/errors.hpp"
#include "paclab/model/backbone.hpp"
#include "paclab/model/heads.hpp"

namespace paclab {

inline constexpr const char* kCheckpointMagic = "PACLABCKPT1\n";

/// A self-describing model archive: JSON header (architecture, step, seed,
/// RNG state, pretrain tag, format version) plus a flat float32 payload of
/// all parameter arrays in declaration order.
struct Checkpoint {
  BackboneSpec backbone_spec;
  std::optional<ClassifierSpec> classifier_spec;
  bool has_rotation_head = false;
  std::int64_t step = 0;
  std::int64_t seed = 0;
  std::string pretrain = "none";  // none | rotation | moco
  std::string rng_state;

  std::vector<float> payload;

  static Checkpoint capture(Backbone& backbone, ClassifierHead* classifier,
                            RotationHead* rot_head) {
    Checkpoint ck;
    ck.backbone_spec = backbone.spec();
    std::vector<Param*> params = backbone.params();
    if (classifier) {
      ck.classifier_spec = classifier->spec();
      for (Param* p : classifier->params()) params.push_back(p);
    }
    if (rot_head) {
      ck.has_rotation_head = true;
      for (Param* p : rot_head->params()) params.push_back(p);
    }
    for (Param* p : params)
      ck.payload.insert(ck.payload.end(), p->value.data(),
                        p->value.data() + p->value.size());
    return ck;
  }

  /// Restores parameters into freshly constructed modules.
  void restore(Backbone& backbone, ClassifierHead* classifier,
               RotationHead* rot_head) const {
    std::vector<Param*> params = backbone.params();
    if (classifier_spec && classifier)
      for (Param* p : classifier->params()) params.push_back(p);
    if (has_rotation_head && rot_head)
      for (Param* p : rot_head->params()) params.push_back(p);
    std::size_t off = 0;
    for (Param* p : params) {
      if (off + p->value.size() > payload.size())
        throw IoError("checkpoint payload too short");
      std::copy(payload.begin() + off,
                payload.begin() + off + p->value.size(), p->value.data());
      off += p->value.size();
    }
  }

  Backbone make_backbone() const { return Backbone(backbone_spec); }
  ClassifierHead make_classifier() const {
    if (!classifier_spec) throw IoError("checkpoint has no classifier head");
    return ClassifierHead(*classifier_spec);
  }
};

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json header{{"format", "paclab-ckpt"},
                        {"version", 1},
                        {"backbone", ck.backbone_spec},
                        {"has_rotation_head", ck.has_rotation_head},
                        {"step", ck.step},
                        {"seed", ck.seed},
                        {"pretrain", ck.pretrain},
                        {"rng_state", ck.rng_state},
                        {"payload_count", ck.payload.size()}};
  if (ck.classifier_spec) header["classifier"] = *ck.classifier_spec;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string hs = header.dump();
  const std::uint64_t hlen = hs.size();
  out.write(kCheckpointMagic, 12);
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  out.write(reinterpret_cast<const char*>(ck.payload.data()),
            static_cast<std::streamsize>(ck.payload.size() * sizeof(float)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[12];
  in.read(magic, 12);
  if (!in || std::string(magic, 12) != kCheckpointMagic)
    throw IoError("not a checkpoint file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(hs);
  if (header.value("format", "") != "paclab-ckpt")
    throw IoError("bad checkpoint format tag: " + path);

  Checkpoint ck;
  header.at("backbone").get_to(ck.backbone_spec);
  if (header.contains("classifier"))
    ck.classifier_spec = header.at("classifier").get<ClassifierSpec>();
  ck.has_rotation_head = header.value("has_rotation_head", false);
  ck.step = header.value("step", std::int64_t{0});
  ck.seed = header.value("seed", std::int64_t{0});
  ck.pretrain = header.value("pretrain", "none");
  ck.rng_state = header.value("rng_state", "");
  const std::size_t count = header.at("payload_count").get<std::size_t>();
  ck.payload.resize(count);
  in.read(reinterpret_cast<char*>(ck.payload.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw IoError("truncated checkpoint payload: " + path);
  return ck;
}

/// FNV-1a hash of a file's bytes; used for provenance fields in manifests.
inline std::uint64_t file_fnv1a(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace paclab
