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
#include <filesystem>
#include <string>
#include <vector>

#include "paclab/data/dataset.hpp"
#include "paclab/data/image_io.hpp"
#include "paclab/tensor.hpp"

namespace paclab {

/// Loads a class-per-directory image tree: root/<class_name>/<image files>.
/// Classes are indexed by sorted directory name; files are read in sorted
/// order, scaled to [0,1] and resized to input_size x input_size. An empty
/// class directory produces a warning but keeps its class index. Unreadable
/// files are an error naming the file.
inline Dataset load_folder_dataset(const std::string& root, int input_size,
                                   Domain domain,
                                   std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    throw IoError("dataset root is not a directory: " + root);

  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw IoError("dataset root has no class directories: " + root);

  Dataset ds;
  ds.set_num_classes(static_cast<int>(class_dirs.size()));
  ds.set_class_names(class_dirs);

  std::int64_t id = 0;
  for (int k = 0; k < static_cast<int>(class_dirs.size()); ++k) {
    fs::path dir = fs::path(root) / class_dirs[k];
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty() && warnings)
      warnings->push_back("class directory is empty: " + dir.string());
    for (const auto& f : files) {
      Image img = read_image(f);  // throws IoError naming the file
      img = resize_bilinear(img, input_size, input_size);
      img.clip01();
      ds.add(std::move(img), k, domain, id++);
    }
  }
  return ds;
}

/// Writes a dataset back out in the same class-per-directory layout (PNG).
inline void save_dataset_as_folders(const Dataset& ds,
                                    const std::string& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  std::vector<std::string> names = ds.class_names();
  if (names.empty())
    for (int k = 0; k < ds.num_classes(); ++k)
      names.push_back("class_" + std::to_string(k));
  for (const auto& name : names) fs::create_directories(fs::path(root) / name);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int k = ds.eval_label(i);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%08lld.png",
                  static_cast<long long>(ds.id(i)));
    write_png((fs::path(root) / names[k] / buf).string(), ds.pixels(i));
  }
}

}  // namespace paclab
