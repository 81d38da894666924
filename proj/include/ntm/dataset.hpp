// Copyright 2026 The NTM Authors.
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


// In-memory training data: views (camera model plus image) over one scene frame.

#ifndef NTM_DATASET_HPP
#define NTM_DATASET_HPP

#include "ntm/camera.hpp"

#include <string>
#include <vector>

namespace ntm {

// Interleaved channels, row-major from the top image row; values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

struct View {
  std::string name;
  CameraModel camera;
  Image image;
};

struct Dataset {
  SceneFrame frame;
  int channels = 3;
  double gsd_m = 0.0;
  std::uint64_t seed = 0;
  std::string reference_dtm;  // path relative to the dataset directory, may be empty
  std::vector<View> views;

  std::size_t total_pixels() const {
    std::size_t n = 0;
    for (const auto& v : views) n += v.image.pixels();
    return n;
  }

  void validate() const {
    frame.validate();
    if (channels != 1 && channels != 3) throw ConfigError("dataset channels must be 1 or 3");
    if (views.empty()) throw ConfigError("dataset has no views");
    for (const auto& v : views) {
      const Eigen::Vector2i size = image_size(v.camera);
      if (size.x() != v.image.width || size.y() != v.image.height) {
        throw ConfigError("view '" + v.name + "': image size does not match its camera model");
      }
      if (v.image.channels != channels) throw ConfigError("view '" + v.name + "': channel count mismatch");
      if (const auto* ls = std::get_if<LinescanModel>(&v.camera)) ls->validate();
    }
  }
};

}  // namespace ntm

#endif  // NTM_DATASET_HPP
