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


#include "ntm/train.hpp"

#include <algorithm>

namespace ntm {

std::optional<Locus> pixel_locus(const Dataset& data, int view, int x, int y) {
  const CameraModel& cam = data.views[static_cast<std::size_t>(view)].camera;
  const auto clipped = clip_to_box(camera_locus(cam, pixel_center(cam, x, y)), data.frame);
  if (!clipped || !(clipped->t_far > clipped->t_near)) return std::nullopt;
  return normalize_locus(data.frame, *clipped);
}

PixelSampler::PixelSampler(const Dataset& data, Mode mode) : data_(data), mode_(mode) {
  if (data.views.empty() || data.total_pixels() == 0) throw ConfigError("cannot sample pixels from an empty dataset");
  for (const auto& v : data.views) {
    first_.push_back(total_);
    total_ += v.image.pixels();
  }
}

void PixelSampler::locate(std::size_t global, int& view, int& x, int& y) const {
  const auto it = std::upper_bound(first_.begin(), first_.end(), global);
  view = static_cast<int>(std::distance(first_.begin(), it)) - 1;
  const std::size_t local = global - first_[static_cast<std::size_t>(view)];
  const int w = data_.views[static_cast<std::size_t>(view)].image.width;
  x = static_cast<int>(local % static_cast<std::size_t>(w));
  y = static_cast<int>(local / static_cast<std::size_t>(w));
}

PixelBatch PixelSampler::next(int batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  PixelBatch b;
  b.targets.resize(data_.channels, batch_size);
  const std::size_t max_draws = std::max<std::size_t>(total_, 1000) * 4 + static_cast<std::size_t>(batch_size) * 1000;
  std::size_t draws = 0;
  while (static_cast<int>(b.loci.size()) < batch_size) {
    if (++draws > max_draws) throw RuntimeAbort("no pixel locus intersects the scene box");
    std::size_t g;
    if (mode_ == Mode::Random) {
      g = static_cast<std::size_t>(rng.below(total_));
    } else {
      g = cursor_;
      cursor_ = (cursor_ + 1) % total_;
    }
    int view, x, y;
    locate(g, view, x, y);
    const auto locus = pixel_locus(data_, view, x, y);
    if (!locus) continue;
    const Image& img = data_.views[static_cast<std::size_t>(view)].image;
    const Eigen::Index col = static_cast<Eigen::Index>(b.loci.size());
    for (int c = 0; c < data_.channels; ++c) b.targets(c, col) = img.at(x, y, c);
    b.loci.push_back(*locus);
    b.image_ids.push_back(view);
    b.pixel_ids.push_back(static_cast<std::int64_t>(y) * img.width + x);
  }
  return b;
}

PixelBatch sample_batch(const Dataset& data, int batch_size, Rng& rng) {
  PixelSampler sampler(data);
  return sampler.next(batch_size, rng);
}

}  // namespace ntm
