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


// Regular height/color rasters in the scene frame, DTM and texture extraction
// from a trained model, footprint masks and trimmed error statistics.
//
// Raster convention: row 0 is the southern (lowest y) row and cell (c, r) has
// its center at origin + ((c + 0.5) cell, (r + 0.5) cell).

#ifndef NTM_DTM_HPP
#define NTM_DTM_HPP

#include "ntm/camera.hpp"
#include "ntm/field.hpp"

#include <functional>
#include <vector>

namespace ntm {

inline constexpr double kNoData = -99999.0;

struct GridSpec {
  Vec2 origin = Vec2::Zero();  // lower-left corner, meters
  double cell_size = 1.0;
  int n_cols = 0;
  int n_rows = 0;

  void validate() const {
    if (!(cell_size > 0.0) || n_cols < 1 || n_rows < 1) throw ConfigError("grid needs cell_size > 0 and a positive shape");
  }
  Vec2 cell_center(int col, int row) const {
    return origin + Vec2((col + 0.5) * cell_size, (row + 0.5) * cell_size);
  }
  Vec2 upper_right() const { return origin + Vec2(n_cols * cell_size, n_rows * cell_size); }
  std::size_t cells() const { return static_cast<std::size_t>(n_cols) * n_rows; }
  bool operator==(const GridSpec&) const = default;
};

// Largest grid with the given cell size inside the scene box footprint.
GridSpec grid_for_frame(const SceneFrame& frame, double cell_size);

struct TerrainGrid {
  GridSpec spec;
  std::vector<double> heights;       // row-major, row 0 south; kNoData where invalid
  std::vector<std::uint8_t> valid;
  int channels = 0;                  // 0 when no colors are attached
  std::vector<float> colors;         // interleaved, same layout as heights

  TerrainGrid() = default;
  explicit TerrainGrid(const GridSpec& s)
      : spec(s), heights(s.cells(), kNoData), valid(s.cells(), 0) {}

  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * spec.n_cols + col; }
  void set(int col, int row, double h) {
    heights[index(col, row)] = h;
    valid[index(col, row)] = 1;
  }
  void invalidate(int col, int row) {
    heights[index(col, row)] = kNoData;
    valid[index(col, row)] = 0;
  }
  std::size_t valid_count() const;
  // Applies a mask: cells with mask 0 become no-data.
  void apply_mask(const std::vector<std::uint8_t>& mask);
  void check() const;
};

// Grid of a closed-form height function (e.g. an analytic reference terrain).
TerrainGrid sample_function(const GridSpec& spec, const std::function<double(const Vec2&)>& height);

namespace detail {
void check_grid_in_frame(const GridSpec& spec, const SceneFrame& frame);
}

// Heights of the trained field at every cell center, in meters.
template <typename T>
TerrainGrid extract_dtm(const NtmModel<T>& model, const GridSpec& spec) {
  spec.validate();
  const SceneFrame& frame = model.frame();
  detail::check_grid_in_frame(spec, frame);
  TerrainGrid g(spec);
  const double k = frame.scale();
  MatrixX<T> p(2, spec.n_cols), h;
  for (int r = 0; r < spec.n_rows; ++r) {
    for (int c = 0; c < spec.n_cols; ++c) {
      const Vec3 n = normalize_point(frame, Vec3(spec.cell_center(c, r).x(), spec.cell_center(c, r).y(), 0.0));
      p(0, c) = static_cast<T>(n.x());
      p(1, c) = static_cast<T>(n.y());
    }
    model.height.forward(p, h, nullptr);
    for (int c = 0; c < spec.n_cols; ++c) g.set(c, r, static_cast<double>(h(0, c)) / k + frame.bbox_min.z());
  }
  return g;
}

// Color field at every cell center, attached to the returned grid (heights left invalid).
template <typename T>
TerrainGrid extract_texture(const NtmModel<T>& model, const GridSpec& spec) {
  spec.validate();
  const SceneFrame& frame = model.frame();
  detail::check_grid_in_frame(spec, frame);
  TerrainGrid g(spec);
  g.channels = model.spec().channels;
  g.colors.assign(spec.cells() * g.channels, 0.0f);
  MatrixX<T> p(2, spec.n_cols), c;
  for (int r = 0; r < spec.n_rows; ++r) {
    for (int col = 0; col < spec.n_cols; ++col) {
      const Vec3 n = normalize_point(frame, Vec3(spec.cell_center(col, r).x(), spec.cell_center(col, r).y(), 0.0));
      p(0, col) = static_cast<T>(n.x());
      p(1, col) = static_cast<T>(n.y());
    }
    model.color.forward(p, c, nullptr);
    for (int col = 0; col < spec.n_cols; ++col) {
      for (int ch = 0; ch < g.channels; ++ch) {
        g.colors[g.index(col, r) * g.channels + ch] = static_cast<float>(c(ch, col));
      }
    }
  }
  return g;
}

// Even-odd point-in-polygon test.
bool point_in_polygon(const Polygon& poly, const Vec2& p);

// Cell valid iff its center lies inside at least one footprint.
std::vector<std::uint8_t> footprint_union_mask(const std::vector<Polygon>& footprints, const GridSpec& spec);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::int64_t> counts;
};

Histogram make_histogram(const std::vector<double>& sorted_values, int bins);

struct ErrorReport {
  double mean_error = 0.0;
  double std_dev = 0.0;  // population
  double trim_fraction = 0.02;
  std::int64_t n_valid = 0;    // jointly valid cells before trimming
  std::int64_t n_trimmed = 0;  // cells kept after trimming
  Histogram histogram;          // trimmed errors
  Histogram histogram_untrimmed;
  double untrimmed_mean = 0.0;
  double untrimmed_std = 0.0;
};

// Exactly rounded sum of doubles.
double exact_sum(const std::vector<double>& values);

// Mean and population std of errors after dropping floor(trim n) from each tail.
ErrorReport trimmed_stats(std::vector<double> errors, double trim, int bins = 64);

// Errors dtm - reference over jointly valid cells of congruent grids.
ErrorReport error_stats(const TerrainGrid& dtm, const TerrainGrid& reference, double trim = 0.02);

// Bilinear resampling; cells needing an invalid or missing neighbor are invalid.
TerrainGrid resample_grid(const TerrainGrid& src, const GridSpec& dst);

}  // namespace ntm

#endif  // NTM_DTM_HPP
