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


#include "ntm/dtm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ntm {

GridSpec grid_for_frame(const SceneFrame& frame, double cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be positive");
  GridSpec g;
  g.origin = frame.bbox_min.head<2>();
  g.cell_size = cell_size;
  const Vec3 ext = frame.bbox_max - frame.bbox_min;
  g.n_cols = std::max(1, static_cast<int>(std::floor(ext.x() / cell_size)));
  g.n_rows = std::max(1, static_cast<int>(std::floor(ext.y() / cell_size)));
  return g;
}

std::size_t TerrainGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void TerrainGrid::apply_mask(const std::vector<std::uint8_t>& mask) {
  if (mask.size() != heights.size()) throw DomainError("mask shape differs from the grid");
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) {
      heights[i] = kNoData;
      valid[i] = 0;
    }
  }
}

void TerrainGrid::check() const {
  spec.validate();
  if (heights.size() != spec.cells() || valid.size() != spec.cells()) throw DomainError("raster size differs from the grid");
  if (channels > 0 && colors.size() != spec.cells() * static_cast<std::size_t>(channels)) {
    throw DomainError("color raster size differs from the grid");
  }
}

TerrainGrid sample_function(const GridSpec& spec, const std::function<double(const Vec2&)>& height) {
  spec.validate();
  TerrainGrid g(spec);
  for (int r = 0; r < spec.n_rows; ++r) {
    for (int c = 0; c < spec.n_cols; ++c) g.set(c, r, height(spec.cell_center(c, r)));
  }
  return g;
}

namespace detail {

void check_grid_in_frame(const GridSpec& spec, const SceneFrame& frame) {
  const double tol = 1e-9 * std::max(1.0, frame.max_extent());
  const Vec2 lo = spec.origin, hi = spec.upper_right();
  if (lo.x() < frame.bbox_min.x() - tol || lo.y() < frame.bbox_min.y() - tol || hi.x() > frame.bbox_max.x() + tol ||
      hi.y() > frame.bbox_max.y() + tol) {
    std::ostringstream os;
    os << "grid [" << lo.x() << ", " << hi.x() << "] x [" << lo.y() << ", " << hi.y()
       << "] extends outside the scene box";
    throw DomainError(os.str());
  }
}

}  // namespace detail

bool point_in_polygon(const Polygon& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

std::vector<std::uint8_t> footprint_union_mask(const std::vector<Polygon>& footprints, const GridSpec& spec) {
  spec.validate();
  if (footprints.empty()) throw DomainError("footprint mask needs at least one footprint");
  for (const auto& f : footprints) {
    if (f.size() < 3) throw DomainError("degenerate footprint polygon with fewer than 3 vertices");
  }
  std::vector<std::uint8_t> mask(spec.cells(), 0);
  for (int r = 0; r < spec.n_rows; ++r) {
    for (int c = 0; c < spec.n_cols; ++c) {
      const Vec2 p = spec.cell_center(c, r);
      for (const auto& f : footprints) {
        if (point_in_polygon(f, p)) {
          mask[static_cast<std::size_t>(r) * spec.n_cols + c] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

double exact_sum(const std::vector<double>& values) {
  // Shewchuk's non-overlapping partials with a correctly rounded result.
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  // Round half-even across the remaining partials.
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    const double yr = x - hi;
    if (y == yr) hi = x;
  }
  return hi;
}

Histogram make_histogram(const std::vector<double>& sorted_values, int bins) {
  Histogram h;
  if (sorted_values.empty() || bins < 1) return h;
  double lo = sorted_values.front(), hi = sorted_values.back();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double v : sorted_values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
  }
  return h;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& std_dev) {
  mean = exact_sum(v) / static_cast<double>(v.size());
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  std_dev = std::sqrt(exact_sum(sq) / static_cast<double>(v.size()));
}

}  // namespace

ErrorReport trimmed_stats(std::vector<double> errors, double trim, int bins) {
  if (!(trim >= 0.0 && trim < 0.5)) throw ConfigError("trim fraction must lie in [0, 0.5)");
  if (errors.empty()) throw DomainError("no jointly valid cells");
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  const auto k = static_cast<std::size_t>(std::floor(trim * static_cast<double>(n)));
  if (2 * k >= n) throw DomainError("trimming removes every error sample");
  ErrorReport rep;
  rep.trim_fraction = trim;
  rep.n_valid = static_cast<std::int64_t>(n);
  const std::vector<double> kept(errors.begin() + static_cast<std::ptrdiff_t>(k),
                                 errors.end() - static_cast<std::ptrdiff_t>(k));
  rep.n_trimmed = static_cast<std::int64_t>(kept.size());
  mean_std(kept, rep.mean_error, rep.std_dev);
  mean_std(errors, rep.untrimmed_mean, rep.untrimmed_std);
  rep.histogram = make_histogram(kept, bins);
  rep.histogram_untrimmed = make_histogram(errors, bins);
  return rep;
}

ErrorReport error_stats(const TerrainGrid& dtm, const TerrainGrid& reference, double trim) {
  dtm.check();
  reference.check();
  if (!(dtm.spec == reference.spec)) throw DomainError("error_stats needs congruent grids; resample first");
  std::vector<double> e;
  e.reserve(dtm.heights.size());
  for (std::size_t i = 0; i < dtm.heights.size(); ++i) {
    if (dtm.valid[i] && reference.valid[i]) e.push_back(dtm.heights[i] - reference.heights[i]);
  }
  if (e.empty()) throw DomainError("no jointly valid cells");
  return trimmed_stats(std::move(e), trim);
}

TerrainGrid resample_grid(const TerrainGrid& src, const GridSpec& dst) {
  src.check();
  dst.validate();
  const Vec2 slo = src.spec.origin, shi = src.spec.upper_right();
  const Vec2 dlo = dst.origin, dhi = dst.upper_right();
  if (dhi.x() <= slo.x() || dlo.x() >= shi.x() || dhi.y() <= slo.y() || dlo.y() >= shi.y()) {
    throw DomainError("resample_grid: source and destination extents are disjoint");
  }
  TerrainGrid out(dst);
  if (dst == src.spec) {
    out.heights = src.heights;
    out.valid = src.valid;
    return out;
  }
  const double ratio = dst.cell_size / src.spec.cell_size;
  const Vec2 shift = (dst.origin - src.spec.origin) / src.spec.cell_size;
  for (int r = 0; r < dst.n_rows; ++r) {
    const double fy = shift.y() + (r + 0.5) * ratio - 0.5;
    for (int c = 0; c < dst.n_cols; ++c) {
      const double fx = shift.x() + (c + 0.5) * ratio - 0.5;
      if (fx < 0.0 || fy < 0.0 || fx > src.spec.n_cols - 1 || fy > src.spec.n_rows - 1) continue;
      const int i0 = static_cast<int>(std::floor(fx));
      const int j0 = static_cast<int>(std::floor(fy));
      const double u = fx - i0, v = fy - j0;
      double h = 0.0;
      bool ok = true;
      for (int dj = 0; dj < 2 && ok; ++dj) {
        const double wy = dj ? v : 1.0 - v;
        if (wy == 0.0) continue;
        for (int di = 0; di < 2; ++di) {
          const double wx = di ? u : 1.0 - u;
          if (wx == 0.0) continue;
          const std::size_t idx = src.index(i0 + di, j0 + dj);
          if (!src.valid[idx]) {
            ok = false;
            break;
          }
          h += wx * wy * src.heights[idx];
        }
      }
      if (ok) out.set(c, r, h);
    }
  }
  return out;
}

}  // namespace ntm
