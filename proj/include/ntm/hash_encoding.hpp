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

// Multi-resolution hash grid encoding with (bi/tri)linear interpolation.
//
// Inputs live in [0, domain]^D. At level l the input is scaled to a grid of
// resolution N_l; coarse levels whose vertex count fits the table are indexed
// densely, finer levels through a spatial hash. Features of one level are a
// linear blend of the 2^D surrounding vertex entries.

#ifndef NTM_HASH_ENCODING_HPP
#define NTM_HASH_ENCODING_HPP

#include "ntm/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ntm {

struct HashEncodingSpec {
  int levels = 16;
  int base_resolution = 8;
  int max_resolution = 5000;
  int log2_table_size = 19;
  int features_per_level = 2;
  int input_dims = 2;
  double domain = 10.0;

  int output_width() const { return levels * features_per_level; }

  void validate() const {
    if (levels < 1 || base_resolution < 1 || max_resolution < base_resolution || features_per_level < 1 ||
        log2_table_size < 4 || log2_table_size > 24 || input_dims < 1 || input_dims > 3 || !(domain > 0.0)) {
      throw ConfigError("invalid hash encoding specification");
    }
  }

  // Geometric progression from base_resolution to max_resolution.
  std::vector<int> resolutions() const {
    std::vector<int> res(levels);
    for (int l = 0; l < levels; ++l) {
      const double u = levels == 1 ? 0.0 : static_cast<double>(l) / (levels - 1);
      res[l] = static_cast<int>(std::lround(base_resolution *
                                            std::pow(static_cast<double>(max_resolution) / base_resolution, u)));
    }
    return res;
  }

  bool operator==(const HashEncodingSpec&) const = default;
};

template <typename T>
class HashGrid {
 public:
  using IndexMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

  // Per-point vertex indices and blend weights, (levels * 2^D) x P.
  struct Cache {
    IndexMatrix index;
    MatrixX<T> weight;
  };

  HashGrid() = default;

  explicit HashGrid(const HashEncodingSpec& spec) : spec_(spec) {
    spec_.validate();
    resolution_ = spec_.resolutions();
    const std::int64_t cap = std::int64_t{1} << spec_.log2_table_size;
    std::int64_t offset = 0;
    for (int r : resolution_) {
      std::int64_t dense = 1;
      for (int d = 0; d < spec_.input_dims; ++d) dense *= (r + 1);
      const std::int64_t size = std::min(dense, cap);
      offset_.push_back(offset);
      size_.push_back(size);
      hashed_.push_back(dense > cap);
      offset += size;
    }
    mask_ = static_cast<std::uint32_t>(cap - 1);
    table_ = MatrixX<T>::Zero(spec_.features_per_level, offset);
  }

  const HashEncodingSpec& spec() const { return spec_; }
  MatrixX<T>& table() { return table_; }
  const MatrixX<T>& table() const { return table_; }
  int resolution(int level) const { return resolution_[level]; }
  std::int64_t level_offset(int level) const { return offset_[level]; }
  std::int64_t level_size(int level) const { return size_[level]; }
  bool level_hashed(int level) const { return hashed_[level]; }
  int corners() const { return 1 << spec_.input_dims; }
  int output_width() const { return spec_.output_width(); }

  void initialize(Rng& rng, double amplitude = 1e-4) {
    for (Eigen::Index i = 0; i < table_.size(); ++i) {
      table_.data()[i] = static_cast<T>(rng.uniform(-amplitude, amplitude));
    }
  }

  // Table column for an integer grid vertex of one level.
  std::int64_t vertex_index(int level, const int* coords) const {
    const int dims = spec_.input_dims;
    if (!hashed_[level]) {
      std::int64_t idx = 0;
      std::int64_t stride = 1;
      for (int d = 0; d < dims; ++d) {
        idx += coords[d] * stride;
        stride *= (resolution_[level] + 1);
      }
      return offset_[level] + idx;
    }
    constexpr std::uint32_t primes[3] = {1u, 2654435761u, 805459861u};
    std::uint32_t h = 0;
    for (int d = 0; d < dims; ++d) h ^= static_cast<std::uint32_t>(coords[d]) * primes[d];
    // Hashed levels hold exactly 2^log2_table_size entries.
    return offset_[level] + static_cast<std::int64_t>(h & mask_);
  }

  // points: D x P  ->  features: (levels * F) x P.
  void forward(const Eigen::Ref<const MatrixX<T>>& points, MatrixX<T>& features, Cache* cache) const {
    const int dims = spec_.input_dims;
    const int nc = corners();
    const int F = spec_.features_per_level;
    const int W = output_width();
    const Eigen::Index P = points.cols();
    features.setZero(W, P);
    if (cache) {
      cache->index.resize(spec_.levels * nc, P);
      cache->weight.resize(spec_.levels * nc, P);
    }
    const T* tab = table_.data();
    int base[3];
    T frac[3];
    int vertex[3];
    for (Eigen::Index p = 0; p < P; ++p) {
      T* out = features.data() + p * W;
      std::int32_t* ci = cache ? cache->index.data() + p * cache->index.rows() : nullptr;
      T* cw = cache ? cache->weight.data() + p * cache->weight.rows() : nullptr;
      for (int l = 0; l < spec_.levels; ++l) {
        locate(points.col(p), l, base, frac);
        for (int c = 0; c < nc; ++c) {
          T w = T(1);
          for (int d = 0; d < dims; ++d) {
            const bool hi = (c >> d) & 1;
            vertex[d] = base[d] + hi;
            w *= hi ? frac[d] : T(1) - frac[d];
          }
          const std::int64_t idx = vertex_index(l, vertex);
          const T* col = tab + idx * F;
          for (int f = 0; f < F; ++f) out[l * F + f] += w * col[f];
          if (cache) {
            ci[l * nc + c] = static_cast<std::int32_t>(idx);
            cw[l * nc + c] = w;
          }
        }
      }
    }
  }

  // Accumulates dL/dtable given dL/dfeatures.
  void backward(const Cache& cache, const MatrixX<T>& d_features, MatrixX<T>& d_table) const {
    const int nc = corners();
    const int F = spec_.features_per_level;
    const int W = output_width();
    T* dt = d_table.data();
    const Eigen::Index rows = cache.index.rows();
    for (Eigen::Index p = 0; p < d_features.cols(); ++p) {
      const T* g = d_features.data() + p * W;
      const std::int32_t* ci = cache.index.data() + p * rows;
      const T* cw = cache.weight.data() + p * rows;
      for (int l = 0; l < spec_.levels; ++l) {
        for (int c = 0; c < nc; ++c) {
          T* col = dt + static_cast<std::int64_t>(ci[l * nc + c]) * F;
          const T w = cw[l * nc + c];
          for (int f = 0; f < F; ++f) col[f] += w * g[l * F + f];
        }
      }
    }
  }

  // d features / d point, (levels * F) x D. Zero along clamped axes.
  MatrixX<T> jacobian(const VectorX<T>& point) const {
    const int dims = spec_.input_dims;
    const int nc = corners();
    const int F = spec_.features_per_level;
    MatrixX<T> jac = MatrixX<T>::Zero(output_width(), dims);
    int base[3];
    T frac[3];
    int vertex[3];
    for (int l = 0; l < spec_.levels; ++l) {
      locate(point, l, base, frac);
      const T scale = static_cast<T>(resolution_[l] / spec_.domain);
      for (int c = 0; c < nc; ++c) {
        for (int d = 0; d < dims; ++d) vertex[d] = base[d] + ((c >> d) & 1);
        const std::int64_t idx = vertex_index(l, vertex);
        for (int k = 0; k < dims; ++k) {
          const T x = point[k] / static_cast<T>(spec_.domain);
          if (x <= T(0) || x >= T(1)) continue;
          T dw = scale * (((c >> k) & 1) ? T(1) : T(-1));
          for (int d = 0; d < dims; ++d) {
            if (d == k) continue;
            dw *= ((c >> d) & 1) ? frac[d] : T(1) - frac[d];
          }
          jac.col(k).segment(l * F, F) += dw * table_.col(idx);
        }
      }
    }
    return jac;
  }

 private:
  template <typename Vec>
  void locate(const Vec& point, int level, int* base, T* frac) const {
    const int r = resolution_[level];
    for (int d = 0; d < spec_.input_dims; ++d) {
      T x = point[d] / static_cast<T>(spec_.domain);
      x = std::clamp(x, T(0), T(1)) * static_cast<T>(r);
      int i = static_cast<int>(std::floor(x));
      if (i >= r) i = r - 1;
      base[d] = i;
      frac[d] = x - static_cast<T>(i);
    }
  }

  HashEncodingSpec spec_;
  std::vector<int> resolution_;
  std::vector<std::int64_t> offset_;
  std::vector<std::int64_t> size_;
  std::vector<char> hashed_;
  std::uint32_t mask_ = 0;
  MatrixX<T> table_;
};

}  // namespace ntm

#endif  // NTM_HASH_ENCODING_HPP
