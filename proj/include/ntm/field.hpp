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

// Trainable terrain representation over the normalized x-y plane:
//   height(p) = offset + MLP_h(enc_h(p))      (no output activation)
//   color(p)  = sigmoid(MLP_c(enc_c(p)))      (d channels)
// plus the opacity scale s = exp(rho) and the coarse 3D density fields used by
// the proposal sampler. All quantities are in normalized scene units.

#ifndef NTM_FIELD_HPP
#define NTM_FIELD_HPP

#include "ntm/camera.hpp"
#include "ntm/hash_encoding.hpp"
#include "ntm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ntm {

// Phi_s(x) = 1 / (1 + exp(-s x)).
template <typename T>
T sigmoid_phi(T s, T x) {
  return sigmoid(s * x);
}

// phi_s(x) = s exp(-s x) / (1 + exp(-s x))^2, the derivative of Phi_s.
template <typename T>
T logistic_phi(T s, T x) {
  const T e = std::exp(-std::abs(s * x));  // symmetric in x; never overflows
  return s * e / ((T(1) + e) * (T(1) + e));
}

struct ProposalSpec {
  HashEncodingSpec encoding{5, 16, 128, 17, 2, 3, 10.0};
  int hidden_width = 16;
  int layers = 2;

  bool operator==(const ProposalSpec&) const = default;
};

struct ModelSpec {
  HashEncodingSpec height_encoding{};
  HashEncodingSpec color_encoding{};
  int height_hidden = 128;
  int height_layers = 8;
  int height_skip_layer = 4;  // input re-injected between the 4th and 5th layers
  int color_hidden = 128;
  int color_layers = 4;
  int channels = 3;
  int proposal_networks = 2;
  ProposalSpec proposal{};

  MlpSpec height_mlp() const {
    return {height_encoding.output_width(), height_hidden, height_layers, 1, height_skip_layer, OutputActivation::None};
  }
  MlpSpec color_mlp() const {
    return {color_encoding.output_width(), color_hidden, color_layers, channels, -1, OutputActivation::Sigmoid};
  }
  MlpSpec proposal_mlp() const {
    return {proposal.encoding.output_width(), proposal.hidden_width, proposal.layers, 1, -1, OutputActivation::None};
  }

  void validate() const {
    height_encoding.validate();
    color_encoding.validate();
    proposal.encoding.validate();
    if (height_encoding.input_dims != 2 || color_encoding.input_dims != 2 || proposal.encoding.input_dims != 3) {
      throw ConfigError("height/color encodings take 2D input, proposal encodings 3D input");
    }
    if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
    if (proposal_networks < 0) throw ConfigError("proposal network count must be non-negative");
    height_mlp().validate();
    color_mlp().validate();
    proposal_mlp().validate();
  }

  bool operator==(const ModelSpec&) const = default;
};

template <typename T>
struct FieldCache {
  typename HashGrid<T>::Cache encoding;
  typename Mlp<T>::Cache mlp;
  MatrixX<T> features;
};

// Scalar field h_lambda: R^2 -> R.
template <typename T>
struct HeightField {
  HashGrid<T> encoding;
  Mlp<T> mlp;
  T offset = T(0);

  // points: 2 x P -> heights: 1 x P.
  void forward(const MatrixX<T>& points, MatrixX<T>& heights, FieldCache<T>* cache) const {
    FieldCache<T> local;
    FieldCache<T>& c = cache ? *cache : local;
    encoding.forward(points, c.features, &c.encoding);
    mlp.forward(c.features, heights, cache ? &c.mlp : nullptr);
    heights.array() += offset;
  }

  void backward(const FieldCache<T>& cache, const MatrixX<T>& d_heights, HeightField& grad) const {
    MatrixX<T> d_features;
    mlp.backward(cache.mlp, d_heights, grad.mlp, &d_features);
    encoding.backward(cache.encoding, d_features, grad.encoding.table());
  }

  T eval(T x, T y) const {
    MatrixX<T> p(2, 1);
    p << x, y;
    MatrixX<T> h;
    forward(p, h, nullptr);
    return h(0, 0);
  }
};

// Color field c_theta: R^2 -> (0, 1)^d.
template <typename T>
struct ColorField {
  HashGrid<T> encoding;
  Mlp<T> mlp;

  void forward(const MatrixX<T>& points, MatrixX<T>& colors, FieldCache<T>* cache) const {
    FieldCache<T> local;
    FieldCache<T>& c = cache ? *cache : local;
    encoding.forward(points, c.features, &c.encoding);
    mlp.forward(c.features, colors, cache ? &c.mlp : nullptr);
  }

  void backward(const FieldCache<T>& cache, const MatrixX<T>& d_colors, ColorField& grad) const {
    MatrixX<T> d_features;
    mlp.backward(cache.mlp, d_colors, grad.mlp, &d_features);
    encoding.backward(cache.encoding, d_features, grad.encoding.table());
  }

  VectorX<T> eval(T x, T y) const {
    MatrixX<T> p(2, 1);
    p << x, y;
    MatrixX<T> c;
    forward(p, c, nullptr);
    return c.col(0);
  }
};

// Coarse density proxy sigma: R^3 -> R+, used only to place samples.
template <typename T>
struct ProposalField {
  static constexpr double kMaxLogDensity = 15.0;

  HashGrid<T> encoding;
  Mlp<T> mlp;

  void forward(const MatrixX<T>& points, MatrixX<T>& density, FieldCache<T>* cache) const {
    FieldCache<T> local;
    FieldCache<T>& c = cache ? *cache : local;
    encoding.forward(points, c.features, &c.encoding);
    MatrixX<T> raw;
    mlp.forward(c.features, raw, cache ? &c.mlp : nullptr);
    density = raw.array().min(T(kMaxLogDensity)).exp().matrix();
  }

  // Gradient is cut where the log-density is clamped.
  void backward(const FieldCache<T>& cache, const MatrixX<T>& density, const MatrixX<T>& d_density,
                ProposalField& grad) const {
    const MatrixX<T>& raw = cache.mlp.pre.back();
    MatrixX<T> d_raw = (d_density.array() * density.array() * (raw.array() < T(kMaxLogDensity)).template cast<T>())
                           .matrix();
    MatrixX<T> d_features;
    mlp.backward(cache.mlp, d_raw, grad.mlp, &d_features);
    encoding.backward(cache.encoding, d_features, grad.encoding.table());
  }
};

// Named view of one contiguous parameter array.
template <typename T>
struct ParamBlock {
  std::string name;
  bool proposal = false;  // trained at the proposal learning rate
  T* data = nullptr;
  Eigen::Index size = 0;

  Eigen::Map<VectorX<T>> vec() const { return Eigen::Map<VectorX<T>>(data, size); }
};

template <typename T>
class NtmModel {
 public:
  NtmModel() = default;

  NtmModel(const ModelSpec& spec, const SceneFrame& frame) : spec_(spec), frame_(frame) {
    spec_.validate();
    frame_.validate();
    HashEncodingSpec he = spec_.height_encoding;
    HashEncodingSpec ce = spec_.color_encoding;
    he.domain = ce.domain = frame_.norm_scale;
    height.encoding = HashGrid<T>(he);
    height.mlp = Mlp<T>(spec_.height_mlp());
    color.encoding = HashGrid<T>(ce);
    color.mlp = Mlp<T>(spec_.color_mlp());
    for (int k = 0; k < spec_.proposal_networks; ++k) {
      HashEncodingSpec pe = spec_.proposal.encoding;
      pe.domain = frame_.norm_scale;
      ProposalField<T> pf;
      pf.encoding = HashGrid<T>(pe);
      pf.mlp = Mlp<T>(spec_.proposal_mlp());
      proposals.push_back(std::move(pf));
    }
    const Vec3 box = frame_.normalized_box_max();
    height.offset = static_cast<T>(0.5 * box.z());
    // Sigmoid transition width 4/s equal to the normalized box height.
    log_scale = static_cast<T>(std::log(4.0 / box.z()));
  }

  // Table init uniform in [-1e-4, 1e-4]; MLPs fan-in uniform; zero height head.
  void initialize(std::uint64_t seed) {
    Rng rng(seed, 0x4e544d);
    height.encoding.initialize(rng);
    height.mlp.initialize(rng, true);
    color.encoding.initialize(rng);
    color.mlp.initialize(rng, false);
    for (auto& p : proposals) {
      p.encoding.initialize(rng);
      p.mlp.initialize(rng, false);
    }
  }

  const ModelSpec& spec() const { return spec_; }
  const SceneFrame& frame() const { return frame_; }
  T scale() const { return std::exp(log_scale); }

  // Copy with every parameter set to zero; used as a gradient accumulator.
  NtmModel zeros_like() const {
    NtmModel g = *this;
    g.set_zero();
    return g;
  }

  void set_zero() {
    for (auto& b : parameter_blocks()) b.vec().setZero();
  }

  std::vector<ParamBlock<T>> parameter_blocks() {
    std::vector<ParamBlock<T>> blocks;
    auto add_mlp = [&](const std::string& prefix, Mlp<T>& mlp, bool proposal) {
      for (int l = 0; l < mlp.layers(); ++l) {
        blocks.push_back({prefix + ".w" + std::to_string(l), proposal, mlp.weight(l).data(), mlp.weight(l).size()});
        blocks.push_back({prefix + ".b" + std::to_string(l), proposal, mlp.bias(l).data(), mlp.bias(l).size()});
      }
    };
    auto add_table = [&](const std::string& name, HashGrid<T>& grid, bool proposal) {
      blocks.push_back({name, proposal, grid.table().data(), grid.table().size()});
    };
    add_table("height.table", height.encoding, false);
    add_mlp("height.mlp", height.mlp, false);
    add_table("color.table", color.encoding, false);
    add_mlp("color.mlp", color.mlp, false);
    blocks.push_back({"log_scale", false, &log_scale, 1});
    for (std::size_t k = 0; k < proposals.size(); ++k) {
      const std::string prefix = "proposal" + std::to_string(k);
      add_table(prefix + ".table", proposals[k].encoding, true);
      add_mlp(prefix + ".mlp", proposals[k].mlp, true);
    }
    return blocks;
  }

  // Read-only callers must not write through the returned pointers.
  std::vector<ParamBlock<T>> parameter_blocks() const { return const_cast<NtmModel*>(this)->parameter_blocks(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& b : parameter_blocks()) n += b.size;
    return n;
  }

  // Convert parameters to another scalar type (e.g. float checkpoint -> double check).
  template <typename U>
  NtmModel<U> cast() const {
    NtmModel<U> out(spec_, frame_);
    auto src = parameter_blocks();
    auto dst = out.parameter_blocks();
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (Eigen::Index j = 0; j < src[i].size; ++j) dst[i].data[j] = static_cast<U>(src[i].data[j]);
    }
    out.height.offset = static_cast<U>(height.offset);
    return out;
  }

  HeightField<T> height;
  ColorField<T> color;
  T log_scale = T(0);
  std::vector<ProposalField<T>> proposals;

 private:
  ModelSpec spec_;
  SceneFrame frame_;
};

}  // namespace ntm

#endif  // NTM_FIELD_HPP
