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

// Fully connected network with softplus hidden activations, an optional skip
// connection that re-injects the network input, and manual reverse mode.
// Samples are stored column-wise: a batch of P inputs is an (in x P) matrix.

#ifndef NTM_MLP_HPP
#define NTM_MLP_HPP

#include "ntm/core.hpp"

#include <cmath>
#include <vector>

namespace ntm {

enum class OutputActivation { None, Sigmoid };

struct MlpSpec {
  int input_width = 32;
  int hidden_width = 128;
  int layers = 8;  // linear layers, including the output layer
  int output_width = 1;
  int skip_layer = -1;  // layer whose input is [hidden; network input], or -1
  OutputActivation output = OutputActivation::None;

  int layer_in(int l) const { return (l == 0 ? input_width : hidden_width) + (l == skip_layer && l > 0 ? input_width : 0); }
  int layer_out(int l) const { return l == layers - 1 ? output_width : hidden_width; }

  void validate() const {
    if (input_width < 1 || hidden_width < 1 || layers < 1 || output_width < 1 || skip_layer >= layers) {
      throw ConfigError("invalid MLP specification");
    }
  }

  bool operator==(const MlpSpec&) const = default;
};

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Vectorized elementwise forms used on whole activation matrices.
template <typename Derived>
auto softplus_array(const Eigen::ArrayBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return z.max(S(0)) + (-z.abs()).exp().log1p();
}

template <typename Derived>
auto sigmoid_array(const Eigen::ArrayBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-z).exp());
}

template <typename T>
class Mlp {
 public:
  struct Cache {
    std::vector<MatrixX<T>> inputs;  // per-layer input (after concatenation)
    std::vector<MatrixX<T>> pre;     // per-layer pre-activation
    MatrixX<T> output;
  };

  Mlp() = default;
  explicit Mlp(const MlpSpec& spec) : spec_(spec) {
    spec_.validate();
    for (int l = 0; l < spec_.layers; ++l) {
      weight_.push_back(MatrixX<T>::Zero(spec_.layer_out(l), spec_.layer_in(l)));
      bias_.push_back(VectorX<T>::Zero(spec_.layer_out(l)));
    }
  }

  const MlpSpec& spec() const { return spec_; }
  int layers() const { return spec_.layers; }
  MatrixX<T>& weight(int l) { return weight_[l]; }
  const MatrixX<T>& weight(int l) const { return weight_[l]; }
  VectorX<T>& bias(int l) { return bias_[l]; }
  const VectorX<T>& bias(int l) const { return bias_[l]; }

  // Fan-in scaled uniform initialization; optionally zero the output layer.
  void initialize(Rng& rng, bool zero_output_layer) {
    for (int l = 0; l < spec_.layers; ++l) {
      const bool zero = zero_output_layer && l == spec_.layers - 1;
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.layer_in(l)));
      for (Eigen::Index i = 0; i < weight_[l].size(); ++i) {
        weight_[l].data()[i] = zero ? T(0) : static_cast<T>(rng.uniform(-bound, bound));
      }
      for (Eigen::Index i = 0; i < bias_[l].size(); ++i) {
        bias_[l][i] = zero ? T(0) : static_cast<T>(rng.uniform(-bound, bound));
      }
    }
  }

  void set_zero() {
    for (auto& w : weight_) w.setZero();
    for (auto& b : bias_) b.setZero();
  }

  void forward(const MatrixX<T>& x, MatrixX<T>& y, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.inputs.resize(spec_.layers);
    c.pre.resize(spec_.layers);
    MatrixX<T> act;
    for (int l = 0; l < spec_.layers; ++l) {
      MatrixX<T>& in = c.inputs[l];
      if (l == 0) {
        in = x;
      } else if (l == spec_.skip_layer) {
        in.resize(spec_.layer_in(l), x.cols());
        in.topRows(spec_.hidden_width) = act;
        in.bottomRows(spec_.input_width) = x;
      } else {
        in = std::move(act);
      }
      MatrixX<T>& z = c.pre[l];
      z.noalias() = weight_[l] * in;
      z.colwise() += bias_[l];
      if (l + 1 < spec_.layers) {
        act = softplus_array(z.array()).matrix();
      }
    }
    const MatrixX<T>& z = c.pre.back();
    if (spec_.output == OutputActivation::Sigmoid) {
      y = sigmoid_array(z.array()).matrix();
    } else {
      y = z;
    }
    if (cache) c.output = y;
  }

  // Accumulates parameter gradients into `grad` (same shapes as *this);
  // writes dL/dx into d_input when requested.
  void backward(const Cache& c, const MatrixX<T>& d_output, Mlp& grad, MatrixX<T>* d_input) const {
    MatrixX<T> dz;
    if (spec_.output == OutputActivation::Sigmoid) {
      dz = (d_output.array() * c.output.array() * (T(1) - c.output.array())).matrix();
    } else {
      dz = d_output;
    }
    if (d_input) d_input->setZero(spec_.input_width, d_output.cols());
    for (int l = spec_.layers - 1; l >= 0; --l) {
      grad.weight_[l].noalias() += dz * c.inputs[l].transpose();
      grad.bias_[l] += dz.rowwise().sum();
      if (l == 0 && !d_input) break;
      MatrixX<T> din;
      din.noalias() = weight_[l].transpose() * dz;
      if (l == 0) {
        *d_input += din;
        break;
      }
      if (l == spec_.skip_layer) {
        if (d_input) *d_input += din.bottomRows(spec_.input_width);
        din.conservativeResize(spec_.hidden_width, Eigen::NoChange);
      }
      // Softplus' = sigmoid of the previous layer's pre-activation.
      dz = (din.array() * sigmoid_array(c.pre[l - 1].array())).matrix();
    }
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < spec_.layers; ++l) n += weight_[l].size() + bias_[l].size();
    return n;
  }

 private:
  MlpSpec spec_;
  std::vector<MatrixX<T>> weight_;
  std::vector<VectorX<T>> bias_;
};

}  // namespace ntm

#endif  // NTM_MLP_HPP
