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

// Sampling along loci and compositing.
//
// A ray carries n sample points t_0 < ... < t_{n-1}. The terrain renderer
// evaluates heights at every point, forms n - 1 consecutive pairs and uses the
// altitude above terrain z' = z - h in place of a signed distance:
//
//   alpha_i = max((Phi_s(z'_i) - Phi_s(z'_{i+1})) / Phi_s(z'_i), 0)
//   T_i     = prod_{j<i} (1 - alpha_j)
//   c       = sum_i T_i alpha_i c_i
//
// with the pair color c_i taken at the pair midpoint. The density baseline
// uses w_i = T_i (1 - exp(-sigma_i delta_i)) with exponential transmittance.

#ifndef NTM_RENDER_HPP
#define NTM_RENDER_HPP

#include "ntm/camera.hpp"
#include "ntm/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace ntm {

// Opacity is defined as zero when Phi_s(z'_i) falls below this value.
inline constexpr double kPhiUnderflow = 1e-30;
// Depth normalization guard.
inline constexpr double kDepthEps = 1e-10;

struct SamplerConfig {
  enum class Kind { Uniform, Proposal };
  Kind kind = Kind::Proposal;
  int uniform_samples = 64;
  std::vector<int> proposal_samples{64, 32};  // bins per proposal stage
  int final_samples = 32;
  double pdf_padding = 0.01;  // fraction of the histogram mass spread uniformly

  int stages() const { return kind == Kind::Proposal ? static_cast<int>(proposal_samples.size()) : 0; }
  int samples_per_ray() const { return kind == Kind::Proposal ? final_samples : uniform_samples; }
  void validate() const {
    if (samples_per_ray() < 2) throw ConfigError("at least two samples per ray are required");
    if (kind == Kind::Proposal) {
      if (proposal_samples.empty()) throw ConfigError("proposal sampler needs at least one stage");
      for (int n : proposal_samples) {
        if (n < 1) throw ConfigError("proposal stage sample counts must be positive");
      }
    }
    if (!(pdf_padding >= 0.0)) throw ConfigError("pdf padding must be non-negative");
  }
};

template <typename T>
struct RenderOutput {
  VectorX<T> color;
  T depth = T(0);
  T accumulation = T(0);
  std::vector<T> weights;
};

inline void require_valid(const Locus& locus) {
  if (!(locus.t_near <= locus.t_far) || !std::isfinite(locus.t_near) || !std::isfinite(locus.t_far) ||
      locus.t_near < 0.0) {
    throw DomainError("invalid locus: sampling requires finite bounds 0 <= t_near <= t_far");
  }
}

// n stratified samples in [t_near, t_far]: bin midpoints, or one uniform draw per bin.
template <typename T>
std::vector<T> sample_uniform(T t_near, T t_far, int n, bool jitter, Rng& rng) {
  if (n < 2) throw DomainError("sample_uniform needs n >= 2");
  std::vector<T> t(n);
  const T width = (t_far - t_near) / T(n);
  for (int i = 0; i < n; ++i) {
    const T u = jitter ? static_cast<T>(rng.uniform()) : T(0.5);
    t[i] = t_near + (T(i) + u) * width;
  }
  return t;
}

template <typename T>
std::vector<T> sample_uniform(const Locus& locus, int n, bool jitter, Rng& rng) {
  require_valid(locus);
  return sample_uniform<T>(static_cast<T>(locus.t_near), static_cast<T>(locus.t_far), n, jitter, rng);
}

template <typename T>
std::vector<T> uniform_edges(T t_near, T t_far, int bins) {
  std::vector<T> e(bins + 1);
  for (int i = 0; i <= bins; ++i) e[i] = t_near + (t_far - t_near) * T(i) / T(bins);
  e[bins] = t_far;
  return e;
}

// Draws `count` sorted samples from the piecewise-constant density with mass
// weights[j] on [edges[j], edges[j+1]] by stratified inverse-CDF lookup.
// A `padding` fraction of the total mass is spread uniformly over all bins.
// All-zero weights fall back to uniform bins.
template <typename T>
std::vector<T> sample_pdf(std::span<const T> edges, std::span<const T> weights, int count, bool jitter, Rng& rng,
                          double padding = 0.01, bool* fell_back = nullptr) {
  const std::size_t bins = weights.size();
  if (edges.size() != bins + 1 || bins == 0) throw DomainError("sample_pdf: edges must have one more entry than weights");
  std::vector<double> cdf(bins + 1, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < bins; ++j) total += std::max(0.0, static_cast<double>(weights[j]));
  const bool degenerate = !(total > 0.0) || !std::isfinite(total);
  if (fell_back) *fell_back = degenerate;
  const double pad = degenerate ? 1.0 : padding * total / static_cast<double>(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const double w = degenerate ? 0.0 : std::max(0.0, static_cast<double>(weights[j]));
    cdf[j + 1] = cdf[j] + w + pad;
  }
  const double norm = cdf[bins];
  for (double& c : cdf) c /= norm;
  cdf[bins] = 1.0;
  std::vector<T> out(count);
  std::size_t j = 0;
  for (int k = 0; k < count; ++k) {
    const double u = (k + (jitter ? rng.uniform() : 0.5)) / count;
    while (j + 1 < bins && cdf[j + 1] <= u) ++j;
    const double span = cdf[j + 1] - cdf[j];
    const double f = span > 0.0 ? std::clamp((u - cdf[j]) / span, 0.0, 1.0) : 0.5;
    const double lo = static_cast<double>(edges[j]);
    const double hi = static_cast<double>(edges[j + 1]);
    out[k] = static_cast<T>(lo + f * (hi - lo));
  }
  for (int k = 1; k < count; ++k) out[k] = std::max(out[k], out[k - 1]);
  return out;
}

// Pair opacity from altitudes above terrain at consecutive samples.
template <typename T>
T ntm_opacity(T z0, T z1, T s) {
  const T phi0 = sigmoid_phi(s, z0);
  if (!(phi0 >= T(kPhiUnderflow))) return T(0);
  const T phi1 = sigmoid_phi(s, z1);
  return std::max((phi0 - phi1) / phi0, T(0));
}

template <typename T>
std::vector<T> product_transmittance(std::span<const T> alpha) {
  std::vector<T> trans(alpha.size());
  T acc = T(1);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    trans[i] = acc;
    acc *= T(1) - alpha[i];
  }
  return trans;
}

// colors: d x n. Depth is the expected termination distance.
template <typename T>
RenderOutput<T> composite(std::span<const T> t, std::span<const T> alpha, std::span<const T> trans,
                          const MatrixX<T>& colors) {
  const std::size_t n = alpha.size();
  if (t.size() != n || trans.size() != n || static_cast<std::size_t>(colors.cols()) != n) {
    throw DomainError("composite: sample arrays differ in length");
  }
  RenderOutput<T> out;
  out.color = VectorX<T>::Zero(colors.rows());
  out.weights.resize(n);
  T depth_sum = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T w = trans[i] * alpha[i];
    out.weights[i] = w;
    out.color += w * colors.col(static_cast<Eigen::Index>(i));
    out.accumulation += w;
    depth_sum += w * t[i];
  }
  out.depth = depth_sum / std::max(out.accumulation, T(kDepthEps));
  return out;
}

// Quadrature weights of the density baseline.
template <typename T>
std::vector<T> density_weights(std::span<const T> sigma, std::span<const T> delta) {
  if (sigma.size() != delta.size()) throw DomainError("density_weights: sigma and delta differ in length");
  std::vector<T> w(sigma.size());
  T optical = T(0);
  T total = T(0);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < T(0)) throw DomainError("density_weights: negative density");
    const T tau = sigma[i] * delta[i];
    // Capped by the remaining mass so the running sum never rounds above one.
    w[i] = std::min(std::exp(-optical) * -std::expm1(-tau), std::max(T(1) - total, T(0)));
    total += w[i];
    optical += tau;
  }
  return w;
}

// dL/dsigma given dL/dw for density_weights.
template <typename T>
std::vector<T> density_weights_backward(std::span<const T> sigma, std::span<const T> delta, std::span<const T> w,
                                        std::span<const T> d_w) {
  const std::size_t n = sigma.size();
  std::vector<T> d_sigma(n);
  T suffix = T(0);  // sum_{i > k} d_w_i w_i
  T optical = T(0);
  std::vector<T> trans(n);
  for (std::size_t i = 0; i < n; ++i) {
    trans[i] = std::exp(-optical);
    optical += sigma[i] * delta[i];
  }
  for (std::size_t k = n; k-- > 0;) {
    d_sigma[k] = d_w[k] * trans[k] * delta[k] * std::exp(-sigma[k] * delta[k]) - delta[k] * suffix;
    suffix += d_w[k] * w[k];
  }
  return d_sigma;
}

// Bin edges of the density baseline for sample points t: delta_i = t_{i+1} - t_i,
// with the final interval closed at t_far.
template <typename T>
std::vector<T> sample_deltas(std::span<const T> t, T t_far) {
  std::vector<T> d(t.size());
  for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
  if (!t.empty()) d.back() = std::max(t_far - t.back(), T(0));
  return d;
}

// Interval consistency loss between a proposal histogram (edges, w_prop) and
// the renderer's pair weights w over [t_i, t_{i+1}] (treated as constants):
//   sum_i max(0, w_i - bound_i)^2 / (w_i + eps),
// bound_i = proposal mass over bins overlapping the i-th interval.
template <typename T>
T interlevel_loss(std::span<const T> edges, std::span<const T> w_prop, std::span<const T> t, std::span<const T> w,
                  std::vector<T>* d_w_prop) {
  constexpr T eps = T(1e-7);
  const std::size_t bins = w_prop.size();
  std::vector<T> cum(bins + 1, T(0));
  for (std::size_t j = 0; j < bins; ++j) cum[j + 1] = cum[j] + w_prop[j];
  if (d_w_prop) d_w_prop->assign(bins, T(0));
  T loss = T(0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    // Bins [lo, hi) overlap [t_i, t_{i+1}].
    auto lo_it = std::upper_bound(edges.begin(), edges.end(), t[i]);
    std::size_t lo = lo_it == edges.begin() ? 0 : static_cast<std::size_t>(lo_it - edges.begin()) - 1;
    auto hi_it = std::lower_bound(edges.begin(), edges.end(), t[i + 1]);
    std::size_t hi = std::min(static_cast<std::size_t>(hi_it - edges.begin()), bins);
    lo = std::min(lo, bins);
    if (hi < lo) hi = lo;
    const T bound = cum[hi] - cum[lo];
    const T excess = w[i] - bound;
    if (excess > T(0)) {
      loss += excess * excess / (w[i] + eps);
      if (d_w_prop) {
        const T g = T(-2) * excess / (w[i] + eps);
        for (std::size_t j = lo; j < hi; ++j) (*d_w_prop)[j] += g;
      }
    }
  }
  return loss;
}

// Per-ray inputs of the terrain renderer (normalized units).
template <typename T>
struct RaySamples {
  std::vector<T> t;       // n sample parameters
  std::vector<T> z;       // n sample altitudes
  std::vector<T> height;  // n field heights
  MatrixX<T> colors;      // d x (n - 1) pair colors

  std::vector<T> pair_t() const {
    std::vector<T> m(t.size() > 0 ? t.size() - 1 : 0);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = T(0.5) * (t[i] + t[i + 1]);
    return m;
  }
};

template <typename T>
struct NtmRay {
  std::vector<T> alpha;
  std::vector<T> trans;
  RenderOutput<T> out;
};

template <typename T>
NtmRay<T> render_ntm(const RaySamples<T>& rs, T s) {
  const std::size_t n = rs.t.size();
  NtmRay<T> r;
  r.alpha.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    r.alpha[i] = ntm_opacity(rs.z[i] - rs.height[i], rs.z[i + 1] - rs.height[i + 1], s);
  }
  r.trans = product_transmittance<T>(r.alpha);
  const std::vector<T> tm = rs.pair_t();
  r.out = composite<T>(tm, r.alpha, r.trans, rs.colors);
  return r;
}

// Reverse pass of render_ntm for dL/dcolor. Accumulates dL/dheight (n),
// writes dL/dcolors (d x (n-1)) and adds dL/ds.
template <typename T>
void render_ntm_backward(const RaySamples<T>& rs, T s, const NtmRay<T>& r, const VectorX<T>& d_color,
                         std::span<T> d_height, MatrixX<T>& d_colors, T& d_s) {
  const std::size_t m = r.alpha.size();
  d_colors.resize(rs.colors.rows(), static_cast<Eigen::Index>(m));
  std::vector<T> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    g[i] = d_color.dot(rs.colors.col(static_cast<Eigen::Index>(i)));
    d_colors.col(static_cast<Eigen::Index>(i)) = r.out.weights[i] * d_color;
  }
  // dL/dalpha_k = T_k (g_k - U_k), U_k = sum_{i>k} g_i alpha_i prod_{k<j<i} (1 - alpha_j).
  T u = T(0);
  for (std::size_t k = m; k-- > 0;) {
    const T d_alpha = r.trans[k] * (g[k] - u);
    u = g[k] * r.alpha[k] + (T(1) - r.alpha[k]) * u;
    if (!(r.alpha[k] > T(0))) continue;
    const T z0 = rs.z[k] - rs.height[k];
    const T z1 = rs.z[k + 1] - rs.height[k + 1];
    const T phi0 = sigmoid_phi(s, z0);
    const T phi1 = sigmoid_phi(s, z1);
    const T ratio = phi1 / phi0;
    const T q0 = sigmoid(-s * z0);  // 1 - Phi_s(z0)
    const T q1 = sigmoid(-s * z1);
    // alpha = 1 - ratio; d ratio = ratio * (s q1 dz1 - s q0 dz0 + (z1 q1 - z0 q0) ds).
    const T d_z0 = d_alpha * ratio * s * q0;
    const T d_z1 = -d_alpha * ratio * s * q1;
    d_s += -d_alpha * ratio * (z1 * q1 - z0 * q0);
    d_height[k] -= d_z0;
    d_height[k + 1] -= d_z1;
  }
}

// Baseline compositing for sample points t with densities sigma (colors d x n).
template <typename T>
RenderOutput<T> render_density(std::span<const T> t, std::span<const T> sigma, const MatrixX<T>& colors, T t_far) {
  const std::vector<T> delta = sample_deltas<T>(t, t_far);
  const std::vector<T> w = density_weights<T>(sigma, delta);
  RenderOutput<T> out;
  out.color = VectorX<T>::Zero(colors.rows());
  out.weights = w;
  T depth_sum = T(0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.color += w[i] * colors.col(static_cast<Eigen::Index>(i));
    out.accumulation += w[i];
    depth_sum += w[i] * t[i];
  }
  out.depth = depth_sum / std::max(out.accumulation, T(kDepthEps));
  return out;
}

// Per-ray record of one proposal stage: bin edges, densities at bin centers,
// and the resulting weights.
template <typename T>
struct ProposalStage {
  std::vector<T> edges;
  std::vector<T> sigma;
  std::vector<T> weights;
};

// Fixed sample positions per ray: the edges of every proposal stage and the
// final samples. Used to evaluate the objective at frozen samples.
template <typename T>
struct FrozenSamples {
  std::vector<std::vector<std::vector<T>>> stage_edges;
  std::vector<std::vector<T>> t;
};

// Iterative importance resampling along a batch of normalized loci.
// density(stage, points 3 x P) -> 1 x P evaluates the stage's density proxy on
// all bin centers of all rays (ray-major). Returns the final sample points.
template <typename T, typename DensityFn>
std::vector<std::vector<T>> sample_proposal_batch(std::span<const Locus> loci, const SamplerConfig& cfg,
                                                  DensityFn&& density, std::span<Rng> rngs, bool jitter,
                                                  std::vector<std::vector<ProposalStage<T>>>* stages,
                                                  int* fallbacks = nullptr, const FrozenSamples<T>* frozen = nullptr) {
  const std::size_t R = loci.size();
  if (frozen && (frozen->t.size() != R || frozen->stage_edges.size() != R)) {
    throw DomainError("frozen samples do not match the ray count");
  }
  std::vector<std::vector<T>> edges(R);
  for (std::size_t r = 0; r < R; ++r) {
    require_valid(loci[r]);
    edges[r] = frozen ? frozen->stage_edges[r].at(0)
                      : uniform_edges<T>(static_cast<T>(loci[r].t_near), static_cast<T>(loci[r].t_far),
                                         cfg.proposal_samples[0]);
  }
  if (stages) stages->assign(R, std::vector<ProposalStage<T>>(cfg.proposal_samples.size()));
  for (std::size_t k = 0; k < cfg.proposal_samples.size(); ++k) {
    const int bins = cfg.proposal_samples[k];
    MatrixX<T> pts(3, static_cast<Eigen::Index>(R) * bins);
    for (std::size_t r = 0; r < R; ++r) {
      const Locus& l = loci[r];
      for (int j = 0; j < bins; ++j) {
        const T tm = T(0.5) * (edges[r][j] + edges[r][j + 1]);
        pts.col(static_cast<Eigen::Index>(r) * bins + j) = (l.origin + static_cast<double>(tm) * l.direction).cast<T>();
      }
    }
    MatrixX<T> sigma;
    density(static_cast<int>(k), pts, sigma);
    const bool last = k + 1 == cfg.proposal_samples.size();
    for (std::size_t r = 0; r < R; ++r) {
      std::vector<T> sig(bins), delta(bins);
      for (int j = 0; j < bins; ++j) {
        sig[j] = sigma(0, static_cast<Eigen::Index>(r) * bins + j);
        delta[j] = edges[r][j + 1] - edges[r][j];
      }
      std::vector<T> w = density_weights<T>(sig, delta);
      const int next = last ? cfg.final_samples : cfg.proposal_samples[k + 1] + 1;
      bool fb = false;
      std::vector<T> resampled = sample_pdf<T>(edges[r], w, next, jitter, rngs[r], cfg.pdf_padding, &fb);
      if (fb && fallbacks) ++*fallbacks;
      if (stages) (*stages)[r][k] = ProposalStage<T>{edges[r], sig, w};
      if (frozen) resampled = last ? frozen->t[r] : frozen->stage_edges[r].at(k + 1);
      edges[r] = std::move(resampled);
    }
  }
  return edges;
}

// Sample points for one batch of loci under either sampler.
template <typename T, typename DensityFn>
std::vector<std::vector<T>> sample_rays(std::span<const Locus> loci, const SamplerConfig& cfg, DensityFn&& density,
                                        std::span<Rng> rngs, bool jitter,
                                        std::vector<std::vector<ProposalStage<T>>>* stages = nullptr,
                                        const FrozenSamples<T>* frozen = nullptr) {
  if (cfg.kind == SamplerConfig::Kind::Uniform) {
    if (frozen) return frozen->t;
    std::vector<std::vector<T>> out(loci.size());
    for (std::size_t r = 0; r < loci.size(); ++r) out[r] = sample_uniform<T>(loci[r], cfg.uniform_samples, jitter, rngs[r]);
    return out;
  }
  return sample_proposal_batch<T>(loci, cfg, density, rngs, jitter, stages, nullptr, frozen);
}

// Fields seen by the renderer: heights and colors over normalized (x, y), the
// opacity scale, and (optionally) proposal densities over normalized (x, y, z).
template <typename F, typename T>
concept TerrainFields = requires(const F& f, const MatrixX<T>& p, MatrixX<T>& out, int k) {
  { f.heights(p, out) };
  { f.colors(p, out) };
  { f.proposal_density(k, p, out) };
  { f.scale() } -> std::convertible_to<T>;
  { f.channels() } -> std::convertible_to<int>;
};

// Adapter exposing a trained model to the renderer.
template <typename T>
struct ModelFields {
  const NtmModel<T>& model;

  void heights(const MatrixX<T>& p, MatrixX<T>& out) const { model.height.forward(p, out, nullptr); }
  void colors(const MatrixX<T>& p, MatrixX<T>& out) const { model.color.forward(p, out, nullptr); }
  void proposal_density(int k, const MatrixX<T>& p, MatrixX<T>& out) const {
    if (k >= static_cast<int>(model.proposals.size())) throw ConfigError("sampler has more stages than proposal fields");
    model.proposals[static_cast<std::size_t>(k)].forward(p, out, nullptr);
  }
  T scale() const { return model.scale(); }
  int channels() const { return model.spec().channels; }
};

// Gathers field query points for rays with known sample parameters: heights at
// every sample (hp, 2 x sum n) and colors at pair midpoints (cp, 2 x sum (n-1)).
template <typename T>
std::vector<RaySamples<T>> gather_sample_points(std::span<const Locus> loci, const std::vector<std::vector<T>>& t,
                                                MatrixX<T>& hp, MatrixX<T>& cp) {
  Eigen::Index nh = 0, nc = 0;
  for (const auto& ts : t) {
    nh += static_cast<Eigen::Index>(ts.size());
    nc += static_cast<Eigen::Index>(ts.size()) - 1;
  }
  hp.resize(2, nh);
  cp.resize(2, nc);
  std::vector<RaySamples<T>> rs(loci.size());
  Eigen::Index ih = 0, ic = 0;
  for (std::size_t r = 0; r < loci.size(); ++r) {
    const Locus& l = loci[r];
    rs[r].t = t[r];
    rs[r].z.resize(t[r].size());
    for (std::size_t i = 0; i < t[r].size(); ++i) {
      const Vec3 x = l.at(static_cast<double>(t[r][i]));
      hp.col(ih++) = x.head<2>().cast<T>();
      rs[r].z[i] = static_cast<T>(x.z());
      if (i + 1 < t[r].size()) {
        const Vec3 xm = l.at(0.5 * (static_cast<double>(t[r][i]) + static_cast<double>(t[r][i + 1])));
        cp.col(ic++) = xm.head<2>().cast<T>();
      }
    }
  }
  return rs;
}

// Distributes field outputs (1 x sum n heights, d x sum (n-1) colors) back to rays.
template <typename T>
void scatter_fields(std::vector<RaySamples<T>>& rs, const MatrixX<T>& h, const MatrixX<T>& c) {
  Eigen::Index ih = 0, ic = 0;
  for (auto& r : rs) {
    const Eigen::Index n = static_cast<Eigen::Index>(r.t.size());
    r.height.assign(h.data() + ih, h.data() + ih + n);
    r.colors = c.middleCols(ic, n - 1);
    ih += n;
    ic += n - 1;
  }
}

template <typename T, typename Fields>
std::vector<RaySamples<T>> evaluate_samples(const Fields& fields, std::span<const Locus> loci,
                                            const std::vector<std::vector<T>>& t) {
  MatrixX<T> hp, cp, h, c;
  std::vector<RaySamples<T>> rs = gather_sample_points<T>(loci, t, hp, cp);
  fields.heights(hp, h);
  fields.colors(cp, c);
  scatter_fields(rs, h, c);
  return rs;
}

// Full pipeline for normalized, box-clipped loci: sample, evaluate, composite.
template <typename T, typename Fields>
  requires TerrainFields<Fields, T>
std::vector<RenderOutput<T>> render_rays(const Fields& fields, std::span<const Locus> loci, const SamplerConfig& cfg,
                                         std::span<Rng> rngs, bool jitter) {
  auto density = [&](int k, const MatrixX<T>& p, MatrixX<T>& out) { fields.proposal_density(k, p, out); };
  const auto t = sample_rays<T>(loci, cfg, density, rngs, jitter);
  const auto rs = evaluate_samples<T>(fields, loci, t);
  std::vector<RenderOutput<T>> out(loci.size());
  const T s = static_cast<T>(fields.scale());
  for (std::size_t r = 0; r < loci.size(); ++r) out[r] = render_ntm(rs[r], s).out;
  return out;
}

template <typename T, typename Fields>
  requires TerrainFields<Fields, T>
RenderOutput<T> render_pixel(const Fields& fields, const Locus& locus, const SamplerConfig& cfg, Rng& rng,
                             bool jitter = false) {
  std::span<const Locus> one(&locus, 1);
  return render_rays<T>(fields, one, cfg, std::span<Rng>(&rng, 1), jitter).front();
}

}  // namespace ntm

#endif  // NTM_RENDER_HPP
