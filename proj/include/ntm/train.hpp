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


// Pixel batches, the L1 photometric loss and the optimization loop.

#ifndef NTM_TRAIN_HPP
#define NTM_TRAIN_HPP

#include "ntm/dataset.hpp"
#include "ntm/field.hpp"
#include "ntm/render.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

namespace ntm {

struct TrainConfig {
  int iterations = 100000;
  int batch_size = 2048;
  double lr_fields = 3e-4;
  double lr_proposal = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double interlevel_weight = 1.0;
  std::uint64_t seed = 0;
  int eval_every = 1000;
  int checkpoint_every = 10000;
  int threads = 1;
  int chunk_rays = 128;  // rays per forward/backward chunk

  void validate() const {
    if (iterations < 1 || batch_size < 1 || eval_every < 1 || checkpoint_every < 1 || threads < 1 || chunk_rays < 1) {
      throw ConfigError("training counts must be positive");
    }
    if (!(lr_fields > 0.0) || !(lr_proposal > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw ConfigError("invalid Adam constants");
    }
    if (!(interlevel_weight >= 0.0)) throw ConfigError("interlevel weight must be non-negative");
  }
};

// Normalized, box-clipped loci with their target colors (channels x M).
struct PixelBatch {
  std::vector<Locus> loci;
  MatrixX<double> targets;
  std::vector<int> image_ids;
  std::vector<std::int64_t> pixel_ids;  // row-major pixel index within the image

  std::size_t size() const { return loci.size(); }
};

// Locus of the center of pixel (x, y), normalized and clipped; nullopt if it misses the box.
std::optional<Locus> pixel_locus(const Dataset& data, int view, int x, int y);

// Draws pixels uniformly over all pixels of all images. Exhaustive mode walks
// every pixel once in order (images, then rows, then columns) and wraps.
class PixelSampler {
 public:
  enum class Mode { Random, Exhaustive };

  PixelSampler(const Dataset& data, Mode mode = Mode::Random);
  PixelBatch next(int batch_size, Rng& rng);

 private:
  void locate(std::size_t global, int& view, int& x, int& y) const;

  const Dataset& data_;
  Mode mode_;
  std::vector<std::size_t> first_;  // first global pixel index of each view
  std::size_t total_ = 0;
  std::size_t cursor_ = 0;
};

PixelBatch sample_batch(const Dataset& data, int batch_size, Rng& rng);

// Mean over the batch of per-pixel L1 norms; optional gradient (sign / M).
template <typename T>
T l1_loss(const MatrixX<T>& predicted, const MatrixX<T>& target, MatrixX<T>* grad = nullptr) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw DomainError("l1_loss: prediction and target shapes differ");
  }
  const Eigen::Index m = predicted.cols();
  if (m == 0) return T(0);
  const auto diff = (predicted - target).array();
  if (grad) *grad = (diff.sign() / T(m)).matrix();
  return diff.abs().sum() / T(m);
}

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const NtmModel<T>& model, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& b : model.parameter_blocks()) {
      m_.push_back(VectorX<T>::Zero(b.size));
      v_.push_back(VectorX<T>::Zero(b.size));
    }
  }

  void step(NtmModel<T>& model, const NtmModel<T>& grad) {
    ++steps_;
    auto blocks = model.parameter_blocks();
    const auto gblocks = grad.parameter_blocks();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2), eps = static_cast<T>(cfg_.epsilon);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const double lr = blocks[i].proposal ? cfg_.lr_proposal : cfg_.lr_fields;
      if (lr == 0.0) continue;
      auto p = blocks[i].vec().array();
      const auto g = gblocks[i].vec().array();
      auto m = m_[i].array();
      auto v = v_[i].array();
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g.square();
      const T step = static_cast<T>(lr / bc1);
      const T inv_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
      p -= step * m / ((v.sqrt() * inv_bc2) + eps);
    }
  }

  std::int64_t steps() const { return steps_; }
  void set_config(const TrainConfig& cfg) { cfg_ = cfg; }

 private:
  TrainConfig cfg_;
  std::vector<VectorX<T>> m_, v_;
  std::int64_t steps_ = 0;
};

struct StepMetrics {
  double loss = 0.0;        // photometric L1
  double interlevel = 0.0;  // proposal consistency
  double s = 0.0;
  double mean_accumulation = 0.0;
  int rays = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(NtmModel<T> model, const TrainConfig& cfg, const SamplerConfig& sampler)
      : model_(std::move(model)), cfg_(cfg), sampler_(sampler), adam_(model_, cfg) {
    cfg_.validate();
    sampler_.validate();
    if (sampler_.kind == SamplerConfig::Kind::Proposal &&
        static_cast<int>(model_.proposals.size()) < sampler_.stages()) {
      throw ConfigError("sampler has more proposal stages than the model has proposal networks");
    }
    grads_.push_back(model_.zeros_like());
    for (int w = 1; w < cfg_.threads; ++w) grads_.push_back(model_.zeros_like());
  }

  NtmModel<T>& model() { return model_; }
  const NtmModel<T>& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const SamplerConfig& sampler() const { return sampler_; }
  // Gradient of the last step (reduced over workers).
  const NtmModel<T>& gradient() const { return grads_.front(); }

  // Loss and gradient of the current parameters on one batch, without an update.
  StepMetrics compute_gradient(const PixelBatch& batch, std::uint64_t iteration) {
    return run(batch, iteration, true);
  }

  StepMetrics evaluate(const PixelBatch& batch, std::uint64_t iteration) { return run(batch, iteration, false); }

  // Records the sample positions drawn for this batch and reuses them in later
  // calls, so the objective becomes a smooth function of every parameter.
  void freeze_samples(const PixelBatch& batch, std::uint64_t iteration) {
    frozen_.reset();
    recording_.stage_edges.assign(batch.size(), {});
    recording_.t.assign(batch.size(), {});
    record_ = true;
    run(batch, iteration, false);
    record_ = false;
    frozen_ = std::move(recording_);
    recording_ = {};
  }
  void unfreeze_samples() { frozen_.reset(); }

  // One optimizer update; throws RuntimeAbort on a non-finite loss.
  StepMetrics step(const PixelBatch& batch, std::uint64_t iteration) {
    StepMetrics m = run(batch, iteration, true);
    if (!std::isfinite(m.loss) || !std::isfinite(m.interlevel)) {
      std::ostringstream os;
      os << "non-finite loss at iteration " << iteration << " (loss " << m.loss << ", interlevel " << m.interlevel
         << ", s " << m.s << "); batch image ids";
      for (std::size_t i = 0; i < std::min<std::size_t>(batch.size(), 8); ++i) {
        os << " " << batch.image_ids[i] << ":" << batch.pixel_ids[i];
      }
      throw RuntimeAbort(os.str());
    }
    adam_.step(model_, grads_.front());
    return m;
  }

 private:
  struct Partial {
    double loss = 0.0;
    double interlevel = 0.0;
    double accumulation = 0.0;
  };

  StepMetrics run(const PixelBatch& batch, std::uint64_t iteration, bool with_grad) {
    const std::size_t M = batch.size();
    if (M == 0) throw DomainError("empty batch");
    if (batch.targets.rows() != model_.spec().channels) throw ConfigError("target channels differ from the model");
    const int workers = std::max(1, std::min<int>(cfg_.threads, static_cast<int>(M)));
    std::vector<Partial> parts(workers);
    if (with_grad) {
      for (int w = 0; w < workers; ++w) grads_[w].set_zero();
    }
    auto work = [&](int w) {
      const std::size_t begin = M * w / workers, end = M * (w + 1) / workers;
      for (std::size_t c = begin; c < end; c += cfg_.chunk_rays) {
        const std::size_t stop = std::min(end, c + static_cast<std::size_t>(cfg_.chunk_rays));
        chunk(batch, c, stop, iteration, with_grad ? &grads_[w] : nullptr, parts[w]);
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    StepMetrics m;
    for (int w = 0; w < workers; ++w) {
      m.loss += parts[w].loss;
      m.interlevel += parts[w].interlevel;
      m.mean_accumulation += parts[w].accumulation;
    }
    if (with_grad) {
      // Fixed-order reduction keeps results independent of scheduling.
      auto dst = grads_[0].parameter_blocks();
      for (int w = 1; w < workers; ++w) {
        const auto src = grads_[w].parameter_blocks();
        for (std::size_t b = 0; b < dst.size(); ++b) dst[b].vec() += src[b].vec();
      }
    }
    m.loss /= static_cast<double>(M);
    m.interlevel /= static_cast<double>(M);
    m.mean_accumulation /= static_cast<double>(M);
    m.s = static_cast<double>(model_.scale());
    m.rays = static_cast<int>(M);
    return m;
  }

  void chunk(const PixelBatch& batch, std::size_t begin, std::size_t end, std::uint64_t iteration, NtmModel<T>* grad,
             Partial& part) const {
    const std::size_t R = end - begin;
    const std::span<const Locus> loci(batch.loci.data() + begin, R);
    const T inv_m = T(1) / static_cast<T>(batch.size());
    const T s = model_.scale();
    std::vector<Rng> rngs;
    rngs.reserve(R);
    const std::uint64_t stream_seed = mix64(cfg_.seed) ^ mix64(iteration + 0x5eed);
    for (std::size_t r = begin; r < end; ++r) rngs.emplace_back(stream_seed, r);

    const int stages = sampler_.stages();
    std::vector<FieldCache<T>> pcache(stages);
    std::vector<MatrixX<T>> psigma(stages);
    auto density = [&](int k, const MatrixX<T>& p, MatrixX<T>& out) {
      model_.proposals[static_cast<std::size_t>(k)].forward(p, out, grad ? &pcache[k] : nullptr);
      if (grad) psigma[k] = out;
    };
    std::vector<std::vector<ProposalStage<T>>> stage_rec;
    std::optional<FrozenSamples<T>> slice;
    if (frozen_) {
      if (frozen_->t.size() != batch.size()) throw DomainError("frozen samples belong to a batch of another size");
      slice.emplace();
      slice->stage_edges.assign(frozen_->stage_edges.begin() + begin, frozen_->stage_edges.begin() + end);
      slice->t.assign(frozen_->t.begin() + begin, frozen_->t.begin() + end);
    }
    const auto t = sample_rays<T>(loci, sampler_, density, std::span<Rng>(rngs), true, &stage_rec,
                                  slice ? &*slice : nullptr);
    if (record_) {
      for (std::size_t r = 0; r < R; ++r) {
        recording_.t[begin + r] = t[r];
        for (const auto& st : stage_rec.empty() ? std::vector<ProposalStage<T>>{} : stage_rec[r]) {
          recording_.stage_edges[begin + r].push_back(st.edges);
        }
      }
    }

    MatrixX<T> hp, cp, h, c;
    std::vector<RaySamples<T>> rs = gather_sample_points<T>(loci, t, hp, cp);
    FieldCache<T> hcache, ccache;
    model_.height.forward(hp, h, grad ? &hcache : nullptr);
    model_.color.forward(cp, c, grad ? &ccache : nullptr);
    scatter_fields(rs, h, c);

    MatrixX<T> d_h, d_c, d_ray_c;
    if (grad) {
      d_h.setZero(1, h.cols());
      d_c.setZero(c.rows(), c.cols());
    }
    std::vector<MatrixX<T>> d_sigma(stages);
    for (int k = 0; k < stages && grad; ++k) d_sigma[k].setZero(1, psigma[k].cols());
    T d_s = T(0);
    Eigen::Index ih = 0, ic = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const NtmRay<T> ray = render_ntm(rs[r], s);
      const VectorX<T> target = batch.targets.col(static_cast<Eigen::Index>(begin + r)).template cast<T>();
      const VectorX<T> residual = ray.out.color - target;
      part.loss += static_cast<double>(residual.cwiseAbs().sum());
      part.accumulation += static_cast<double>(ray.out.accumulation);
      const Eigen::Index n = static_cast<Eigen::Index>(rs[r].t.size());
      if (grad) {
        const VectorX<T> d_color = residual.array().sign().matrix() * inv_m;
        render_ntm_backward(rs[r], s, ray, d_color, std::span<T>(d_h.data() + ih, n), d_ray_c, d_s);
        d_c.middleCols(ic, n - 1) = d_ray_c;
      }
      for (int k = 0; k < stages; ++k) {
        const ProposalStage<T>& st = stage_rec[r][k];
        const std::size_t bins = st.weights.size();
        std::vector<T> d_w;
        part.interlevel += static_cast<double>(
            interlevel_loss<T>(st.edges, st.weights, rs[r].t, ray.out.weights, grad ? &d_w : nullptr));
        if (grad) {
          const T scale = static_cast<T>(cfg_.interlevel_weight) * inv_m;
          for (auto& v : d_w) v *= scale;
          std::vector<T> delta(bins);
          for (std::size_t j = 0; j < bins; ++j) delta[j] = st.edges[j + 1] - st.edges[j];
          const std::vector<T> ds = density_weights_backward<T>(st.sigma, delta, st.weights, d_w);
          const auto off = static_cast<Eigen::Index>(r * bins);
          for (std::size_t j = 0; j < bins; ++j) d_sigma[k](0, off + static_cast<Eigen::Index>(j)) = ds[j];
        }
      }
      ih += n;
      ic += n - 1;
    }
    if (!grad) return;
    model_.height.backward(hcache, d_h, grad->height);
    model_.color.backward(ccache, d_c, grad->color);
    grad->log_scale += d_s * s;  // s = exp(rho)
    for (int k = 0; k < stages; ++k) {
      model_.proposals[k].backward(pcache[k], psigma[k], d_sigma[k], grad->proposals[k]);
    }
  }

  NtmModel<T> model_;
  TrainConfig cfg_;
  SamplerConfig sampler_;
  Adam<T> adam_;
  std::vector<NtmModel<T>> grads_;
  std::optional<FrozenSamples<T>> frozen_;
  // Written by chunk() only while freeze_samples() runs; workers touch disjoint rays.
  mutable FrozenSamples<T> recording_;
  bool record_ = false;
};

struct MetricsRow {
  int iteration = 0;
  double loss = 0.0;
  double s = 0.0;
  double mean_accumulation = 0.0;
  double wall_time_s = 0.0;
};

template <typename T>
struct LoopHooks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(int, const NtmModel<T>&)> on_checkpoint;
};

// Runs cfg.iterations updates. Metrics rows are emitted at iterations
// 0, eval_every, 2 eval_every, ... and at the final iteration, each holding the
// loss of the parameters after that many updates. On abort the current model
// is passed to on_checkpoint with a negative iteration before rethrowing.
template <typename T>
void train_loop(Trainer<T>& trainer, const Dataset& data, const LoopHooks<T>& hooks) {
  const TrainConfig& cfg = trainer.config();
  PixelSampler sampler(data);
  Rng batch_rng(cfg.seed, 0xba7c4);
  const auto start = std::chrono::steady_clock::now();
  auto emit = [&](int it, const StepMetrics& m) {
    if (!hooks.on_metrics) return;
    MetricsRow row{it, m.loss, m.s, m.mean_accumulation,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    hooks.on_metrics(row);
  };
  int it = 0;
  try {
    for (; it < cfg.iterations; ++it) {
      const PixelBatch batch = sampler.next(cfg.batch_size, batch_rng);
      const StepMetrics m = trainer.step(batch, static_cast<std::uint64_t>(it));
      if (it % cfg.eval_every == 0) emit(it, m);
      if (it > 0 && it % cfg.checkpoint_every == 0 && hooks.on_checkpoint) hooks.on_checkpoint(it, trainer.model());
    }
    const PixelBatch batch = sampler.next(cfg.batch_size, batch_rng);
    const StepMetrics final_metrics = trainer.evaluate(batch, static_cast<std::uint64_t>(it));
    if (!std::isfinite(final_metrics.loss)) throw RuntimeAbort("non-finite loss after the final update");
    emit(it, final_metrics);
    if (hooks.on_checkpoint) hooks.on_checkpoint(it, trainer.model());
  } catch (const RuntimeAbort&) {
    if (hooks.on_checkpoint) hooks.on_checkpoint(-1 - it, trainer.model());
    throw;
  }
}

}  // namespace ntm

#endif  // NTM_TRAIN_HPP
