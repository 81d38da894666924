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


// Fixtures and reference checks shared by the unit tests and the acceptance runner.

#ifndef NTM_TESTS_SUPPORT_HPP
#define NTM_TESTS_SUPPORT_HPP

#include "ntm/synthscene.hpp"
#include "ntm/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ntm::testing {

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Small hills scene: a few low-resolution views over the preset geometry.
inline Dataset tiny_scene(std::uint64_t seed, int views = 3, int size = 16, int channels = 3) {
  ScenePreset p = scene_preset("ges-smoke");
  p.pass.count = views;
  p.pass.width = p.pass.height = size;
  p.channels = channels;
  return build_preset(p, seed);
}

inline ModelSpec tiny_model_spec(int channels = 3) {
  ModelSpec s;
  s.height_encoding = {4, 4, 64, 12, 2, 2, 10.0};
  s.color_encoding = {4, 4, 64, 12, 2, 2, 10.0};
  s.height_hidden = 16;
  s.height_layers = 4;
  s.height_skip_layer = 2;
  s.color_hidden = 16;
  s.color_layers = 2;
  s.channels = channels;
  s.proposal_networks = 2;
  s.proposal.encoding = {3, 4, 32, 10, 2, 3, 10.0};
  s.proposal.hidden_width = 8;
  s.proposal.layers = 2;
  return s;
}

inline SamplerConfig tiny_sampler() {
  SamplerConfig c;
  c.proposal_samples = {16, 12};
  c.final_samples = 12;
  return c;
}

struct GradProbe {
  std::string block;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel = 0.0;
};

// Compares the trainer gradient against central differences of the objective
// at frozen samples. Field parameters and s are probed on the photometric loss,
// proposal parameters on the interlevel loss (the two are decoupled by the
// stop-gradient on the main weights). For every network, `per_network`
// parameters of its MLP and of its hash table are probed.
inline std::vector<GradProbe> gradient_probes(std::uint64_t seed, int per_network, double step = 1e-6) {
  const Dataset data = tiny_scene(seed);
  NtmModel<double> model(tiny_model_spec(), data.frame);
  model.initialize(seed);
  // A non-zero head so gradients reach every height parameter.
  Rng head_rng(seed, 77);
  auto& head = model.height.mlp.weight(model.height.mlp.layers() - 1);
  for (Eigen::Index i = 0; i < head.size(); ++i) head.data()[i] = head_rng.uniform(-0.3, 0.3);
  for (auto& p : model.proposals) {
    auto& w = p.mlp.weight(p.mlp.layers() - 1);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = head_rng.uniform(-1.0, 1.0);
  }
  TrainConfig cfg;
  cfg.batch_size = 24;
  cfg.seed = seed;
  cfg.threads = 1;
  Trainer<double> trainer(std::move(model), cfg, tiny_sampler());
  Rng batch_rng(seed, 5);
  const PixelBatch batch = sample_batch(data, cfg.batch_size, batch_rng);
  trainer.freeze_samples(batch, 0);
  trainer.compute_gradient(batch, 0);
  const NtmModel<double> grad = trainer.gradient();

  auto blocks = trainer.model().parameter_blocks();
  const auto gblocks = grad.parameter_blocks();
  Rng pick(seed, 99);
  std::vector<GradProbe> out;
  auto probe = [&](std::size_t b, Eigen::Index i) {
    double* p = blocks[b].data + i;
    const double keep = *p;
    auto objective = [&] {
      const StepMetrics m = trainer.evaluate(batch, 0);
      return blocks[b].proposal ? m.interlevel * cfg.interlevel_weight : m.loss;
    };
    *p = keep + step;
    const double fp = objective();
    *p = keep - step;
    const double fm = objective();
    *p = keep;
    GradProbe g;
    g.block = blocks[b].name;
    g.index = i;
    g.analytic = gblocks[b].data[i];
    g.numeric = (fp - fm) / (2 * step);
    g.rel = rel_err(g.analytic, g.numeric);
    out.push_back(g);
  };
  // Group blocks by network prefix ("height", "color", "proposal0", ...).
  auto network_of = [](const std::string& name) { return name.substr(0, name.find('.')); };
  std::vector<std::string> nets;
  for (const auto& b : blocks) {
    const std::string n = network_of(b.name);
    if (std::find(nets.begin(), nets.end(), n) == nets.end()) nets.push_back(n);
  }
  for (const auto& net : nets) {
    if (net == "log_scale") {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].name == "log_scale") probe(b, 0);
      }
      continue;
    }
    // MLP weights and biases as one pool.
    std::vector<std::pair<std::size_t, Eigen::Index>> mlp_pool, table_pool;
    double table_max = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (network_of(blocks[b].name) != net) continue;
      const bool table = blocks[b].name.ends_with(".table");
      for (Eigen::Index i = 0; i < blocks[b].size; ++i) {
        if (table) {
          table_max = std::max(table_max, std::abs(gblocks[b].data[i]));
        } else {
          mlp_pool.emplace_back(b, i);
        }
      }
    }
    // Table entries touched by the batch, excluding negligible ones.
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (network_of(blocks[b].name) != net || !blocks[b].name.ends_with(".table")) continue;
      for (Eigen::Index i = 0; i < blocks[b].size; ++i) {
        if (std::abs(gblocks[b].data[i]) > 1e-3 * table_max) table_pool.emplace_back(b, i);
      }
    }
    for (const auto* pool : {&mlp_pool, &table_pool}) {
      for (int k = 0; k < per_network && !pool->empty(); ++k) {
        const auto& [b, i] = (*pool)[pick.below(pool->size())];
        probe(b, i);
      }
    }
  }
  return out;
}

}  // namespace ntm::testing

#endif  // NTM_TESTS_SUPPORT_HPP
