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


#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <set>

using namespace ntm;
using namespace ntm::testing;

namespace {

// One nadir view of w x h pixels over a 2 km box; pixel values encode their index.
Dataset hand_dataset(const std::vector<std::pair<int, int>>& sizes, double fov = 0.2) {
  Dataset d;
  d.frame.bbox_min = Vec3(-1000, -1000, 0);
  d.frame.bbox_max = Vec3(1000, 1000, 500);
  d.channels = 1;
  for (std::size_t v = 0; v < sizes.size(); ++v) {
    PinholeModel m;
    m.position = Vec3(0, 0, 250e3);
    m.orientation = look_at(m.position, Vec3::Zero());
    m.field_of_view_deg = fov;
    m.width = sizes[v].first;
    m.height = sizes[v].second;
    View view;
    view.name = "v" + std::to_string(v);
    view.camera = m;
    view.image = Image(m.width, m.height, 1);
    for (std::size_t i = 0; i < view.image.data.size(); ++i) {
      view.image.data[i] = static_cast<float>(i) / static_cast<float>(view.image.data.size());
    }
    d.views.push_back(view);
  }
  return d;
}

std::vector<ParamBlock<double>> blocks_of(const NtmModel<double>& m) { return m.parameter_blocks(); }

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("l1 loss examples") {
    MatrixX<double> a(1, 2), b(1, 2), g;
    a << 0.5, 0.25;
    b << 1.0, 0.25;
    CHECK(l1_loss(a, b) == 0.25);
    CHECK(l1_loss(a, a) == 0.0);
    MatrixX<double> p = MatrixX<double>::Random(3, 7), t = MatrixX<double>::Random(3, 7);
    const double l = l1_loss(p, t, &g);
    CHECK(l >= 0.0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      CHECK(std::abs(g.data()[i]) == doctest::Approx(1.0 / 7));
      MatrixX<double> hi = p, lo = p;
      hi.data()[i] += 1e-6;
      lo.data()[i] -= 1e-6;
      CHECK(rel_err((l1_loss(hi, t) - l1_loss(lo, t)) / 2e-6, g.data()[i]) < 1e-6);
    }
    CHECK_THROWS_AS(l1_loss(a, MatrixX<double>(2, 2)), DomainError);
  }

  TEST_CASE("exhaustive batch covers every pixel once") {
    const Dataset d = hand_dataset({{2, 2}});
    PixelSampler s(d, PixelSampler::Mode::Exhaustive);
    Rng rng(1);
    const PixelBatch b = s.next(4, rng);
    REQUIRE(b.size() == 4);
    std::set<std::int64_t> ids(b.pixel_ids.begin(), b.pixel_ids.end());
    CHECK(ids == std::set<std::int64_t>{0, 1, 2, 3});
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(b.targets(0, static_cast<Eigen::Index>(i)) == doctest::Approx(b.pixel_ids[i] / 4.0));
    }
  }

  TEST_CASE("random batches are uniform over pixels and reproducible") {
    const Dataset d = hand_dataset({{2, 2}, {4, 3}});
    Rng a(9), b(9);
    const PixelBatch x = sample_batch(d, 4000, a);
    const PixelBatch y = sample_batch(d, 4000, b);
    CHECK(x.pixel_ids == y.pixel_ids);
    CHECK(x.image_ids == y.image_ids);
    CHECK(x.loci.size() == x.image_ids.size());
    CHECK(x.targets.cols() == static_cast<Eigen::Index>(x.size()));
    CHECK(x.targets.minCoeff() >= 0.0);
    CHECK(x.targets.maxCoeff() <= 1.0);
    const double share = std::count(x.image_ids.begin(), x.image_ids.end(), 1) / 4000.0;
    CHECK(share == doctest::Approx(12.0 / 16.0).epsilon(0.05));
    for (const Locus& l : x.loci) {
      CHECK(l.t_near < l.t_far);
      CHECK(std::isfinite(l.t_far));
    }
  }

  TEST_CASE("pixels missing the box are never drawn") {
    // Wide field of view: the outer pixels see beyond the 2 km box.
    const Dataset d = hand_dataset({{8, 8}}, 1.0);
    int missing = 0;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) missing += !pixel_locus(d, 0, x, y).has_value();
    }
    REQUIRE(missing > 0);
    Rng rng(3);
    const PixelBatch b = sample_batch(d, 500, rng);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const int x = static_cast<int>(b.pixel_ids[i] % 8), y = static_cast<int>(b.pixel_ids[i] / 8);
      CHECK(pixel_locus(d, 0, x, y).has_value());
    }
  }

  TEST_CASE("empty dataset is rejected") {
    Dataset d = hand_dataset({});
    Rng rng(1);
    CHECK_THROWS(sample_batch(d, 4, rng));
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.lr_fields = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("full pipeline gradient matches finite differences") {
    const auto probes = gradient_probes(4, 10);
    int proposal = 0, tables = 0, scale = 0;
    for (const auto& p : probes) {
      INFO(p.block << "[" << p.index << "] analytic " << p.analytic << " numeric " << p.numeric);
      CHECK(p.rel < 1e-3);
      proposal += p.block.starts_with("proposal");
      tables += p.block.ends_with(".table");
      scale += p.block == "log_scale";
    }
    CHECK(scale == 1);
    CHECK(proposal == 40);
    CHECK(tables == 40);
    CHECK(probes.size() == 81);
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    const Dataset data = tiny_scene(1);
    NtmModel<double> model(tiny_model_spec(), data.frame);
    model.initialize(1);
    TrainConfig cfg;
    cfg.batch_size = 16;
    Trainer<double> trainer(model, cfg, tiny_sampler());
    Rng rng(2);
    trainer.compute_gradient(sample_batch(data, 16, rng), 0);
    TrainConfig zero = cfg;
    zero.lr_fields = zero.lr_proposal = 0.0;
    Adam<double> adam(model, zero);
    NtmModel<double> after = model;
    adam.step(after, trainer.gradient());
    const auto x = blocks_of(model), y = blocks_of(after);
    for (std::size_t b = 0; b < x.size(); ++b) {
      CHECK(std::equal(x[b].data, x[b].data + x[b].size, y[b].data));
    }
    // A positive rate does move them.
    Adam<double> moving(model, cfg);
    moving.step(after, trainer.gradient());
    CHECK(after.log_scale != model.log_scale);
  }

  TEST_CASE("converged constant color gives zero loss") {
    ScenePreset p = scene_preset("ges-smoke");
    p.pass.count = 2;
    p.pass.width = p.pass.height = 8;
    p.terrain.texture.kind = Texture::Kind::Constant;
    p.terrain.texture.color = Vec3(0.3, 0.5, 0.7);
    const Dataset data = build_preset(p, 1);
    NtmModel<double> model(tiny_model_spec(), data.frame);
    model.initialize(1);
    const int last = model.color.mlp.layers() - 1;
    model.color.mlp.weight(last).setZero();
    model.color.mlp.bias(last) << std::log(0.3 / 0.7), 0.0, std::log(0.7 / 0.3);
    model.log_scale = std::log(1e4);
    TrainConfig cfg;
    Trainer<double> trainer(model, cfg, tiny_sampler());
    Rng rng(3);
    const StepMetrics m = trainer.evaluate(sample_batch(data, 64, rng), 0);
    CHECK(m.loss < 1e-6);
    CHECK(m.mean_accumulation == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("training loop is reproducible and logs every eval period") {
    const Dataset data = tiny_scene(2);
    auto run = [&](int threads) {
      NtmModel<float> model(tiny_model_spec(), data.frame);
      model.initialize(5);
      TrainConfig cfg;
      cfg.iterations = 12;
      cfg.eval_every = 4;
      cfg.batch_size = 64;
      cfg.chunk_rays = 16;
      cfg.seed = 5;
      cfg.threads = threads;
      Trainer<float> trainer(model, cfg, tiny_sampler());
      std::vector<MetricsRow> rows;
      std::vector<int> ckpts;
      LoopHooks<float> hooks;
      hooks.on_metrics = [&](const MetricsRow& r) { rows.push_back(r); };
      hooks.on_checkpoint = [&](int it, const NtmModel<float>&) { ckpts.push_back(it); };
      train_loop(trainer, data, hooks);
      return std::make_pair(rows, ckpts);
    };
    for (int threads : {1, 3}) {
      const auto [a, ca] = run(threads);
      const auto [b, cb] = run(threads);
      REQUIRE(a.size() == 12 / 4 + 1);
      REQUIRE(b.size() == a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].iteration == static_cast<int>(4 * i));
        CHECK(a[i].loss == b[i].loss);
        CHECK(a[i].s == b[i].s);
        CHECK(a[i].loss >= 0.0);
        CHECK(a[i].s > 0.0);
      }
      CHECK(ca == std::vector<int>{12});
    }
  }

  TEST_CASE("non-finite loss aborts with a diagnostic and a checkpoint") {
    const Dataset data = tiny_scene(3);
    NtmModel<float> model(tiny_model_spec(), data.frame);
    model.initialize(1);
    model.color.mlp.bias(0)(0) = std::numeric_limits<float>::quiet_NaN();
    TrainConfig cfg;
    cfg.iterations = 5;
    cfg.batch_size = 16;
    Trainer<float> trainer(model, cfg, tiny_sampler());
    std::vector<int> ckpts;
    LoopHooks<float> hooks;
    hooks.on_checkpoint = [&](int it, const NtmModel<float>&) { ckpts.push_back(it); };
    try {
      train_loop(trainer, data, hooks);
      FAIL("expected an abort");
    } catch (const RuntimeAbort& e) {
      const std::string msg = e.what();
      CHECK(msg.find("iteration 0") != std::string::npos);
      CHECK(msg.find(" s ") != std::string::npos);
      CHECK(msg.find("image ids") != std::string::npos);
    }
    CHECK(ckpts == std::vector<int>{-1});
  }

  TEST_CASE("loss decreases on the flat scene") {
    // Median over three seeds of loss(500) < loss(10).
    ScenePreset p = scene_preset("flat-smoke");
    int improved = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
      const Dataset data = build_preset(p, seed);
      NtmModel<float> model(tiny_model_spec(), data.frame);
      model.initialize(seed);
      TrainConfig cfg;
      cfg.iterations = 500;
      cfg.eval_every = 10;
      cfg.batch_size = 256;
      cfg.seed = seed;
      Trainer<float> trainer(model, cfg, tiny_sampler());
      double l10 = 0, l500 = 0;
      LoopHooks<float> hooks;
      hooks.on_metrics = [&](const MetricsRow& r) {
        if (r.iteration == 10) l10 = r.loss;
        if (r.iteration == 500) l500 = r.loss;
      };
      train_loop(trainer, data, hooks);
      INFO("seed " << seed << ": " << l10 << " -> " << l500);
      improved += l500 < l10;
    }
    CHECK(improved >= 2);
  }
}
