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
#include "ntm/field.hpp"

#include <bit>
#include <cmath>

using namespace ntm;

namespace {

HashEncodingSpec small_encoding() {
  HashEncodingSpec s;
  s.levels = 6;
  s.base_resolution = 4;
  s.max_resolution = 200;
  s.log2_table_size = 12;
  return s;
}

MatrixX<double> random_points(Rng& rng, int dims, int n, double domain) {
  MatrixX<double> p(dims, n);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(0.0, domain);
  return p;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("default encoding matches the published configuration") {
    HashEncodingSpec s;
    CHECK(s.levels == 16);
    CHECK(s.base_resolution == 8);
    CHECK(s.max_resolution == 5000);
    CHECK(s.log2_table_size == 19);
    CHECK(s.features_per_level == 2);
    CHECK(s.output_width() == 32);
    const auto r = s.resolutions();
    CHECK(r.front() == 8);
    CHECK(r.back() == 5000);
    const double g = std::pow(5000.0 / 8.0, 1.0 / 15.0);
    for (int l = 0; l < 16; ++l) CHECK(r[l] == std::lround(8.0 * std::pow(g, l)));
    ModelSpec m;
    CHECK(m.height_mlp().layer_in(4) == 128 + 32);
    CHECK(m.height_mlp().layers == 8);
    CHECK(m.color_mlp().layers == 4);
  }

  TEST_CASE("encoding at a grid vertex equals the table entry") {
    HashGrid<double> g(small_encoding());
    Rng rng(1);
    g.initialize(rng, 1.0);
    const int F = g.spec().features_per_level;
    for (int l = 0; l < g.spec().levels; ++l) {
      const int res = g.resolution(l);
      for (int k = 0; k < 20; ++k) {
        int v[2] = {static_cast<int>(rng.below(res)), static_cast<int>(rng.below(res))};
        MatrixX<double> p(2, 1);
        p << v[0] * g.spec().domain / res, v[1] * g.spec().domain / res;
        MatrixX<double> feat;
        g.forward(p, feat, nullptr);
        const auto expect = g.table().col(g.vertex_index(l, v));
        CHECK((feat.col(0).segment(l * F, F) - expect).norm() < 1e-12);
      }
    }
  }

  TEST_CASE("encoding is continuous and its jacobian matches finite differences") {
    HashGrid<double> g(small_encoding());
    Rng rng(2);
    g.initialize(rng, 1.0);
    for (int k = 0; k < 50; ++k) {
      VectorX<double> p = random_points(rng, 2, 1, 10.0).col(0);
      MatrixX<double> f0, f1;
      g.forward(p, f0, nullptr);
      VectorX<double> q = p;
      q[0] += 1e-6;
      q[1] -= 1e-6;
      g.forward(q, f1, nullptr);
      // Lipschitz bound per level: |table| <= 1, slope <= res / domain per axis.
      CHECK((f1 - f0).cwiseAbs().maxCoeff() <= 2.0 * 2e-6 * 200 / 10.0 + 1e-12);

      // Central differences away from grid lines.
      bool near_line = false;
      for (int l = 0; l < g.spec().levels; ++l) {
        for (int d = 0; d < 2; ++d) {
          const double x = p[d] / 10.0 * g.resolution(l);
          if (std::abs(x - std::round(x)) * 10.0 / g.resolution(l) < 2e-4) near_line = true;
        }
      }
      if (near_line) continue;
      const MatrixX<double> jac = g.jacobian(p);
      const double h = 1e-4;
      for (int d = 0; d < 2; ++d) {
        VectorX<double> a = p, b = p;
        a[d] += h;
        b[d] -= h;
        MatrixX<double> fa, fb;
        g.forward(a, fa, nullptr);
        g.forward(b, fb, nullptr);
        const VectorX<double> fd = (fa - fb).col(0) / (2 * h);
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
          CHECK(std::abs(fd[i] - jac(i, d)) <= 1e-3 * std::max(std::abs(jac(i, d)), 1e-3));
        }
      }
    }
  }

  TEST_CASE("hash tables and forward passes are deterministic") {
    HashGrid<double> a(small_encoding()), b(small_encoding());
    Rng ra(42), rb(42);
    a.initialize(ra);
    b.initialize(rb);
    CHECK(a.table() == b.table());
    Rng rng(3);
    const MatrixX<double> p = random_points(rng, 2, 64, 10.0);
    MatrixX<double> fa, fb;
    a.forward(p, fa, nullptr);
    b.forward(p, fb, nullptr);
    CHECK(fa == fb);
  }

  TEST_CASE("table initialization range") {
    HashGrid<double> g(small_encoding());
    Rng rng(4);
    g.initialize(rng);
    CHECK(g.table().cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(g.table().cwiseAbs().maxCoeff() > 0.5e-4);
  }

  TEST_CASE("zero output layer gives zero height, deterministically") {
    HeightField<double> h;
    h.encoding = HashGrid<double>(small_encoding());
    MlpSpec ms{12, 32, 8, 1, 4, OutputActivation::None};
    h.mlp = Mlp<double>(ms);
    Rng rng(5);
    h.encoding.initialize(rng);
    h.mlp.initialize(rng, true);
    for (int k = 0; k < 20; ++k) {
      const double x = rng.uniform(0, 10), y = rng.uniform(0, 10);
      CHECK(h.eval(x, y) == 0.0);
    }
    h.mlp.initialize(rng, false);
    const double v1 = h.eval(3.3, 4.4);
    const double v2 = h.eval(3.3, 4.4);
    CHECK(std::bit_cast<std::uint64_t>(v1) == std::bit_cast<std::uint64_t>(v2));
  }

  TEST_CASE("color outputs lie in (0, 1) and zero logits give 0.5") {
    ColorField<double> c;
    c.encoding = HashGrid<double>(small_encoding());
    c.mlp = Mlp<double>(MlpSpec{12, 32, 4, 3, -1, OutputActivation::Sigmoid});
    Rng rng(6);
    c.encoding.initialize(rng);
    for (int k = 0; k < 5; ++k) CHECK((c.eval(rng.uniform(0, 10), rng.uniform(0, 10)).array() == 0.5).all());
    for (int trial = 0; trial < 10; ++trial) {
      c.encoding.initialize(rng, 1.0);
      c.mlp.initialize(rng, false);
      for (int l = 0; l < c.mlp.layers(); ++l) c.mlp.weight(l) *= 1.0 + 0.2 * trial;
      const MatrixX<double> p = random_points(rng, 2, 1000, 10.0);
      MatrixX<double> out;
      c.forward(p, out, nullptr);
      CHECK((out.array() > 0.0).all());
      CHECK((out.array() < 1.0).all());
    }
  }

  TEST_CASE("height outputs stay finite over the domain") {
    ModelSpec spec;
    spec.height_encoding = small_encoding();
    spec.color_encoding = small_encoding();
    spec.height_hidden = spec.color_hidden = 32;
    SceneFrame f;
    f.bbox_min = Vec3(0, 0, 0);
    f.bbox_max = Vec3(1000, 1000, 200);
    NtmModel<double> m(spec, f);
    m.initialize(7);
    Rng rng(9);
    m.height.mlp.initialize(rng, false);
    const MatrixX<double> p = random_points(rng, 2, 10000, 10.0);
    MatrixX<double> h;
    m.height.forward(p, h, nullptr);
    CHECK(h.allFinite());
  }

  TEST_CASE("height and color parameter gradients match finite differences") {
    ModelSpec spec;
    spec.height_encoding = small_encoding();
    spec.color_encoding = small_encoding();
    spec.height_hidden = spec.color_hidden = 24;
    SceneFrame f;
    f.bbox_min = Vec3(0, 0, 0);
    f.bbox_max = Vec3(1000, 1000, 200);
    NtmModel<double> m(spec, f);
    m.initialize(11);
    Rng rng(12);
    m.height.mlp.initialize(rng, false);
    m.height.encoding.initialize(rng, 0.5);
    m.color.encoding.initialize(rng, 0.5);
    const MatrixX<double> p = random_points(rng, 2, 16, 10.0);
    const MatrixX<double> rh = MatrixX<double>::Random(1, 16);
    const MatrixX<double> rc = MatrixX<double>::Random(3, 16);
    auto loss = [&](const NtmModel<double>& mm) {
      MatrixX<double> h, c;
      mm.height.forward(p, h, nullptr);
      mm.color.forward(p, c, nullptr);
      return (h.array() * rh.array()).sum() + (c.array() * rc.array()).sum();
    };
    NtmModel<double> g = m.zeros_like();
    FieldCache<double> ch, cc;
    MatrixX<double> h, c;
    m.height.forward(p, h, &ch);
    m.color.forward(p, c, &cc);
    m.height.backward(ch, rh, g.height);
    m.color.backward(cc, rc, g.color);
    auto blocks = m.parameter_blocks();
    auto gblocks = g.parameter_blocks();
    int checked = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].proposal || blocks[b].name == "log_scale") continue;
      for (int k = 0; k < 5; ++k) {
        Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(blocks[b].size)));
        if (blocks[b].name.find("table") != std::string::npos) {
          // Probe entries that the batch actually touches.
          const auto& cache = blocks[b].name[0] == 'h' ? ch : cc;
          const std::int32_t col = cache.encoding.index(rng.below(cache.encoding.index.rows()), rng.below(16));
          i = static_cast<Eigen::Index>(col) * 2 + static_cast<Eigen::Index>(rng.below(2));
        }
        const double saved = blocks[b].data[i];
        const double step = 1e-6;
        blocks[b].data[i] = saved + step;
        const double lp = loss(m);
        blocks[b].data[i] = saved - step;
        const double lm = loss(m);
        blocks[b].data[i] = saved;
        const double fd = (lp - lm) / (2 * step);
        INFO(blocks[b].name << "[" << i << "]");
        CHECK(rel_err(fd, gblocks[b].data[i]) < 1e-3);
        ++checked;
      }
    }
    CHECK(checked > 40);
  }

  TEST_CASE("sigmoid_phi and logistic_phi") {
    for (double s : {0.1, 1.0, 37.0, 1e4}) CHECK(sigmoid_phi(s, 0.0) == 0.5);
    Rng rng(13);
    for (double s : {0.5, 3.0, 100.0}) {
      // Trapezoid quadrature over [-20/s, 20/s].
      const int n = 200000;
      const double a = -20.0 / s, b = 20.0 / s, h = (b - a) / n;
      double sum = 0.5 * (logistic_phi(s, a) + logistic_phi(s, b));
      for (int i = 1; i < n; ++i) sum += logistic_phi(s, a + i * h);
      CHECK(std::abs(sum * h - 1.0) < 1e-6);
      for (int k = 0; k < 100; ++k) {
        const double x = rng.uniform(-10.0, 10.0) / s;
        CHECK(logistic_phi(s, x) >= 0.0);
        const double e = 1e-6 / s;
        const double fd = (sigmoid_phi(s, x + e) - sigmoid_phi(s, x - e)) / (2 * e);
        CHECK(std::abs(fd - logistic_phi(s, x)) <= 1e-8 * std::max(1.0, s));
      }
    }
    // Stable for |s x| up to 700.
    CHECK(sigmoid_phi(1.0, -700.0) > 0.0);
    CHECK(sigmoid_phi(1.0, 700.0) == 1.0);
    CHECK(std::isfinite(logistic_phi(1.0, 700.0)));
    CHECK(std::isfinite(logistic_phi(1.0, -700.0)));
  }

  TEST_CASE("model initialization and parameter blocks") {
    ModelSpec spec;
    spec.height_encoding = small_encoding();
    spec.color_encoding = small_encoding();
    SceneFrame f;
    f.bbox_min = Vec3(0, 0, 0);
    f.bbox_max = Vec3(20000, 10000, 4000);
    NtmModel<double> m(spec, f);
    m.initialize(1);
    CHECK(m.height.offset == doctest::Approx(0.5 * 4000 * 10.0 / 20000));
    // Transition width 4 / s equals the normalized box height.
    CHECK(4.0 / m.scale() == doctest::Approx(4000 * 10.0 / 20000));
    NtmModel<double> m2(spec, f);
    m2.initialize(1);
    auto a = m.parameter_blocks();
    auto b = m2.parameter_blocks();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vec() == b[i].vec());
    NtmModel<float> mf = m.cast<float>();
    CHECK(mf.parameter_count() == m.parameter_count());
    CHECK(m.zeros_like().parameter_blocks()[0].vec().isZero());
  }
}
