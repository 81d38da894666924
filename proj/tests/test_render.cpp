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
#include "ntm/render.hpp"

#include <cmath>

using namespace ntm;

namespace {

// Flat terrain with a constant color; proposal densities form a layer at the surface.
struct PlaneFields {
  double h = 0.0;
  Eigen::Vector3d c{0.2, 0.5, 0.9};
  double s = 100.0;

  void heights(const MatrixX<double>& p, MatrixX<double>& out) const { out.setConstant(1, p.cols(), h); }
  void colors(const MatrixX<double>& p, MatrixX<double>& out) const { out = c.replicate(1, p.cols()); }
  void proposal_density(int, const MatrixX<double>& p, MatrixX<double>& out) const {
    out = (-5.0 * (p.row(2).array() - h).abs()).exp().matrix() * 20.0;
  }
  double scale() const { return s; }
  int channels() const { return 3; }
};

double unit_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("render") {
  TEST_CASE("uniform sampling") {
    Rng rng(1);
    const auto t = sample_uniform<double>(0.0, 1.0, 2, false, rng);
    CHECK(t[0] == 0.25);
    CHECK(t[1] == 0.75);
    Locus l;
    l.t_near = 2.0;
    l.t_far = 5.0;
    Rng a(3, 9), b(3, 9);
    const auto ta = sample_uniform<double>(l, 33, true, a);
    const auto tb = sample_uniform<double>(l, 33, true, b);
    CHECK(ta == tb);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      CHECK(ta[i] >= 2.0);
      CHECK(ta[i] <= 5.0);
      if (i) CHECK(ta[i] > ta[i - 1]);
    }
    Locus bad;
    bad.t_near = 3.0;
    bad.t_far = 1.0;
    CHECK_THROWS_AS(sample_uniform<double>(bad, 4, false, rng), DomainError);
    Locus inf;
    CHECK_THROWS_AS(sample_uniform<double>(inf, 4, false, rng), DomainError);
    CHECK_THROWS_AS(sample_uniform<double>(l, 1, false, rng), DomainError);
  }

  TEST_CASE("pdf sampling of uniform weights is uniform") {
    const auto edges = uniform_edges<double>(0.0, 1.0, 16);
    const std::vector<double> w(16, 1.0 / 16);
    Rng rng(5);
    const int bins = 20;
    std::vector<int> counts(bins, 0);
    int total = 0;
    for (int k = 0; k < 1000; ++k) {
      for (double t : sample_pdf<double>(edges, w, 100, true, rng)) {
        ++counts[std::min(bins - 1, static_cast<int>(t * bins))];
        ++total;
      }
    }
    CHECK(total == 100000);
    double chi2 = 0.0;
    const double expect = total / static_cast<double>(bins);
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    // 99th percentile of chi-square with 19 degrees of freedom.
    CHECK(chi2 < 36.191);
  }

  TEST_CASE("pdf sampling concentrates on a heavy bin") {
    const auto edges = uniform_edges<double>(0.0, 8.0, 8);
    std::vector<double> w(8, 0.0);
    w[5] = 0.7;
    Rng rng(6);
    int inside = 0, total = 0;
    for (int k = 0; k < 100; ++k) {
      for (double t : sample_pdf<double>(edges, w, 32, true, rng)) {
        inside += (t >= 5.0 && t <= 6.0);
        ++total;
      }
    }
    CHECK(inside >= 0.9 * total);
    // Direct inverse-CDF oracle without jitter: u_k = (k + 0.5) / n.
    const double pad = 0.01 * 0.7 / 8;
    const double norm = 0.7 + 8 * pad;
    const auto t = sample_pdf<double>(edges, w, 10, false, rng);
    for (int k = 0; k < 10; ++k) {
      const double u = (k + 0.5) / 10 * norm;
      double expect;
      if (u < 5 * pad) {
        expect = u / pad;
      } else if (u < 5 * pad + 0.7 + pad) {
        expect = 5.0 + (u - 5 * pad) / (0.7 + pad);
      } else {
        expect = 6.0 + (u - 5 * pad - 0.7 - pad) / pad;
      }
      CHECK(t[k] == doctest::Approx(expect).epsilon(1e-12));
    }
    bool fell_back = false;
    const std::vector<double> zero(8, 0.0);
    const auto tz = sample_pdf<double>(edges, zero, 8, false, rng, 0.01, &fell_back);
    CHECK(fell_back);
    for (int k = 0; k < 8; ++k) CHECK(tz[k] == doctest::Approx(k + 0.5));
  }

  TEST_CASE("proposal sampling is reproducible and ordered") {
    SamplerConfig cfg;
    Locus l;
    l.origin = Vec3(5, 5, 10);
    l.direction = Vec3(0, 0, -1);
    l.t_near = 0.5;
    l.t_far = 9.5;
    auto density = [](int k, const MatrixX<double>& p, MatrixX<double>& out) {
      out.resize(1, p.cols());
      for (Eigen::Index i = 0; i < p.cols(); ++i) out(0, i) = (k + 1) * std::exp(-10.0 * std::abs(p(2, i) - 3.0));
    };
    std::vector<Locus> loci{l, l};
    std::vector<Rng> ra{Rng(1, 0), Rng(1, 1)}, rb{Rng(1, 0), Rng(1, 1)};
    std::vector<std::vector<ProposalStage<double>>> stages;
    const auto a = sample_proposal_batch<double>(loci, cfg, density, ra, true, &stages);
    const auto b = sample_proposal_batch<double>(loci, cfg, density, rb, true, nullptr);
    CHECK(a == b);
    REQUIRE(a[0].size() == 32);
    for (std::size_t i = 1; i < a[0].size(); ++i) CHECK(a[0][i] >= a[0][i - 1]);
    CHECK(stages[0][0].edges.size() == 65);
    CHECK(stages[0][1].edges.size() == 33);
    // Samples cluster near the dense layer at z = 3 (t = 7).
    int near = 0;
    for (double t : a[0]) near += std::abs(t - 7.0) < 1.0;
    CHECK(near > 16);
  }

  TEST_CASE("opacity examples") {
    CHECK(ntm_opacity(0.3, 0.3, 50.0) == 0.0);
    CHECK(ntm_opacity(kInf, -kInf, 5.0) == 1.0);
    const double expect = (unit_sigmoid(1.0) - unit_sigmoid(-1.0)) / unit_sigmoid(1.0);
    CHECK(ntm_opacity(0.01, -0.01, 100.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(expect == doctest::Approx(0.6322).epsilon(1e-4));
    // Ascending altitude clamps to zero; deep burial underflows to zero.
    CHECK(ntm_opacity(-0.1, 0.2, 10.0) == 0.0);
    CHECK(ntm_opacity(-100.0, -101.0, 10.0) == 0.0);
    Rng rng(2);
    for (int k = 0; k < 10000; ++k) {
      const double a = ntm_opacity(rng.uniform(-5, 5), rng.uniform(-5, 5), std::exp(rng.uniform(-3, 8)));
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }

  TEST_CASE("transmittance and compositing examples") {
    const std::vector<double> zero(5, 0.0);
    for (double t : product_transmittance<double>(zero)) CHECK(t == 1.0);
    const std::vector<double> half{0.5, 0.5};
    const auto tr = product_transmittance<double>(half);
    CHECK(tr[0] == 1.0);
    CHECK(tr[1] == 0.5);

    MatrixX<double> c(3, 1);
    c << 0.1, 0.2, 0.3;
    const std::vector<double> t1{4.0}, a1{1.0}, T1{1.0};
    const auto one = composite<double>(t1, a1, T1, c);
    CHECK(one.color == c.col(0));
    CHECK(one.depth == 4.0);
    CHECK(one.accumulation == 1.0);

    MatrixX<double> c3 = MatrixX<double>::Random(3, 4);
    const std::vector<double> t4{1, 2, 3, 4}, a0(4, 0.0), T4(4, 1.0);
    const auto none = composite<double>(t4, a0, T4, c3);
    CHECK(none.color.isZero());
    CHECK(none.accumulation == 0.0);
  }

  TEST_CASE("density weight examples") {
    const std::vector<double> s0(4, 0.0), d(4, 0.5);
    for (double w : density_weights<double>(s0, d)) CHECK(w == 0.0);
    const std::vector<double> big{1e300}, one{1.0};
    CHECK(density_weights<double>(big, one)[0] == 1.0);
    const std::vector<double> s11{1, 1}, d11{1, 1};
    const auto w = density_weights<double>(s11, d11);
    CHECK(w[0] == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(std::exp(-1.0) * (1 - std::exp(-1.0))).epsilon(1e-15));
    CHECK(w[0] == doctest::Approx(0.6321).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.2325).epsilon(1e-3));
    const std::vector<double> neg{1.0, -1e-9};
    CHECK_THROWS_AS(density_weights<double>(neg, d11), DomainError);
  }

  TEST_CASE("render_pixel over an analytic plane") {
    PlaneFields f;
    f.h = 2.0;
    f.s = 400.0;
    SamplerConfig cfg;
    cfg.kind = SamplerConfig::Kind::Uniform;
    cfg.uniform_samples = 256;
    Locus l;
    l.origin = Vec3(5, 5, 9);
    l.direction = Vec3(0, 0, -1);
    l.t_near = 0.0;
    l.t_far = 9.0;
    Rng rng(1);
    const auto out = render_pixel<double>(f, l, cfg, rng);
    const double spacing = 9.0 / 256;
    CHECK(std::abs(out.depth - (9.0 - 2.0)) < spacing);
    CHECK(out.accumulation > 0.999);
    CHECK((out.color - f.c * out.accumulation).norm() < 1e-12);

    f.h = -50.0;
    f.s = 10.0;
    const auto above = render_pixel<double>(f, l, cfg, rng);
    CHECK(above.accumulation < 1e-3);
    CHECK((above.color - f.c * above.accumulation).norm() < 1e-15);

    SamplerConfig prop;
    f.h = 2.0;
    f.s = 400.0;
    const auto p = render_pixel<double>(f, l, prop, rng, true);
    CHECK(std::abs(p.depth - 7.0) < 9.0 / 32);
  }

  TEST_CASE("terrain renderer gradients match finite differences") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 12;
      RaySamples<double> rs;
      rs.t = sample_uniform<double>(0.0, 2.0, n, true, rng);
      for (int i = 0; i < n; ++i) {
        rs.z.push_back(1.0 - rs.t[i]);
        rs.height.push_back(rng.uniform(-0.1, 0.1));
      }
      rs.colors = MatrixX<double>::Random(3, n - 1).cwiseAbs();
      const double s = std::exp(rng.uniform(0.0, 3.0));
      const VectorX<double> target = VectorX<double>::Random(3);
      auto loss = [&](const RaySamples<double>& r, double ss) {
        return (render_ntm(r, ss).out.color - target).cwiseAbs().sum();
      };
      const NtmRay<double> ray = render_ntm(rs, s);
      const VectorX<double> d_color = (ray.out.color - target).array().sign().matrix();
      std::vector<double> d_h(n, 0.0);
      MatrixX<double> d_c;
      double d_s = 0.0;
      render_ntm_backward(rs, s, ray, d_color, std::span<double>(d_h), d_c, d_s);
      const double e = 1e-7;
      for (int i = 0; i < n; ++i) {
        RaySamples<double> a = rs, b = rs;
        a.height[i] += e;
        b.height[i] -= e;
        const double fd = (loss(a, s) - loss(b, s)) / (2 * e);
        CHECK(std::abs(fd - d_h[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
      for (int i = 0; i < n - 1; ++i) {
        RaySamples<double> a = rs, b = rs;
        a.colors(1, i) += e;
        b.colors(1, i) -= e;
        const double fd = (loss(a, s) - loss(b, s)) / (2 * e);
        CHECK(std::abs(fd - d_c(1, i)) <= 1e-6);
      }
      const double fd_s = (loss(rs, s + e) - loss(rs, s - e)) / (2 * e);
      CHECK(std::abs(fd_s - d_s) <= 1e-5 * std::max(1.0, std::abs(fd_s)));
    }
  }

  TEST_CASE("density baseline gradients match finite differences") {
    Rng rng(22);
    const int n = 10;
    std::vector<double> sigma(n), delta(n), g(n);
    for (int i = 0; i < n; ++i) {
      sigma[i] = rng.uniform(0.0, 2.0);
      delta[i] = rng.uniform(0.05, 0.5);
      g[i] = rng.normal();
    }
    auto loss = [&](const std::vector<double>& sg) {
      const auto w = density_weights<double>(sg, delta);
      double l = 0;
      for (int i = 0; i < n; ++i) l += g[i] * w[i];
      return l;
    };
    const auto w = density_weights<double>(sigma, delta);
    const auto ds = density_weights_backward<double>(sigma, delta, w, g);
    for (int i = 0; i < n; ++i) {
      auto a = sigma, b = sigma;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      CHECK((loss(a) - loss(b)) / 2e-6 == doctest::Approx(ds[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("interlevel loss and its gradient") {
    const auto edges = uniform_edges<double>(0.0, 1.0, 8);
    std::vector<double> wp{0.05, 0.1, 0.1, 0.3, 0.2, 0.1, 0.05, 0.02};
    const std::vector<double> t{0.1, 0.3, 0.42, 0.55, 0.9};
    const std::vector<double> w{0.2, 0.5, 0.2, 0.05};
    std::vector<double> grad;
    const double l = interlevel_loss<double>(edges, wp, t, w, &grad);
    // Hand oracle: bounds from overlapping bins.
    const double bounds[4] = {0.05 + 0.1 + 0.1, 0.1 + 0.3, 0.3 + 0.2, 0.2 + 0.1 + 0.05 + 0.02};
    double expect = 0;
    for (int i = 0; i < 4; ++i) {
      const double ex = std::max(0.0, w[i] - bounds[i]);
      expect += ex * ex / (w[i] + 1e-7);
    }
    CHECK(l == doctest::Approx(expect).epsilon(1e-14));
    CHECK(l > 0.0);
    for (int j = 0; j < 8; ++j) {
      auto a = wp, b = wp;
      a[j] += 1e-7;
      b[j] -= 1e-7;
      const double fd =
          (interlevel_loss<double>(edges, a, t, w, nullptr) - interlevel_loss<double>(edges, b, t, w, nullptr)) / 2e-7;
      CHECK(fd == doctest::Approx(grad[j]).epsilon(1e-5));
    }
  }
}
