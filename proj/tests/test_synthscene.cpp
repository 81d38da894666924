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
#include "ntm/dtm.hpp"
#include "ntm/synthscene.hpp"

#include <cmath>

using namespace ntm;

namespace {

PinholeModel nadir_camera(double altitude, double fov, int w, int h) {
  PinholeModel m;
  m.position = Vec3(0, 0, altitude);
  m.orientation = look_at(m.position, Vec3::Zero());
  m.field_of_view_deg = fov;
  m.width = w;
  m.height = h;
  return m;
}

SceneFrame box(double half_xy, double z0, double z1) {
  SceneFrame f;
  f.bbox_min = Vec3(-half_xy, -half_xy, z0);
  f.bbox_max = Vec3(half_xy, half_xy, z1);
  return f;
}

Locus bounded(const Vec3& o, const Vec3& d, double t0, double t1) {
  Locus l;
  l.origin = o;
  l.direction = d.normalized();
  l.t_near = t0;
  l.t_far = t1;
  return l;
}

AnalyticTerrain one_hill() {
  return AnalyticTerrain::gaussian_hills(500.0, {{Vec2(0, 0), 2500.0, 3000.0}});
}

}  // namespace

TEST_SUITE("synthscene") {
  TEST_CASE("closed-form heights") {
    const AnalyticTerrain plane = AnalyticTerrain::plane(100.0);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      CHECK(terrain_height(plane, Vec2(rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5))) == 100.0);
    }
    CHECK(terrain_height(one_hill(), Vec2(0, 0)) == doctest::Approx(3000.0).epsilon(1e-15));
    const AnalyticTerrain two = AnalyticTerrain::gaussian_hills(
        0.0, {{Vec2(1000, 0), 200.0, 500.0}, {Vec2(-1000, 500), 300.0, 800.0}});
    const Vec2 p(250.0, -120.0);
    const double expect = 200.0 * std::exp(-((p - Vec2(1000, 0)).squaredNorm()) / (2 * 500.0 * 500.0)) +
                          300.0 * std::exp(-((p - Vec2(-1000, 500)).squaredNorm()) / (2 * 800.0 * 800.0));
    CHECK(terrain_height(two, p) == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("crater profile") {
    const double base = 1000, R = 5000, depth = 800, rim = 300;
    const AnalyticTerrain c = AnalyticTerrain::crater(base, Vec2(100, -200), R, depth, rim);
    CHECK(terrain_height(c, Vec2(100, -200)) == doctest::Approx(base - depth).epsilon(1e-15));
    const Vec2 half(100 + 0.5 * R, -200);
    CHECK(terrain_height(c, half) == doctest::Approx(base - depth + (depth + rim) * 0.25).epsilon(1e-14));
    CHECK(terrain_height(c, Vec2(100 + R, -200)) == doctest::Approx(base + rim).epsilon(1e-14));
    CHECK(terrain_height(c, Vec2(100 + 10 * R, -200)) == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("nadir and oblique intersections over a plane") {
    const double A = 250e3, h0 = 123.0;
    const AnalyticTerrain plane = AnalyticTerrain::plane(h0);
    const auto t = ray_terrain_intersect(plane, bounded(Vec3(10, 20, A), Vec3(0, 0, -1), 0.0, A + 1000));
    REQUIRE(t);
    CHECK(*t == doctest::Approx(A - h0).epsilon(1e-12));
    const auto t45 = ray_terrain_intersect(plane, bounded(Vec3(0, 0, 5000), Vec3(1, 0, -1), 0.0, 1e4));
    REQUIRE(t45);
    CHECK(*t45 == doctest::Approx((5000 - h0) * std::sqrt(2.0)).epsilon(1e-12));
    CHECK_FALSE(ray_terrain_intersect(plane, bounded(Vec3(0, 0, 5000), Vec3(0, 0, -1), 0.0, 1000)));
    CHECK_FALSE(ray_terrain_intersect(plane, bounded(Vec3(0, 0, 5000), Vec3(1, 0, 0), 0.0, 1e5)));
    CHECK_THROWS_AS(ray_terrain_intersect(plane, Locus{}), DomainError);
  }

  TEST_CASE("intersection residual is tiny") {
    const AnalyticTerrain hill = one_hill();
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      const Vec3 o(rng.uniform(-8000, 8000), rng.uniform(-8000, 8000), 6000);
      const Vec3 d(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), -1.0);
      const Locus l = bounded(o, d, 0.0, 2e4);
      const auto t = ray_terrain_intersect(hill, l);
      REQUIRE(t);
      const Vec3 p = l.at(*t);
      CHECK(std::abs(p.z() - terrain_height(hill, p.head<2>())) < 1e-9 * 2500.0);
    }
  }

  TEST_CASE("grazing ray agrees with a finer march") {
    const AnalyticTerrain hill = one_hill();
    const double scene_scale = 30e3;
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      // Shallow rays skimming the hill flank.
      const Vec3 o(-15000, rng.uniform(-3000, 3000), rng.uniform(1500, 2800));
      const Vec3 d(1.0, rng.uniform(-0.05, 0.05), rng.uniform(-0.12, -0.02));
      const Locus l = bounded(o, d, 0.0, 3e4);
      const double step = hill.min_feature_width() / 10;
      const auto coarse = ray_terrain_intersect(hill, l);
      const auto fine = ray_terrain_intersect(hill, l, step / 100);
      REQUIRE(coarse.has_value() == fine.has_value());
      if (coarse) CHECK(std::abs(*coarse - *fine) < 1e-6 * scene_scale);
    }
  }

  TEST_CASE("ground-truth render of a plane") {
    const double A = 250e3, h0 = 40.0;
    AnalyticTerrain plane = AnalyticTerrain::plane(h0);
    plane.texture.kind = Texture::Kind::Constant;
    plane.texture.color = Vec3(0.2, 0.4, 0.6);
    const CameraModel cam = nadir_camera(A, 0.1, 16, 16);
    const auto gt = render_ground_truth(plane, cam, box(5000, 0, 100), 3);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * 16 + x;
        REQUIRE(gt.hit[i]);
        CHECK(gt.image.at(x, y, 0) == doctest::Approx(0.2f));
        CHECK(gt.image.at(x, y, 1) == doctest::Approx(0.4f));
        CHECK(gt.image.at(x, y, 2) == doctest::Approx(0.6f));
      }
    }
    // Center pixel lies on the principal axis.
    const std::size_t mid = 8 * 16 + 8;
    CHECK(std::abs(gt.depth[mid] - (A - h0)) < 1.0);
    const CameraModel nadir1 = nadir_camera(A, 0.1, 1, 1);
    const auto single = render_ground_truth(plane, nadir1, box(5000, 0, 100), 1);
    CHECK(single.depth[0] == doctest::Approx(A - h0).epsilon(1e-12));
    CHECK(single.image.at(0, 0) == doctest::Approx(0.4f));
  }

  TEST_CASE("rays missing the box are flagged") {
    const AnalyticTerrain plane = AnalyticTerrain::plane(0.0);
    PinholeModel m = nadir_camera(250e3, 5.0, 8, 8);
    m.position.x() = 1e6;
    m.orientation = look_at(m.position, m.position - Vec3::UnitZ());
    const auto gt = render_ground_truth(plane, m, box(5000, -10, 10), 1);
    for (std::size_t i = 0; i < gt.hit.size(); ++i) {
      CHECK_FALSE(gt.hit[i]);
      CHECK(std::isnan(gt.depth[i]));
    }
  }

  TEST_CASE("checker period appears at the projected frequency") {
    AnalyticTerrain plane = AnalyticTerrain::plane(0.0);
    plane.texture.kind = Texture::Kind::Checker;
    plane.texture.period_m = 1000.0;
    plane.texture.color = Vec3::Ones();
    plane.texture.color2 = Vec3::Zero();
    const int w = 512;
    const CameraModel cam = nadir_camera(250e3, 5.0, w, 3);
    const auto gt = render_ground_truth(plane, cam, box(15000, -10, 10), 1);
    int transitions = 0;
    for (int x = 1; x < w; ++x) transitions += gt.image.at(x, 1) != gt.image.at(x - 1, 1);
    const double swath = 2 * 250e3 * std::tan(2.5 * M_PI / 180.0);
    CHECK(swath == doctest::Approx(21.8e3).epsilon(0.01));
    CHECK(std::abs(transitions - swath / 1000.0) <= 1.5);
  }

  TEST_CASE("depth re-derives terrain heights") {
    AnalyticTerrain hill = one_hill();
    const CameraModel cam = nadir_camera(250e3, 5.0, 32, 32);
    const SceneFrame f = box(12000, 0, 4000);
    const auto gt = render_ground_truth(hill, cam, f, 3);
    int hits = 0;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * 32 + x;
        if (!gt.hit[i]) continue;
        ++hits;
        const Locus l = camera_locus(cam, pixel_center(cam, x, y));
        const Vec3 p = l.at(gt.depth[i]);
        CHECK(std::abs(p.z() - terrain_height(hill, p.head<2>())) < 1e-6 * f.max_extent());
      }
    }
    CHECK(hits == 32 * 32);
  }

  TEST_CASE("gray renders average the color channels") {
    const AnalyticTerrain hill = one_hill();
    const CameraModel cam = nadir_camera(250e3, 5.0, 8, 8);
    const SceneFrame f = box(12000, 0, 4000);
    const auto rgb = render_ground_truth(hill, cam, f, 3);
    const auto gray = render_ground_truth(hill, cam, f, 1);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const float mean = (rgb.image.at(x, y, 0) + rgb.image.at(x, y, 1) + rgb.image.at(x, y, 2)) / 3.0f;
        CHECK(gray.image.at(x, y) == doctest::Approx(mean).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("thirty-one camera pass spacing") {
    PassSpec spec;
    spec.count = 31;
    Rng rng(1);
    const auto cams = make_cameras(spec, rng);
    REQUIRE(cams.size() == 31);
    for (std::size_t i = 1; i < cams.size(); ++i) {
      const double dx = std::get<PinholeModel>(cams[i]).position.x() - std::get<PinholeModel>(cams[i - 1]).position.x();
      CHECK(dx == doctest::Approx(5833.333).epsilon(1e-6));
    }
    const double west = std::get<PinholeModel>(cams.front()).position.x();
    const double east = std::get<PinholeModel>(cams.back()).position.x();
    CHECK(east - west == doctest::Approx(175e3));
    CHECK(west == doctest::Approx(-87.5e3));
  }

  TEST_CASE("every footprint covers the subject") {
    for (const char* name : {"ges-smoke", "ges-full", "flat-smoke", "ctx-like"}) {
      const ScenePreset p = scene_preset(name);
      Rng rng(2);
      const auto cams = make_cameras(p.pass, rng);
      const SceneFrame f = frame_from_footprints(cams, p.z_min, p.z_max);
      for (const auto& c : cams) {
        const Polygon fp = image_footprint(c, 0.5 * (p.z_min + p.z_max));
        CHECK(point_in_polygon(fp, p.pass.subject.head<2>()));
        for (const Vec2& v : fp) {
          CHECK(v.x() > f.bbox_min.x());
          CHECK(v.x() < f.bbox_max.x());
          CHECK(v.y() > f.bbox_min.y());
          CHECK(v.y() < f.bbox_max.y());
        }
      }
    }
  }

  TEST_CASE("double-look linescan views the same ground from two angles") {
    const ScenePreset p = scene_preset("ctx-like");
    Rng rng(1);
    const auto cams = make_cameras(p.pass, rng);
    REQUIRE(cams.size() == 2);
    const auto& nadir = std::get<LinescanModel>(cams[0]);
    const auto& back = std::get<LinescanModel>(cams[1]);
    const Vec2 center(0.5 * nadir.detector_width, 0.5 * (nadir.rows() - 1));
    const Locus a = linescan_locus(nadir, center);
    const Locus b = linescan_locus(back, center);
    const Vec3 ga = a.at(*intersect_plane_z(a, 0.0));
    const Vec3 gb = b.at(*intersect_plane_z(b, 0.0));
    CHECK((ga - gb).norm() < 1e-6 * 250e3);
    const double angle = std::acos(std::clamp(a.direction.dot(b.direction), -1.0, 1.0)) * 180.0 / M_PI;
    CHECK(angle > 0.0);
    CHECK(angle == doctest::Approx(p.pass.backward_tilt_deg).epsilon(1e-6));
  }

  TEST_CASE("presets") {
    const Dataset smoke = build_preset(scene_preset("ges-smoke"), 11);
    CHECK(smoke.views.size() == 8);
    for (const auto& v : smoke.views) {
      CHECK(v.image.width == 64);
      CHECK(v.image.height == 64);
      CHECK(v.image.channels == 3);
      for (float x : v.image.data) {
        CHECK(x >= 0.0f);
        CHECK(x <= 1.0f);
      }
    }
    CHECK_NOTHROW(smoke.validate());
    CHECK(smoke.gsd_m == doctest::Approx(2 * 250e3 * std::tan(2.5 * M_PI / 180.0) / 64));
    const Dataset again = build_preset(scene_preset("ges-smoke"), 11);
    for (std::size_t i = 0; i < smoke.views.size(); ++i) CHECK(smoke.views[i].image.data == again.views[i].image.data);

    const Dataset ctx = build_preset(scene_preset("ctx-like"), 1);
    CHECK(ctx.views.size() == 2);
    CHECK(ctx.channels == 1);
    CHECK_NOTHROW(ctx.validate());

    try {
      scene_preset("nope");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      for (const auto& n : preset_names()) CHECK(msg.find(n) != std::string::npos);
    }
  }

  TEST_CASE("track leaving the scene box is rejected") {
    PassSpec spec;
    spec.count = 3;
    spec.width = spec.height = 4;
    Rng rng(1);
    CHECK_THROWS_AS(generate_pass(one_hill(), box(8000, 0, 4000), spec, rng), ConfigError);
    spec.track_length_m = 0.0;
    CHECK_NOTHROW(generate_pass(one_hill(), box(20000, 0, 4000), spec, rng));
  }
}
