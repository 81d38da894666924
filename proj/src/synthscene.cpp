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


#include "ntm/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace ntm {

AnalyticTerrain AnalyticTerrain::plane(double height) {
  AnalyticTerrain t;
  t.kind = Kind::Plane;
  t.base = height;
  return t;
}

AnalyticTerrain AnalyticTerrain::gaussian_hills(double base, std::vector<Hill> hills) {
  AnalyticTerrain t;
  t.kind = Kind::GaussianHills;
  t.base = base;
  t.hills = std::move(hills);
  for (const auto& h : t.hills) {
    if (!(h.width > 0.0)) throw ConfigError("hill width must be positive");
  }
  return t;
}

AnalyticTerrain AnalyticTerrain::crater(double base, const Vec2& center, double radius, double depth,
                                        double rim_height) {
  if (!(radius > 0.0)) throw ConfigError("crater radius must be positive");
  AnalyticTerrain t;
  t.kind = Kind::Crater;
  t.base = base;
  t.crater_center = center;
  t.crater_radius = radius;
  t.crater_depth = depth;
  t.crater_rim = rim_height;
  return t;
}

namespace {

// Width of the Gaussian rim falloff outside a crater, relative to its radius.
constexpr double kRimFalloff = 0.3;

}  // namespace

double AnalyticTerrain::min_feature_width() const {
  switch (kind) {
    case Kind::Plane:
      return 1000.0;
    case Kind::GaussianHills: {
      double w = kInf;
      for (const auto& h : hills) w = std::min(w, h.width);
      return std::isfinite(w) ? w : 1000.0;
    }
    case Kind::Crater:
      return kRimFalloff * crater_radius;
  }
  return 1000.0;
}

double terrain_height(const AnalyticTerrain& t, const Vec2& p) {
  switch (t.kind) {
    case AnalyticTerrain::Kind::Plane:
      return t.base;
    case AnalyticTerrain::Kind::GaussianHills: {
      double h = t.base;
      for (const auto& hill : t.hills) {
        const double r2 = (p - hill.center).squaredNorm();
        h += hill.amplitude * std::exp(-0.5 * r2 / (hill.width * hill.width));
      }
      return h;
    }
    case AnalyticTerrain::Kind::Crater: {
      const double r = (p - t.crater_center).norm();
      const double R = t.crater_radius;
      if (r <= R) {
        const double u = r / R;
        return t.base - t.crater_depth + (t.crater_depth + t.crater_rim) * u * u;
      }
      const double v = (r - R) / (kRimFalloff * R);
      return t.base + t.crater_rim * std::exp(-v * v);
    }
  }
  return t.base;
}

Vec3 terrain_normal(const AnalyticTerrain& t, const Vec2& p) {
  const double e = 1e-3 * t.min_feature_width();
  const double hx = (terrain_height(t, p + Vec2(e, 0)) - terrain_height(t, p - Vec2(e, 0))) / (2 * e);
  const double hy = (terrain_height(t, p + Vec2(0, e)) - terrain_height(t, p - Vec2(0, e))) / (2 * e);
  return Vec3(-hx, -hy, 1.0).normalized();
}

namespace {

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                                             static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double quintic(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

double value_noise(const Vec2& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  const double u = quintic(p.x() - fx), v = quintic(p.y() - fy);
  const double a = lattice(ix, iy, seed), b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed), d = lattice(ix + 1, iy + 1, seed);
  return (a * (1 - u) + b * u) * (1 - v) + (c * (1 - u) + d * u) * v;
}

}  // namespace

double fractal_noise(const Vec2& p, double period, int octaves, std::uint64_t seed) {
  double sum = 0.0, norm = 0.0, amp = 1.0, freq = 1.0 / period;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise(p * freq, seed + 0x51ed * static_cast<std::uint64_t>(o + 1));
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum / norm;
}

Vec3 terrain_color(const AnalyticTerrain& t, const Vec2& p) {
  const Texture& tx = t.texture;
  Vec3 c;
  switch (tx.kind) {
    case Texture::Kind::Constant:
      c = tx.color;
      break;
    case Texture::Kind::Checker: {
      const auto i = static_cast<std::int64_t>(std::floor(p.x() / tx.period_m));
      const auto j = static_cast<std::int64_t>(std::floor(p.y() / tx.period_m));
      c = ((i + j) & 1) ? tx.color2 : tx.color;
      break;
    }
    case Texture::Kind::FractalNoise:
      for (int ch = 0; ch < 3; ++ch) {
        const double n = fractal_noise(p, tx.period_m, tx.octaves, tx.seed * 3 + static_cast<std::uint64_t>(ch));
        c[ch] = std::clamp(0.5 + tx.contrast * 2.0 * (n - 0.5), 0.02, 0.98);
      }
      break;
    case Texture::Kind::HeightShaded: {
      const double h = terrain_height(t, p);
      c.setConstant(0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * h / tx.period_m));
      break;
    }
  }
  if (tx.lambert) {
    const double shade = 0.2 + 0.8 * std::max(0.0, terrain_normal(t, p).dot(tx.sun_direction.normalized()));
    c *= shade;
  }
  return c;
}

std::optional<double> ray_terrain_intersect(const AnalyticTerrain& terrain, const Locus& locus, double step) {
  if (!std::isfinite(locus.t_near) || !std::isfinite(locus.t_far) || !(locus.t_near <= locus.t_far)) {
    throw DomainError("ray_terrain_intersect needs a locus with finite bounds");
  }
  if (!(step > 0.0)) step = terrain.min_feature_width() / 10.0;
  auto f = [&](double t) {
    const Vec3 x = locus.at(t);
    return x.z() - terrain_height(terrain, x.head<2>());
  };
  double t0 = locus.t_near;
  double f0 = f(t0);
  if (f0 <= 0.0) return t0;
  while (t0 < locus.t_far) {
    const double t1 = std::min(t0 + step, locus.t_far);
    const double f1 = f(t1);
    if (f1 <= 0.0) {
      double lo = t0, hi = t1;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    t0 = t1;
  }
  return std::nullopt;
}

GroundTruthRender render_ground_truth(const AnalyticTerrain& terrain, const CameraModel& camera,
                                      const SceneFrame& frame, int channels) {
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  const Eigen::Vector2i size = image_size(camera);
  GroundTruthRender out;
  out.image = Image(size.x(), size.y(), channels);
  out.depth.assign(out.image.pixels(), std::numeric_limits<double>::quiet_NaN());
  out.hit.assign(out.image.pixels(), 0);
  for (int y = 0; y < size.y(); ++y) {
    for (int x = 0; x < size.x(); ++x) {
      const Locus l = camera_locus(camera, pixel_center(camera, x, y));
      const auto clipped = clip_to_box(l, frame);
      if (!clipped) continue;
      const auto t = ray_terrain_intersect(terrain, *clipped);
      if (!t) continue;
      const std::size_t i = static_cast<std::size_t>(y) * size.x() + x;
      out.depth[i] = *t;
      out.hit[i] = 1;
      const Vec3 c = terrain_color(terrain, l.at(*t).head<2>());
      if (channels == 3) {
        for (int k = 0; k < 3; ++k) out.image.at(x, y, k) = static_cast<float>(c[k]);
      } else {
        out.image.at(x, y) = static_cast<float>(c.mean());
      }
    }
  }
  return out;
}

void PassSpec::validate() const {
  if (!(altitude_m > 0.0)) throw ConfigError("pass altitude must be positive");
  if (!(field_of_view_deg > 0.0 && field_of_view_deg < 180.0)) throw ConfigError("pass field of view outside (0, 180)");
  if (!(track_length_m >= 0.0)) throw ConfigError("track length must be non-negative");
  if (kind == Kind::PinholeOrbit) {
    if (count < 1 || width < 1 || height < 1) throw ConfigError("pinhole pass needs positive view count and size");
  } else {
    if (detector_width < 1 || !(ground_speed_mps > 0.0) || pose_samples < 2) {
      throw ConfigError("linescan pass needs a positive detector width, speed and at least two pose samples");
    }
    if (!(backward_tilt_deg >= 0.0 && backward_tilt_deg < 80.0)) throw ConfigError("backward tilt outside [0, 80)");
  }
}

double pass_gsd(const PassSpec& spec) {
  const int w = spec.kind == PassSpec::Kind::PinholeOrbit ? spec.width : spec.detector_width;
  return 2.0 * spec.altitude_m * std::tan(0.5 * deg2rad(spec.field_of_view_deg)) / w;
}

namespace {

LinescanModel linescan_image(const PassSpec& spec, double tilt_deg) {
  const double gsd = pass_gsd(spec);
  const int rows = spec.detector_width;
  const double swath = gsd * rows;
  const double offset = spec.altitude_m * std::tan(deg2rad(tilt_deg));  // ground lag behind the platform
  const double x_first = spec.subject.x() - 0.5 * swath + 0.5 * gsd + offset;
  const double x_start = spec.subject.x() - 0.5 * swath;  // platform position at t = 0
  const Vec3 look(-std::sin(deg2rad(tilt_deg)), 0.0, -std::cos(deg2rad(tilt_deg)));
  LinescanModel m;
  m.detector_width = spec.detector_width;
  m.field_of_view_cross_track_deg = spec.field_of_view_deg;
  for (int r = 0; r < rows; ++r) m.row_times.push_back((x_first + r * gsd - x_start) / spec.ground_speed_mps);
  const double t0 = m.row_times.front(), t1 = m.row_times.back();
  for (int k = 0; k < spec.pose_samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (spec.pose_samples - 1);
    PoseSample ps;
    ps.time_s = k + 1 == spec.pose_samples ? t1 : t;
    ps.position = Vec3(x_start + spec.ground_speed_mps * ps.time_s, spec.subject.y(), spec.altitude_m);
    ps.orientation = look_at(ps.position, ps.position + look, Vec3::UnitX());
    m.pose_samples.push_back(ps);
  }
  return m;
}

}  // namespace

std::vector<CameraModel> make_cameras(const PassSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<CameraModel> cams;
  if (spec.kind == PassSpec::Kind::PinholeOrbit) {
    for (int i = 0; i < spec.count; ++i) {
      const double u = spec.count == 1 ? 0.5 : static_cast<double>(i) / (spec.count - 1);
      PinholeModel m;
      m.position = Vec3(spec.subject.x() - 0.5 * spec.track_length_m + u * spec.track_length_m, spec.subject.y(),
                        spec.altitude_m);
      if (spec.position_jitter_m > 0.0) {
        m.position += spec.position_jitter_m * Vec3(rng.normal(), rng.normal(), rng.normal());
      }
      const Vec3 target = spec.look_at_subject ? spec.subject : Vec3(m.position.x(), m.position.y(), 0.0);
      m.orientation = look_at(m.position, target, Vec3::UnitY());
      m.field_of_view_deg = spec.field_of_view_deg;
      m.width = spec.width;
      m.height = spec.height;
      cams.emplace_back(m);
    }
  } else {
    cams.emplace_back(linescan_image(spec, 0.0));
    if (spec.double_look) cams.emplace_back(linescan_image(spec, spec.backward_tilt_deg));
  }
  return cams;
}

SceneFrame frame_from_footprints(const std::vector<CameraModel>& cameras, double z_min, double z_max,
                                 double pad_fraction, double norm_scale) {
  if (cameras.empty()) throw ConfigError("no cameras");
  if (!(z_max > z_min)) throw ConfigError("scene box needs z_max > z_min");
  const double mid = 0.5 * (z_min + z_max);
  Vec2 lo = Vec2::Constant(kInf), hi = Vec2::Constant(-kInf);
  for (const auto& c : cameras) {
    for (const Vec2& p : image_footprint(c, mid)) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec2 pad = pad_fraction * (hi - lo);
  SceneFrame f;
  f.bbox_min = Vec3(lo.x() - pad.x(), lo.y() - pad.y(), z_min);
  f.bbox_max = Vec3(hi.x() + pad.x(), hi.y() + pad.y(), z_max);
  f.norm_scale = norm_scale;
  f.validate();
  return f;
}

namespace {

Dataset render_views(const AnalyticTerrain& terrain, const SceneFrame& frame, const std::vector<CameraModel>& cams,
                     const PassSpec& spec, int channels) {
  const double mid = 0.5 * (frame.bbox_min.z() + frame.bbox_max.z());
  const double tol = 1e-9 * frame.max_extent();
  for (std::size_t i = 0; i < cams.size(); ++i) {
    for (const Vec2& g : image_footprint(cams[i], mid)) {
      if (g.x() < frame.bbox_min.x() - tol || g.x() > frame.bbox_max.x() + tol || g.y() < frame.bbox_min.y() - tol ||
          g.y() > frame.bbox_max.y() + tol) {
        std::ostringstream os;
        os << "ground track leaves the scene box at view " << i << " (footprint corner " << g.x() << ", " << g.y()
           << ")";
        throw ConfigError(os.str());
      }
    }
  }
  Dataset d;
  d.frame = frame;
  d.channels = channels;
  d.gsd_m = pass_gsd(spec);
  double sum = 0.0, sum2 = 0.0, n = 0.0;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    View v;
    std::ostringstream name;
    name << "view_" << (i < 10 ? "0" : "") << i;
    v.name = name.str();
    v.camera = cams[i];
    v.image = render_ground_truth(terrain, cams[i], frame, channels).image;
    for (float x : v.image.data) {
      sum += x;
      sum2 += static_cast<double>(x) * x;
      n += 1.0;
    }
    d.views.push_back(std::move(v));
  }
  const double var = n > 0 ? sum2 / n - (sum / n) * (sum / n) : 0.0;
  if (var < 1e-4) {
    std::cerr << "warning: rendered texture variance " << var << " is too low; height is unobservable\n";
  }
  return d;
}

}  // namespace

Dataset generate_pass(const AnalyticTerrain& terrain, const SceneFrame& frame, const PassSpec& spec, Rng& rng,
                      int channels) {
  frame.validate();
  return render_views(terrain, frame, make_cameras(spec, rng), spec, channels);
}

std::vector<std::string> preset_names() { return {"ges-smoke", "ges-full", "flat-smoke", "ctx-like"}; }

namespace {

AnalyticTerrain ges_hills() {
  AnalyticTerrain t = AnalyticTerrain::gaussian_hills(500.0, {{Vec2(0, 0), 2500.0, 3000.0},
                                                             {Vec2(6000, 3000), 1200.0, 2000.0},
                                                             {Vec2(-5000, -4000), 1500.0, 2500.0},
                                                             {Vec2(-3000, 5000), 800.0, 1500.0},
                                                             {Vec2(5000, -5000), 1000.0, 1800.0}});
  t.texture.kind = Texture::Kind::FractalNoise;
  t.texture.period_m = 6000.0;
  t.texture.octaves = 4;
  t.texture.seed = 17;
  return t;
}

}  // namespace

ScenePreset scene_preset(const std::string& name) {
  ScenePreset p;
  p.name = name;
  if (name == "ges-smoke" || name == "ges-full" || name == "flat-smoke") {
    if (name == "flat-smoke") {
      p.terrain = AnalyticTerrain::plane(1500.0);
      p.terrain.texture = ges_hills().texture;
    } else {
      p.terrain = ges_hills();
    }
    p.pass.kind = PassSpec::Kind::PinholeOrbit;
    p.pass.altitude_m = 250e3;
    p.pass.track_length_m = 175e3;
    p.pass.field_of_view_deg = 5.0;
    p.pass.look_at_subject = true;
    const bool full = name == "ges-full";
    p.pass.count = full ? 31 : 8;
    p.pass.width = p.pass.height = full ? 400 : 64;
    p.z_min = 0.0;
    p.z_max = 4000.0;
    p.channels = 3;
    return p;
  }
  if (name == "ctx-like") {
    p.terrain = AnalyticTerrain::crater(1000.0, Vec2(0, 0), 5000.0, 800.0, 300.0);
    p.terrain.texture.kind = Texture::Kind::FractalNoise;
    p.terrain.texture.period_m = 6000.0;
    p.terrain.texture.octaves = 4;
    p.terrain.texture.seed = 23;
    p.pass.kind = PassSpec::Kind::LinescanPass;
    p.pass.altitude_m = 250e3;
    p.pass.field_of_view_deg = 5.7;
    p.pass.detector_width = 64;
    p.pass.double_look = true;
    p.z_min = 0.0;
    p.z_max = 2000.0;
    p.channels = 1;
    return p;
  }
  std::ostringstream os;
  os << "unknown scene preset '" << name << "'; known presets:";
  for (const auto& n : preset_names()) os << " " << n;
  throw ConfigError(os.str());
}

Dataset build_preset(const ScenePreset& preset, std::uint64_t seed) {
  Rng rng(seed, 0x5c3e);
  const std::vector<CameraModel> cams = make_cameras(preset.pass, rng);
  const SceneFrame frame = frame_from_footprints(cams, preset.z_min, preset.z_max);
  Dataset d = render_views(preset.terrain, frame, cams, preset.pass, preset.channels);
  d.seed = seed;
  return d;
}

}  // namespace ntm
