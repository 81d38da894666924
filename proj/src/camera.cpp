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

#include "ntm/camera.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ntm {

namespace {

void check_fov(double fov_deg) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    std::ostringstream os;
    os << "field of view must lie in (0, 180) degrees, got " << fov_deg;
    throw ConfigError(os.str());
  }
}

Vec3 camera_ray(double x_px, double y_px, double focal) {
  return Vec3(x_px / focal, y_px / focal, 1.0).normalized();
}

std::string pixel_str(const Vec2& p) {
  std::ostringstream os;
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

}  // namespace

double PinholeModel::focal_px() const {
  check_fov(field_of_view_deg);
  return 0.5 * width / std::tan(0.5 * deg2rad(field_of_view_deg));
}

double LinescanModel::focal_px() const {
  check_fov(field_of_view_cross_track_deg);
  return 0.5 * detector_width / std::tan(0.5 * deg2rad(field_of_view_cross_track_deg));
}

void LinescanModel::validate() const {
  if (row_times.empty()) throw ConfigError("linescan model has no rows");
  if (pose_samples.empty()) throw ConfigError("linescan model has no pose samples");
  if (detector_width < 1) throw ConfigError("linescan detector width must be positive");
  check_fov(field_of_view_cross_track_deg);
  for (std::size_t i = 1; i < row_times.size(); ++i) {
    if (!(row_times[i] > row_times[i - 1])) throw ConfigError("linescan row times must be strictly increasing");
  }
  for (std::size_t i = 1; i < pose_samples.size(); ++i) {
    if (!(pose_samples[i].time_s > pose_samples[i - 1].time_s)) {
      throw ConfigError("linescan pose sample times must be strictly increasing (repeated or reversed time at sample " +
                        std::to_string(i) + ")");
    }
  }
  if (pose_samples.front().time_s > row_times.front() || pose_samples.back().time_s < row_times.back()) {
    throw ConfigError("linescan pose samples do not span the row acquisition times");
  }
}

PoseSample LinescanModel::pose_at(double time_s) const {
  const auto& ps = pose_samples;
  if (ps.size() == 1) {
    if (time_s != ps.front().time_s) throw DomainError("time outside the pose sample span");
    return ps.front();
  }
  if (time_s < ps.front().time_s || time_s > ps.back().time_s) throw DomainError("time outside the pose sample span");
  auto it = std::upper_bound(ps.begin(), ps.end(), time_s, [](double t, const PoseSample& s) { return t < s.time_s; });
  std::size_t hi = static_cast<std::size_t>(std::distance(ps.begin(), it));
  if (hi >= ps.size()) hi = ps.size() - 1;
  const std::size_t lo = hi - 1;
  const PoseSample& a = ps[lo];
  const PoseSample& b = ps[hi];
  if (!(b.time_s > a.time_s)) throw ConfigError("degenerate linescan pose times");
  if (time_s == a.time_s) return a;
  if (time_s == b.time_s) return b;
  const double u = (time_s - a.time_s) / (b.time_s - a.time_s);
  PoseSample out;
  out.time_s = time_s;
  out.position = a.position + u * (b.position - a.position);
  out.orientation = a.orientation.slerp(u, b.orientation).normalized();
  return out;
}

double LinescanModel::row_time(double row) const {
  const double last = static_cast<double>(row_times.size() - 1);
  if (!(row >= 0.0 && row <= last)) {
    std::ostringstream os;
    os << "linescan row " << row << " outside [0, " << last << "]";
    throw DomainError(os.str());
  }
  const auto i = static_cast<std::size_t>(std::floor(row));
  if (i >= row_times.size() - 1) return row_times.back();
  const double u = row - static_cast<double>(i);
  if (u == 0.0) return row_times[i];
  return row_times[i] + u * (row_times[i + 1] - row_times[i]);
}

Eigen::Vector2i image_size(const CameraModel& camera) {
  return std::visit(
      [](const auto& m) -> Eigen::Vector2i {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PinholeModel>) {
          return {m.width, m.height};
        } else {
          return {m.detector_width, m.rows()};
        }
      },
      camera);
}

Vec2 pixel_center(const CameraModel& camera, int x, int y) {
  if (std::holds_alternative<LinescanModel>(camera)) return Vec2(x + 0.5, y);
  return Vec2(x + 0.5, y + 0.5);
}

double SceneFrame::scale() const {
  const double ext = max_extent();
  if (!(ext > 0.0) || !std::isfinite(ext)) throw ConfigError("scene box has zero extent");
  return norm_scale / ext;
}

void SceneFrame::validate() const {
  if (!(bbox_min.array() < bbox_max.array()).all()) throw ConfigError("scene box must satisfy bbox_min < bbox_max");
  if (!(norm_scale > 0.0)) throw ConfigError("norm_scale must be positive");
}

Locus pinhole_locus(const PinholeModel& model, const Vec2& pixel) {
  if (!(pixel.x() >= 0.0 && pixel.x() < model.width && pixel.y() >= 0.0 && pixel.y() < model.height)) {
    throw DomainError("pixel " + pixel_str(pixel) + " outside the image");
  }
  const double f = model.focal_px();
  Locus l;
  l.origin = model.position;
  l.direction = (model.orientation * camera_ray(pixel.x() - 0.5 * model.width, pixel.y() - 0.5 * model.height, f))
                    .normalized();
  return l;
}

Locus linescan_locus(const LinescanModel& model, const Vec2& pixel) {
  if (!(pixel.x() >= 0.0 && pixel.x() < model.detector_width)) {
    throw DomainError("linescan column " + pixel_str(pixel) + " outside the detector");
  }
  const double t = model.row_time(pixel.y());
  const PoseSample pose = model.pose_at(t);
  Locus l;
  l.origin = pose.position;
  l.direction = (pose.orientation * camera_ray(pixel.x() - 0.5 * model.detector_width, 0.0, model.focal_px()))
                    .normalized();
  return l;
}

Locus camera_locus(const CameraModel& camera, const Vec2& pixel) {
  return std::visit(
      [&](const auto& m) -> Locus {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PinholeModel>) {
          return pinhole_locus(m, pixel);
        } else {
          return linescan_locus(m, pixel);
        }
      },
      camera);
}

std::optional<Locus> clip_to_box(const Locus& locus, const Vec3& box_min, const Vec3& box_max) {
  double t0 = std::max(0.0, locus.t_near);
  double t1 = locus.t_far;
  for (int a = 0; a < 3; ++a) {
    const double o = locus.origin[a];
    const double d = locus.direction[a];
    if (d == 0.0) {
      if (o < box_min[a] || o > box_max[a]) return std::nullopt;
      continue;
    }
    double ta = (box_min[a] - o) / d;
    double tb = (box_max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t0 <= t1) || !std::isfinite(t1)) return std::nullopt;
  Locus out = locus;
  out.t_near = t0;
  out.t_far = t1;
  return out;
}

std::optional<Locus> clip_to_box(const Locus& locus, const SceneFrame& frame) {
  return clip_to_box(locus, frame.bbox_min, frame.bbox_max);
}

Vec3 normalize_point(const SceneFrame& frame, const Vec3& p) { return (p - frame.bbox_min) * frame.scale(); }

Vec3 denormalize_point(const SceneFrame& frame, const Vec3& p) { return p / frame.scale() + frame.bbox_min; }

Locus normalize_locus(const SceneFrame& frame, const Locus& locus) {
  const double k = frame.scale();
  Locus out;
  out.origin = normalize_point(frame, locus.origin);
  out.direction = locus.direction;
  out.t_near = locus.t_near * k;
  out.t_far = locus.t_far * k;
  return out;
}

std::optional<double> intersect_plane_z(const Locus& locus, double plane_z) {
  const double dz = locus.direction.z();
  if (dz == 0.0) return std::nullopt;
  const double t = (plane_z - locus.origin.z()) / dz;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

namespace {

Vec2 ground_point(const Locus& l, double plane_z, const Vec2& pixel) {
  const auto t = intersect_plane_z(l, plane_z);
  if (!t) throw DomainError("boundary pixel " + pixel_str(pixel) + " ray does not reach the footprint plane");
  return l.at(*t).head<2>();
}

}  // namespace

Polygon image_footprint(const PinholeModel& model, double terrain_plane_z) {
  if (!(model.position.z() > terrain_plane_z)) throw DomainError("camera is not above the footprint plane");
  const double f = model.focal_px();
  const double w = model.width;
  const double h = model.height;
  // Lines project to lines, so the four frame corners define the footprint.
  const Vec2 corners[4] = {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
  Polygon poly;
  for (const Vec2& c : corners) {
    Locus l;
    l.origin = model.position;
    l.direction = (model.orientation * camera_ray(c.x() - 0.5 * w, c.y() - 0.5 * h, f)).normalized();
    poly.push_back(ground_point(l, terrain_plane_z, c));
  }
  return poly;
}

Polygon image_footprint(const LinescanModel& model, double terrain_plane_z, int max_row_steps) {
  model.validate();
  const int rows = model.rows();
  const int steps = std::max(1, std::min(max_row_steps, rows - 1));
  std::vector<double> sample_rows;
  for (int k = 0; k <= steps; ++k) {
    sample_rows.push_back(rows == 1 ? 0.0 : static_cast<double>(rows - 1) * k / steps);
  }
  const double f = model.focal_px();
  const double w = model.detector_width;
  auto edge = [&](double col, double row) {
    const PoseSample pose = model.pose_at(model.row_time(row));
    if (!(pose.position.z() > terrain_plane_z)) throw DomainError("camera is not above the footprint plane");
    Locus l;
    l.origin = pose.position;
    l.direction = (pose.orientation * camera_ray(col - 0.5 * w, 0.0, f)).normalized();
    return ground_point(l, terrain_plane_z, Vec2(col, row));
  };
  Polygon poly;
  for (double r : sample_rows) poly.push_back(edge(0.0, r));
  for (auto it = sample_rows.rbegin(); it != sample_rows.rend(); ++it) poly.push_back(edge(w, *it));
  return poly;
}

Polygon image_footprint(const CameraModel& camera, double terrain_plane_z) {
  return std::visit([&](const auto& m) { return image_footprint(m, terrain_plane_z); }, camera);
}

Quat look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - position).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Quat(r).normalized();
}

}  // namespace ntm
