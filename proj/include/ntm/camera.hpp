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

// Sensor geometry: pixel loci for pinhole and linescan cameras, the local
// scene frame with its world <-> network normalization, and image footprints.
//
// Camera frame convention: +x along image columns, +y along image rows,
// +z along the principal axis. Orientations are camera-to-world rotations.
// Continuous pixel coordinates put the center of pixel (c, r) at
// (c + 0.5, r + 0.5); the principal point is (width / 2, height / 2).

#ifndef NTM_CAMERA_HPP
#define NTM_CAMERA_HPP

#include "ntm/core.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace ntm {

struct Locus {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_near = 0.0;
  double t_far = kInf;

  Vec3 at(double t) const { return origin + t * direction; }
};

struct PinholeModel {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  double field_of_view_deg = 5.0;  // across the image width
  int width = 1;
  int height = 1;

  double focal_px() const;
  Vec3 principal_axis() const { return orientation * Vec3::UnitZ(); }
};

struct PoseSample {
  double time_s = 0.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

struct LinescanModel {
  std::vector<PoseSample> pose_samples;
  std::vector<double> row_times;  // seconds, one per image row
  int detector_width = 1;
  double field_of_view_cross_track_deg = 5.7;

  int rows() const { return static_cast<int>(row_times.size()); }
  double focal_px() const;
  // Throws ConfigError on non-monotone times or poses not spanning the rows.
  void validate() const;
  // Interpolated platform pose at an acquisition time inside the pose span.
  PoseSample pose_at(double time_s) const;
  double row_time(double row) const;
};

using CameraModel = std::variant<PinholeModel, LinescanModel>;

// Image extent (columns, rows) in pixels.
Eigen::Vector2i image_size(const CameraModel& camera);

// Continuous coordinate of the center of pixel (x, y). Linescan rows are
// addressed by their row index, so the row coordinate is y itself.
Vec2 pixel_center(const CameraModel& camera, int x, int y);

struct SceneFrame {
  Vec3 origin_world = Vec3::Zero();  // ENU origin, informational
  Vec3 bbox_min = Vec3::Constant(-1.0);
  Vec3 bbox_max = Vec3::Constant(1.0);
  double norm_scale = 10.0;

  double max_extent() const { return (bbox_max - bbox_min).maxCoeff(); }
  // Meters -> normalized units.
  double scale() const;
  void validate() const;
  Vec3 normalized_box_max() const { return (bbox_max - bbox_min) * scale(); }
};

Locus pinhole_locus(const PinholeModel& model, const Vec2& pixel);
Locus linescan_locus(const LinescanModel& model, const Vec2& pixel);
Locus camera_locus(const CameraModel& camera, const Vec2& pixel);

// Slab-method ray/AABB intersection, restricted to t >= 0.
std::optional<Locus> clip_to_box(const Locus& locus, const Vec3& box_min, const Vec3& box_max);
std::optional<Locus> clip_to_box(const Locus& locus, const SceneFrame& frame);

Vec3 normalize_point(const SceneFrame& frame, const Vec3& p);
Vec3 denormalize_point(const SceneFrame& frame, const Vec3& p);
// World locus -> normalized locus (t values rescaled, direction unchanged).
Locus normalize_locus(const SceneFrame& frame, const Locus& locus);

using Polygon = std::vector<Vec2>;

// Boundary-pixel ray intersections with the plane z = terrain_plane_z.
Polygon image_footprint(const PinholeModel& model, double terrain_plane_z);
Polygon image_footprint(const LinescanModel& model, double terrain_plane_z, int max_row_steps = 64);
Polygon image_footprint(const CameraModel& camera, double terrain_plane_z);

// Camera-to-world rotation whose principal axis points from position to target,
// with image rows running against `up` (north-up images for nadir views).
Quat look_at(const Vec3& position, const Vec3& target, const Vec3& up = Vec3::UnitY());

// Intersection of a ray with the plane z = plane_z, or nullopt when the ray
// is parallel to the plane or points away from it.
std::optional<double> intersect_plane_z(const Locus& locus, double plane_z);

}  // namespace ntm

#endif  // NTM_CAMERA_HPP
