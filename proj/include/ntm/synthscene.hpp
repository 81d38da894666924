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


// Ground-truth scenes: closed-form terrains with procedural textures, an exact
// ray/terrain intersection renderer, and orbital acquisition generators.

#ifndef NTM_SYNTHSCENE_HPP
#define NTM_SYNTHSCENE_HPP

#include "ntm/dataset.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ntm {

struct Texture {
  enum class Kind { Constant, Checker, FractalNoise, HeightShaded };
  Kind kind = Kind::FractalNoise;
  Vec3 color = Vec3(0.5, 0.5, 0.5);  // constant color, or first checker color
  Vec3 color2 = Vec3(0.1, 0.1, 0.1);
  double period_m = 6000.0;  // checker cell size, or coarsest noise wavelength
  int octaves = 4;
  double contrast = 0.8;
  std::uint64_t seed = 1;
  bool lambert = false;
  Vec3 sun_direction = Vec3(1, 1, 2).normalized();  // towards the sun
};

struct Hill {
  Vec2 center = Vec2::Zero();
  double amplitude = 0.0;
  double width = 1.0;  // Gaussian standard deviation, meters
};

struct AnalyticTerrain {
  enum class Kind { Plane, GaussianHills, Crater };
  Kind kind = Kind::Plane;
  double base = 0.0;  // plane height, or the base level of hills and craters
  std::vector<Hill> hills;
  Vec2 crater_center = Vec2::Zero();
  double crater_radius = 1000.0;
  double crater_depth = 200.0;
  double crater_rim = 50.0;
  Texture texture;

  static AnalyticTerrain plane(double height);
  static AnalyticTerrain gaussian_hills(double base, std::vector<Hill> hills);
  static AnalyticTerrain crater(double base, const Vec2& center, double radius, double depth, double rim_height);

  // Smallest horizontal length scale of the height function (meters).
  double min_feature_width() const;
};

double terrain_height(const AnalyticTerrain& terrain, const Vec2& p);
// Surface normal by central differences.
Vec3 terrain_normal(const AnalyticTerrain& terrain, const Vec2& p);
// Texture color at a ground point (d = 3; gray renders average the channels).
Vec3 terrain_color(const AnalyticTerrain& terrain, const Vec2& p);

// Band-limited value noise in [0, 1].
double fractal_noise(const Vec2& p, double period, int octaves, std::uint64_t seed);

// First t in [t_near, t_far] with z(t) = h(x(t), y(t)), or nullopt. The
// locus must have finite bounds (clip it to the scene box first). Step is the
// marching step; zero selects min_feature_width / 10.
std::optional<double> ray_terrain_intersect(const AnalyticTerrain& terrain, const Locus& locus, double step = 0.0);

struct GroundTruthRender {
  Image image;
  std::vector<double> depth;  // world t of the hit, NaN where the ray misses
  std::vector<std::uint8_t> hit;
};

GroundTruthRender render_ground_truth(const AnalyticTerrain& terrain, const CameraModel& camera,
                                      const SceneFrame& frame, int channels);

struct PassSpec {
  enum class Kind { PinholeOrbit, LinescanPass };
  Kind kind = Kind::PinholeOrbit;
  int count = 8;                      // pinhole views
  double altitude_m = 250e3;
  double track_length_m = 175e3;     // West-East extent of camera positions
  Vec3 subject = Vec3::Zero();       // scene center the track is centered on
  bool look_at_subject = true;       // otherwise nadir-pointing
  double field_of_view_deg = 5.0;
  int width = 64;
  int height = 64;
  double position_jitter_m = 0.0;    // isotropic Gaussian camera position noise
  // Linescan acquisition.
  int detector_width = 64;
  double ground_speed_mps = 7000.0;
  bool double_look = false;          // add a backward-looking second image
  double backward_tilt_deg = 27.6;
  int pose_samples = 9;

  void validate() const;
};

// Camera models of a pass (no rendering).
std::vector<CameraModel> make_cameras(const PassSpec& spec, Rng& rng);

// Scene box whose x-y extent is the padded union of footprints on the mid plane.
SceneFrame frame_from_footprints(const std::vector<CameraModel>& cameras, double z_min, double z_max,
                                 double pad_fraction = 0.05, double norm_scale = 10.0);

// Nadir ground sample distance at the subject for the pass geometry.
double pass_gsd(const PassSpec& spec);

Dataset generate_pass(const AnalyticTerrain& terrain, const SceneFrame& frame, const PassSpec& spec, Rng& rng,
                      int channels = 3);

struct ScenePreset {
  std::string name;
  AnalyticTerrain terrain;
  PassSpec pass;
  double z_min = 0.0;
  double z_max = 4000.0;
  int channels = 3;
};

std::vector<std::string> preset_names();
// Throws ConfigError listing the known presets.
ScenePreset scene_preset(const std::string& name);
// Cameras, box and rendered views for a preset.
Dataset build_preset(const ScenePreset& preset, std::uint64_t seed);

}  // namespace ntm

#endif  // NTM_SYNTHSCENE_HPP
