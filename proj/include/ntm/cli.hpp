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


// Command implementations behind the ntm executable.

#ifndef NTM_CLI_HPP
#define NTM_CLI_HPP

#include "ntm/config.hpp"
#include "ntm/dtm.hpp"
#include "ntm/io.hpp"
#include "ntm/synthscene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ntm {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitAbort = 3;

struct SynthOptions {
  std::string preset = "ges-smoke";
  std::uint64_t seed = 0;
  fs::path out;
};

// Writes manifest, images, reference.asc and metadata.json.
Dataset cmd_synth(const SynthOptions& opts);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  fs::path checkpoint;
};

// Writes metrics.csv, checkpoints, config.json and metadata.json to cfg.output_dir.
// Throws RuntimeAbort after saving abort.ckpt when the loss becomes non-finite.
TrainResult cmd_train(const RunConfig& cfg);

struct ExtractOptions {
  fs::path checkpoint;
  std::optional<fs::path> dataset;  // cameras for the footprint mask and the default cell size
  double cell_m = 0.0;              // 0 selects the dataset GSD
  bool footprint_mask = true;
  std::uint64_t seed = 0;
  fs::path out;
};

struct ExtractResult {
  TerrainGrid dtm;
  TerrainGrid texture;
};

// Writes dtm.asc, texture.ppm/.pgm with a .geo sidecar, and metadata.json.
ExtractResult cmd_extract(const ExtractOptions& opts);

struct NovelView {
  double off_nadir_deg = 30.0;
  double azimuth_deg = 0.0;  // from +x toward +y
  double field_of_view_deg = 10.0;
  int width = 256;
  int height = 256;
};

// Pinhole camera aimed at the box center whose view cone spans the box diagonal.
PinholeModel novel_view_camera(const SceneFrame& frame, const NovelView& view);

struct RenderOptions {
  fs::path checkpoint;
  std::optional<fs::path> dataset;  // with view_name, renders that training view
  std::string view_name;
  NovelView view;
  SamplerConfig sampler;
  int threads = 1;
  std::uint64_t seed = 0;
  fs::path out;
};

struct RenderResult {
  Image image;
  Image depth_image;         // normalized to [depth_min, depth_max]
  std::vector<double> depth;  // meters along the ray, NaN outside the box
  std::vector<double> accumulation;
  double depth_min = 0.0;
  double depth_max = 0.0;
};

// Renders a model through any camera; rows are split across threads.
template <typename T>
RenderResult render_camera(const NtmModel<T>& model, const CameraModel& camera, const SamplerConfig& sampler,
                           int threads);
extern template RenderResult render_camera<float>(const NtmModel<float>&, const CameraModel&, const SamplerConfig&,
                                                  int);
extern template RenderResult render_camera<double>(const NtmModel<double>&, const CameraModel&,
                                                   const SamplerConfig&, int);

// Writes render.ppm/.pgm, depth.pgm, depth.json and metadata.json.
RenderResult cmd_render(const RenderOptions& opts);

struct EvalOptions {
  fs::path dtm;
  fs::path reference;
  double trim = 0.02;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};

// A reference on a different grid is bilinearly resampled onto the DTM grid.
// Writes eval.csv, histogram.csv, histogram_untrimmed.csv, summary.txt and metadata.json.
ErrorReport cmd_eval(const EvalOptions& opts);

std::string format_summary(const ErrorReport& report);

}  // namespace ntm

#endif  // NTM_CLI_HPP
