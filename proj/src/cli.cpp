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


#include "ntm/cli.hpp"

#include "ntm/render.hpp"
#include "ntm/train.hpp"

#include "json.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace ntm {

using json = nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string image_ext(int channels) { return channels == 1 ? ".pgm" : ".ppm"; }

std::uint64_t options_hash(const json& j) { return fnv1a64(j.dump()); }

template <typename T>
TrainResult train_typed(const RunConfig& cfg, const Dataset& data) {
  ModelSpec spec = cfg.model;
  spec.channels = data.channels;
  NtmModel<T> model(spec, data.frame);
  model.initialize(cfg.seed());
  Trainer<T> trainer(std::move(model), cfg.train, cfg.sampler);

  const fs::path dir = cfg.output_dir;
  TrainResult result;
  result.checkpoint = dir / "model.ckpt";
  const fs::path csv_path = dir / "metrics.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError("cannot open '" + csv_path.string() + "' for writing");
  csv << "iteration,loss,s,mean_accumulation,wall_time_s\n";

  LoopHooks<T> hooks;
  hooks.on_metrics = [&](const MetricsRow& row) {
    result.metrics.push_back(row);
    csv << row.iteration << ',' << num(row.loss) << ',' << num(row.s) << ',' << num(row.mean_accumulation) << ','
        << num(row.wall_time_s) << '\n';
    csv.flush();
  };
  hooks.on_checkpoint = [&](int it, const NtmModel<T>& m) {
    if (it < 0) {
      write_checkpoint(dir / "abort.ckpt", m, {-1 - it, cfg.seed()});
    } else if (it == cfg.train.iterations) {
      write_checkpoint(result.checkpoint, m, {it, cfg.seed()});
    } else {
      write_checkpoint(dir / ("checkpoint_" + std::to_string(it) + ".ckpt"), m, {it, cfg.seed()});
    }
  };
  train_loop(trainer, data, hooks);
  if (!csv) throw IoError("write to '" + csv_path.string() + "' failed");
  return result;
}

template <typename T>
ExtractResult extract_typed(const fs::path& checkpoint, const ExtractOptions& opts, const std::optional<Dataset>& data) {
  const NtmModel<T> model = read_checkpoint<T>(checkpoint);
  double cell = opts.cell_m;
  if (cell == 0.0 && data) cell = data->gsd_m;
  if (!(cell > 0.0)) throw ConfigError("no grid cell size: pass a cell size or a dataset with a recorded GSD");
  const GridSpec grid = grid_for_frame(model.frame(), cell);
  ExtractResult r{extract_dtm(model, grid), extract_texture(model, grid)};
  if (opts.footprint_mask && data) {
    const double mid = 0.5 * (model.frame().bbox_min.z() + model.frame().bbox_max.z());
    std::vector<Polygon> fps;
    for (const auto& v : data->views) fps.push_back(image_footprint(v.camera, mid));
    const auto mask = footprint_union_mask(fps, grid);
    r.dtm.apply_mask(mask);
    r.texture.apply_mask(mask);
  }
  return r;
}

template <typename T>
RenderResult render_typed(const RenderOptions& opts, const std::optional<Dataset>& data) {
  const NtmModel<T> model = read_checkpoint<T>(opts.checkpoint);
  if (data) {
    for (const auto& v : data->views) {
      if (v.name == opts.view_name) return render_camera(model, v.camera, opts.sampler, opts.threads);
    }
    throw ConfigError("dataset has no view named '" + opts.view_name + "'");
  }
  return render_camera(model, CameraModel(novel_view_camera(model.frame(), opts.view)), opts.sampler, opts.threads);
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError("no " + what + " given");
  if (!fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

}  // namespace

Dataset cmd_synth(const SynthOptions& opts) {
  if (opts.out.empty()) throw ConfigError("no output directory given");
  const ScenePreset preset = scene_preset(opts.preset);
  Dataset data = build_preset(preset, opts.seed);
  const GridSpec grid = grid_for_frame(data.frame, data.gsd_m);
  const TerrainGrid reference =
      sample_function(grid, [&](const Vec2& p) { return terrain_height(preset.terrain, p); });
  data.reference_dtm = "reference.asc";
  write_dataset(opts.out, data);
  write_asc(opts.out / data.reference_dtm, reference);
  write_metadata(opts.out / "metadata.json", "synth", opts.seed,
                 options_hash({{"preset", opts.preset}, {"seed", opts.seed}}));
  return data;
}

TrainResult cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const Dataset data = read_dataset(cfg.dataset);
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "config.json", json::parse(cfg.canonical()).dump(2) + "\n");
  write_metadata(cfg.output_dir / "metadata.json", "train", cfg.seed(), cfg.hash());
  return cfg.precision == Precision::Float32 ? train_typed<float>(cfg, data) : train_typed<double>(cfg, data);
}

ExtractResult cmd_extract(const ExtractOptions& opts) {
  require_file(opts.checkpoint, "checkpoint");
  if (opts.dataset) require_file(*opts.dataset, "dataset");
  if (opts.out.empty()) throw ConfigError("no output directory given");
  if (!(opts.cell_m >= 0.0)) throw ConfigError("grid cell size must be non-negative");
  std::optional<Dataset> data;
  if (opts.dataset) data = read_dataset(*opts.dataset);
  ExtractResult r = checkpoint_scalar(opts.checkpoint) == "float64" ? extract_typed<double>(opts.checkpoint, opts, data)
                                                                      : extract_typed<float>(opts.checkpoint, opts, data);
  write_asc(opts.out / "dtm.asc", r.dtm);
  write_texture(opts.out / ("texture" + image_ext(r.texture.channels)), r.texture);
  write_metadata(opts.out / "metadata.json", "extract", opts.seed,
                 options_hash({{"checkpoint", opts.checkpoint.generic_string()},
                               {"dataset", opts.dataset ? opts.dataset->generic_string() : ""},
                               {"cell_m", opts.cell_m},
                               {"footprint_mask", opts.footprint_mask}}));
  return r;
}

PinholeModel novel_view_camera(const SceneFrame& frame, const NovelView& view) {
  if (!(view.field_of_view_deg > 0.0 && view.field_of_view_deg < 180.0)) {
    throw ConfigError("field of view must lie in (0, 180) degrees");
  }
  if (!(view.off_nadir_deg >= 0.0 && view.off_nadir_deg < 90.0)) {
    throw ConfigError("off-nadir angle must lie in [0, 90) degrees");
  }
  if (view.width < 1 || view.height < 1) throw ConfigError("image size must be positive");
  const Vec3 center = 0.5 * (frame.bbox_min + frame.bbox_max);
  const double half_diag = 0.5 * (frame.bbox_max - frame.bbox_min).head<2>().norm();
  const double dist = half_diag / std::tan(0.5 * deg2rad(view.field_of_view_deg));
  const double off = deg2rad(view.off_nadir_deg);
  const double az = deg2rad(view.azimuth_deg);
  PinholeModel cam;
  cam.position = center + dist * Vec3(std::sin(off) * std::cos(az), std::sin(off) * std::sin(az), std::cos(off));
  cam.orientation = look_at(cam.position, center, view.off_nadir_deg > 0.0 ? Vec3::UnitZ() : Vec3::UnitY());
  cam.field_of_view_deg = view.field_of_view_deg;
  cam.width = view.width;
  cam.height = view.height;
  return cam;
}

template <typename T>
RenderResult render_camera(const NtmModel<T>& model, const CameraModel& camera, const SamplerConfig& sampler,
                           int threads) {
  sampler.validate();
  if (threads < 1) throw ConfigError("thread count must be positive");
  const Eigen::Vector2i size = image_size(camera);
  const int w = size.x(), h = size.y(), ch = model.spec().channels;
  const SceneFrame& frame = model.frame();
  RenderResult out;
  out.image = Image(w, h, ch);
  out.depth.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN());
  out.accumulation.assign(out.depth.size(), 0.0);
  const ModelFields<T> fields{model};
  // One batch per image row keeps results independent of the thread count.
  std::atomic<int> next_row{0};
  auto work = [&]() {
    for (int y = next_row++; y < h; y = next_row++) {
      std::vector<Locus> loci;
      std::vector<int> xs;
      for (int x = 0; x < w; ++x) {
        const auto clipped = clip_to_box(camera_locus(camera, pixel_center(camera, x, y)), frame);
        if (!clipped || !(clipped->t_far > clipped->t_near)) continue;
        loci.push_back(normalize_locus(frame, *clipped));
        xs.push_back(x);
      }
      if (loci.empty()) continue;
      std::vector<Rng> rngs;
      for (int x : xs) rngs.emplace_back(0, static_cast<std::uint64_t>(y) * w + x);
      const auto r = render_rays<T>(fields, std::span<const Locus>(loci), sampler, std::span<Rng>(rngs), false);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t p = static_cast<std::size_t>(y) * w + xs[i];
        for (int c = 0; c < ch; ++c) out.image.at(xs[i], y, c) = static_cast<float>(r[i].color(c));
        out.depth[p] = static_cast<double>(r[i].depth) / frame.scale();
        out.accumulation[p] = static_cast<double>(r[i].accumulation);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double d : out.depth) {
    if (std::isfinite(d)) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  out.depth_min = lo;
  out.depth_max = hi;
  out.depth_image = Image(w, h, 1);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t p = 0; p < out.depth.size(); ++p) {
    if (std::isfinite(out.depth[p])) out.depth_image.data[p] = static_cast<float>((out.depth[p] - lo) / span);
  }
  return out;
}

template RenderResult render_camera<float>(const NtmModel<float>&, const CameraModel&, const SamplerConfig&, int);
template RenderResult render_camera<double>(const NtmModel<double>&, const CameraModel&, const SamplerConfig&, int);

RenderResult cmd_render(const RenderOptions& opts) {
  require_file(opts.checkpoint, "checkpoint");
  if (opts.out.empty()) throw ConfigError("no output directory given");
  if (opts.dataset) {
    require_file(*opts.dataset, "dataset");
    if (opts.view_name.empty()) throw ConfigError("rendering a dataset view needs a view name");
  } else if (!opts.view_name.empty()) {
    throw ConfigError("a view name needs a dataset");
  }
  std::optional<Dataset> data;
  if (opts.dataset) data = read_dataset(*opts.dataset);
  RenderResult r = checkpoint_scalar(opts.checkpoint) == "float64" ? render_typed<double>(opts, data)
                                                                     : render_typed<float>(opts, data);
  write_pnm(opts.out / ("render" + image_ext(r.image.channels)), r.image);
  write_pnm(opts.out / "depth.pgm", r.depth_image);
  const json depth_meta = {{"units", "meters"}, {"depth_min", r.depth_min}, {"depth_max", r.depth_max},
                           {"normalization", "(depth - depth_min) / (depth_max - depth_min)"}};
  write_text(opts.out / "depth.json", depth_meta.dump(2) + "\n");
  write_metadata(opts.out / "metadata.json", "render", opts.seed,
                 options_hash({{"checkpoint", opts.checkpoint.generic_string()},
                               {"view", opts.view_name},
                               {"off_nadir_deg", opts.view.off_nadir_deg},
                               {"azimuth_deg", opts.view.azimuth_deg},
                               {"field_of_view_deg", opts.view.field_of_view_deg},
                               {"width", opts.view.width},
                               {"height", opts.view.height}}));
  return r;
}

std::string format_summary(const ErrorReport& r) {
  std::ostringstream os;
  os << "cells_valid " << r.n_valid << "\n"
     << "cells_kept " << r.n_trimmed << "\n"
     << "trim_fraction " << num(r.trim_fraction) << "\n"
     << "mean_error_m " << num(r.mean_error) << "\n"
     << "std_dev_m " << num(r.std_dev) << "\n"
     << "untrimmed_mean_error_m " << num(r.untrimmed_mean) << "\n"
     << "untrimmed_std_dev_m " << num(r.untrimmed_std) << "\n";
  return os.str();
}

ErrorReport cmd_eval(const EvalOptions& opts) {
  require_file(opts.dtm, "DTM");
  require_file(opts.reference, "reference DTM");
  if (!(opts.trim >= 0.0 && opts.trim < 0.5)) throw ConfigError("trim fraction must lie in [0, 0.5)");
  const TerrainGrid dtm = read_asc(opts.dtm);
  TerrainGrid ref = read_asc(opts.reference);
  if (!(ref.spec == dtm.spec)) ref = resample_grid(ref, dtm.spec);
  const ErrorReport r = error_stats(dtm, ref, opts.trim);
  if (opts.out) {
    const fs::path& out = *opts.out;
    std::ostringstream csv;
    csv << "metric,value\n"
        << "mean_error_m," << num(r.mean_error) << "\n"
        << "std_dev_m," << num(r.std_dev) << "\n"
        << "trim_fraction," << num(r.trim_fraction) << "\n"
        << "cells_valid," << r.n_valid << "\n"
        << "cells_kept," << r.n_trimmed << "\n"
        << "untrimmed_mean_error_m," << num(r.untrimmed_mean) << "\n"
        << "untrimmed_std_dev_m," << num(r.untrimmed_std) << "\n";
    write_text(out / "eval.csv", csv.str());
    write_histogram_csv(out / "histogram.csv", r.histogram);
    write_histogram_csv(out / "histogram_untrimmed.csv", r.histogram_untrimmed);
    write_text(out / "summary.txt", format_summary(r));
    write_metadata(out / "metadata.json", "eval", opts.seed,
                   options_hash({{"dtm", opts.dtm.generic_string()},
                                 {"reference", opts.reference.generic_string()},
                                 {"trim", opts.trim}}));
  }
  return r;
}

}  // namespace ntm
