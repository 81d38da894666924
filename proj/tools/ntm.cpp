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


// ntm: synth | train | extract | render | eval

#include "CLI11.hpp"
#include "ntm/cli.hpp"

#include <iostream>

using namespace ntm;

namespace {

// Applies command-line overrides on top of a loaded config.
RunConfig load_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed,
                              const std::optional<int>& threads, const std::string& out) {
  RunConfig cfg = load_run_config(path);
  if (seed) cfg.train.seed = *seed;
  if (threads) cfg.train.threads = *threads;
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural terrain maps from multi-view imagery"};
  app.require_subcommand(1);

  std::string config, out, preset = "ges-smoke";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset from a scene preset");
  synth->add_option("--preset", preset, "Scene preset")->capture_default_str();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", config, "Run config file")->required();
  train->add_option("--seed", seed, "Override the configured seed");
  train->add_option("--threads", threads, "Override the configured thread count");
  train->add_option("--out", out, "Override the configured output directory");

  ExtractOptions ex;
  std::string ex_ckpt, ex_data;
  bool no_mask = false;
  auto* extract = app.add_subcommand("extract", "Sample a DTM and texture from a checkpoint");
  extract->add_option("--config", config, "Run config supplying checkpoint, dataset, grid and output");
  extract->add_option("--checkpoint", ex_ckpt, "Checkpoint file");
  extract->add_option("--dataset", ex_data, "Dataset for the footprint mask and default cell size");
  extract->add_option("--cell", ex.cell_m, "Grid cell size in meters");
  extract->add_flag("--no-mask", no_mask, "Keep cells outside the image footprints");
  extract->add_option("--seed", seed, "Seed recorded in metadata");
  extract->add_option("--out", out, "Output directory");

  RenderOptions rd;
  std::string rd_ckpt, rd_data;
  auto* render = app.add_subcommand("render", "Render an image and depth map from a checkpoint");
  render->add_option("--config", config, "Run config supplying checkpoint, sampler and output");
  render->add_option("--checkpoint", rd_ckpt, "Checkpoint file");
  render->add_option("--dataset", rd_data, "Dataset holding the view to render");
  render->add_option("--view", rd.view_name, "Training view name");
  render->add_option("--off-nadir", rd.view.off_nadir_deg, "Off-nadir angle in degrees")->capture_default_str();
  render->add_option("--azimuth", rd.view.azimuth_deg, "Azimuth in degrees from +x")->capture_default_str();
  render->add_option("--fov", rd.view.field_of_view_deg, "Field of view in degrees")->capture_default_str();
  render->add_option("--width", rd.view.width, "Image width")->capture_default_str();
  render->add_option("--height", rd.view.height, "Image height")->capture_default_str();
  render->add_option("--threads", threads, "Worker threads");
  render->add_option("--seed", seed, "Seed recorded in metadata");
  render->add_option("--out", out, "Output directory");

  EvalOptions ev;
  std::string ev_dtm, ev_ref;
  auto* eval = app.add_subcommand("eval", "Compare a DTM against a reference raster");
  eval->add_option("--dtm", ev_dtm, "DTM raster (.asc)")->required();
  eval->add_option("--reference", ev_ref, "Reference raster (.asc)")->required();
  eval->add_option("--trim", ev.trim, "Fraction trimmed from each tail")->capture_default_str();
  eval->add_option("--seed", seed, "Seed recorded in metadata");
  eval->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (synth->parsed()) {
      cmd_synth({preset, seed.value_or(0), out});
    } else if (train->parsed()) {
      const RunConfig cfg = load_with_overrides(config, seed, threads, out);
      const TrainResult r = cmd_train(cfg);
      if (!r.metrics.empty()) {
        const MetricsRow& last = r.metrics.back();
        std::cout << "iteration " << last.iteration << " loss " << last.loss << " s " << last.s << "\n";
      }
    } else if (extract->parsed()) {
      if (!config.empty()) {
        const RunConfig cfg = load_with_overrides(config, seed, threads, out);
        cfg.validate();
        ex.checkpoint = cfg.output_dir / "model.ckpt";
        ex.dataset = cfg.dataset;
        if (ex.cell_m == 0.0) ex.cell_m = cfg.grid_cell_m;
        ex.footprint_mask = cfg.footprint_mask;
        ex.seed = cfg.seed();
        ex.out = cfg.output_dir;
      }
      if (!ex_ckpt.empty()) ex.checkpoint = ex_ckpt;
      if (!ex_data.empty()) ex.dataset = fs::path(ex_data);
      if (!out.empty()) ex.out = out;
      if (no_mask) ex.footprint_mask = false;
      if (seed) ex.seed = *seed;
      cmd_extract(ex);
    } else if (render->parsed()) {
      if (!config.empty()) {
        const RunConfig cfg = load_with_overrides(config, seed, threads, out);
        cfg.validate();
        rd.checkpoint = cfg.output_dir / "model.ckpt";
        rd.sampler = cfg.sampler;
        rd.threads = cfg.train.threads;
        rd.seed = cfg.seed();
        rd.out = cfg.output_dir / "render";
      }
      if (!rd_ckpt.empty()) rd.checkpoint = rd_ckpt;
      if (!rd_data.empty()) rd.dataset = fs::path(rd_data);
      if (!out.empty()) rd.out = out;
      if (threads) rd.threads = *threads;
      if (seed) rd.seed = *seed;
      cmd_render(rd);
    } else if (eval->parsed()) {
      ev.dtm = ev_dtm;
      ev.reference = ev_ref;
      if (!out.empty()) ev.out = fs::path(out);
      ev.seed = seed.value_or(0);
      std::cout << format_summary(cmd_eval(ev));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const RuntimeAbort& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitAbort;
  }
  return kExitOk;
}
