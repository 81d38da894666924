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


// Run configuration: sectioned key = value text, unknown keys rejected.

#ifndef NTM_CONFIG_HPP
#define NTM_CONFIG_HPP

#include "ntm/field.hpp"
#include "ntm/render.hpp"
#include "ntm/train.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace ntm {

enum class Precision { Float32, Float64 };

struct RunConfig {
  std::filesystem::path dataset;     // directory or manifest
  std::filesystem::path output_dir;  // checkpoints, metrics, rasters
  TrainConfig train;
  SamplerConfig sampler;
  ModelSpec model;  // channels are taken from the dataset
  Precision precision = Precision::Float32;
  double grid_cell_m = 0.0;  // 0 selects the dataset GSD
  bool footprint_mask = true;

  std::uint64_t seed() const { return train.seed; }
  // Checks values and that the dataset path exists.
  void validate() const;
  // Deterministic JSON rendering of every resolved value.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Relative paths resolve against base_dir.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace ntm

#endif  // NTM_CONFIG_HPP
