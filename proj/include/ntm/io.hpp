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


// File formats: ESRI ASCII height grids, binary PGM/PPM images with a
// geotransform sidecar, the dataset manifest, model checkpoints, run metadata
// and CSV outputs.

#ifndef NTM_IO_HPP
#define NTM_IO_HPP

#include "ntm/dataset.hpp"
#include "ntm/dtm.hpp"
#include "ntm/field.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ntm {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ESRI ASCII grid. Rows are written from the top (northern) row; invalid
// cells carry the no-data sentinel. Numbers use the shortest representation
// that reads back to the same double.
void write_asc(const fs::path& path, const TerrainGrid& grid);
TerrainGrid read_asc(const fs::path& path);

// 8-bit binary PGM (1 channel) or PPM (3 channels). Values in [0, 1] are
// quantized by rounding; reading maps byte b to b / 255.
void write_pnm(const fs::path& path, const Image& image);
Image read_pnm(const fs::path& path);

// Texture raster of a grid as an image (top row first) plus "<path>.geo".
void write_texture(const fs::path& path, const TerrainGrid& grid);
void write_geotransform(const fs::path& path, const GridSpec& spec);
GridSpec read_geotransform(const fs::path& path);

inline constexpr const char* kManifestFormat = "ntm-dataset/1";

// manifest.json plus one image file per view; images are quantized to 8 bits.
void write_dataset(const fs::path& dir, const Dataset& data);
// Accepts the dataset directory or the manifest path.
Dataset read_dataset(const fs::path& path);

inline constexpr const char* kCheckpointMagic = "NTMCKPT\n";
inline constexpr const char* kCheckpointFormat = "ntm-checkpoint/1";

struct CheckpointInfo {
  int iteration = 0;
  std::uint64_t seed = 0;
};

template <typename T>
void write_checkpoint(const fs::path& path, const NtmModel<T>& model, const CheckpointInfo& info);
template <typename T>
NtmModel<T> read_checkpoint(const fs::path& path, CheckpointInfo* info = nullptr);

// "float32" or "float64", read from the header only.
std::string checkpoint_scalar(const fs::path& path);

extern template void write_checkpoint<float>(const fs::path&, const NtmModel<float>&, const CheckpointInfo&);
extern template void write_checkpoint<double>(const fs::path&, const NtmModel<double>&, const CheckpointInfo&);
extern template NtmModel<float> read_checkpoint<float>(const fs::path&, CheckpointInfo*);
extern template NtmModel<double> read_checkpoint<double>(const fs::path&, CheckpointInfo*);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

inline constexpr const char* kToolVersion = "0.1.0";

// metadata.json next to command outputs.
void write_metadata(const fs::path& path, const std::string& command, std::uint64_t seed, std::uint64_t config_hash);

void write_histogram_csv(const fs::path& path, const Histogram& h);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace ntm

#endif  // NTM_IO_HPP
