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


#include "ntm/io.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ntm {

using json = nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s, const fs::path& path) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw IoError("'" + path.string() + "': malformed number '" + std::string(s) + "'");
  }
  return v;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Quat quat_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("expected a quaternion [w, x, y, z]");
  return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

json to_json(const SceneFrame& f) {
  return {{"origin_world", to_json(f.origin_world)},
          {"bbox_min", to_json(f.bbox_min)},
          {"bbox_max", to_json(f.bbox_max)},
          {"norm_scale", f.norm_scale}};
}

SceneFrame frame_from(const json& j) {
  SceneFrame f;
  if (j.contains("origin_world")) f.origin_world = vec3_from(j.at("origin_world"));
  f.bbox_min = vec3_from(j.at("bbox_min"));
  f.bbox_max = vec3_from(j.at("bbox_max"));
  f.norm_scale = j.at("norm_scale").get<double>();
  f.validate();
  return f;
}

json to_json(const HashEncodingSpec& e) {
  return {{"levels", e.levels},
          {"base_resolution", e.base_resolution},
          {"max_resolution", e.max_resolution},
          {"log2_table_size", e.log2_table_size},
          {"features_per_level", e.features_per_level},
          {"input_dims", e.input_dims},
          {"domain", e.domain}};
}

HashEncodingSpec encoding_from(const json& j) {
  HashEncodingSpec e;
  e.levels = j.at("levels").get<int>();
  e.base_resolution = j.at("base_resolution").get<int>();
  e.max_resolution = j.at("max_resolution").get<int>();
  e.log2_table_size = j.at("log2_table_size").get<int>();
  e.features_per_level = j.at("features_per_level").get<int>();
  e.input_dims = j.at("input_dims").get<int>();
  e.domain = j.at("domain").get<double>();
  return e;
}

json to_json(const ModelSpec& s) {
  return {{"height_encoding", to_json(s.height_encoding)},
          {"color_encoding", to_json(s.color_encoding)},
          {"height_hidden", s.height_hidden},
          {"height_layers", s.height_layers},
          {"height_skip_layer", s.height_skip_layer},
          {"color_hidden", s.color_hidden},
          {"color_layers", s.color_layers},
          {"channels", s.channels},
          {"proposal_networks", s.proposal_networks},
          {"proposal",
           {{"encoding", to_json(s.proposal.encoding)},
            {"hidden_width", s.proposal.hidden_width},
            {"layers", s.proposal.layers}}}};
}

ModelSpec model_spec_from(const json& j) {
  ModelSpec s;
  s.height_encoding = encoding_from(j.at("height_encoding"));
  s.color_encoding = encoding_from(j.at("color_encoding"));
  s.height_hidden = j.at("height_hidden").get<int>();
  s.height_layers = j.at("height_layers").get<int>();
  s.height_skip_layer = j.at("height_skip_layer").get<int>();
  s.color_hidden = j.at("color_hidden").get<int>();
  s.color_layers = j.at("color_layers").get<int>();
  s.channels = j.at("channels").get<int>();
  s.proposal_networks = j.at("proposal_networks").get<int>();
  s.proposal.encoding = encoding_from(j.at("proposal").at("encoding"));
  s.proposal.hidden_width = j.at("proposal").at("hidden_width").get<int>();
  s.proposal.layers = j.at("proposal").at("layers").get<int>();
  s.validate();
  return s;
}

json to_json(const CameraModel& cam) {
  if (const auto* p = std::get_if<PinholeModel>(&cam)) {
    return {{"type", "pinhole"},
            {"position", to_json(p->position)},
            {"orientation", to_json(p->orientation)},
            {"field_of_view_deg", p->field_of_view_deg},
            {"width", p->width},
            {"height", p->height}};
  }
  const auto& l = std::get<LinescanModel>(cam);
  json poses = json::array();
  for (const auto& ps : l.pose_samples) {
    poses.push_back({{"time_s", ps.time_s}, {"position", to_json(ps.position)}, {"orientation", to_json(ps.orientation)}});
  }
  return {{"type", "linescan"},
          {"detector_width", l.detector_width},
          {"field_of_view_cross_track_deg", l.field_of_view_cross_track_deg},
          {"row_times", l.row_times},
          {"pose_samples", poses}};
}

CameraModel camera_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "pinhole") {
    PinholeModel p;
    p.position = vec3_from(j.at("position"));
    p.orientation = quat_from(j.at("orientation"));
    p.field_of_view_deg = j.at("field_of_view_deg").get<double>();
    p.width = j.at("width").get<int>();
    p.height = j.at("height").get<int>();
    return p;
  }
  if (type == "linescan") {
    LinescanModel l;
    l.detector_width = j.at("detector_width").get<int>();
    l.field_of_view_cross_track_deg = j.at("field_of_view_cross_track_deg").get<double>();
    l.row_times = j.at("row_times").get<std::vector<double>>();
    for (const auto& ps : j.at("pose_samples")) {
      l.pose_samples.push_back(
          {ps.at("time_s").get<double>(), vec3_from(ps.at("position")), quat_from(ps.at("orientation"))});
    }
    l.validate();
    return l;
  }
  throw ConfigError("unknown camera type '" + type + "'");
}

}  // namespace

void write_asc(const fs::path& path, const TerrainGrid& grid) {
  grid.check();
  const GridSpec& g = grid.spec;
  std::ostringstream os;
  os << "ncols " << g.n_cols << "\n"
     << "nrows " << g.n_rows << "\n"
     << "xllcorner " << shortest(g.origin.x()) << "\n"
     << "yllcorner " << shortest(g.origin.y()) << "\n"
     << "cellsize " << shortest(g.cell_size) << "\n"
     << "NODATA_value -99999.0\n";
  for (int r = g.n_rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.n_cols; ++c) {
      if (c) os << ' ';
      const std::size_t i = grid.index(c, r);
      os << (grid.valid[i] ? shortest(grid.heights[i]) : std::string("-99999.0"));
    }
    os << '\n';
  }
  auto out = open_out(path);
  out << os.str();
  finish(out, path);
}

TerrainGrid read_asc(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::istringstream is(buf.str());
  GridSpec g;
  g.n_cols = g.n_rows = -1;
  double nodata = kNoData;
  bool have_x = false, have_y = false, have_cell = false;
  // Header: key/value lines until the first numeric token.
  std::streampos data_start = is.tellg();
  std::string key;
  while (is >> key) {
    const std::string k = lower(key);
    if (!k.empty() && (std::isdigit(static_cast<unsigned char>(k[0])) || k[0] == '-' || k[0] == '+' || k[0] == '.')) break;
    std::string value;
    if (!(is >> value)) throw IoError("'" + path.string() + "': truncated header");
    if (k == "ncols") {
      g.n_cols = static_cast<int>(parse_double(value, path));
    } else if (k == "nrows") {
      g.n_rows = static_cast<int>(parse_double(value, path));
    } else if (k == "xllcorner") {
      g.origin.x() = parse_double(value, path);
      have_x = true;
    } else if (k == "yllcorner") {
      g.origin.y() = parse_double(value, path);
      have_y = true;
    } else if (k == "cellsize") {
      g.cell_size = parse_double(value, path);
      have_cell = true;
    } else if (k == "nodata_value") {
      nodata = parse_double(value, path);
    } else {
      throw IoError("'" + path.string() + "': unsupported header key '" + key + "'");
    }
    data_start = is.tellg();
  }
  if (g.n_cols < 1 || g.n_rows < 1 || !have_x || !have_y || !have_cell) {
    throw IoError("'" + path.string() + "': incomplete ESRI ASCII header");
  }
  g.validate();
  is.clear();
  is.seekg(data_start);
  TerrainGrid grid(g);
  std::string tok;
  for (int r = g.n_rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.n_cols; ++c) {
      if (!(is >> tok)) throw IoError("'" + path.string() + "': fewer values than ncols x nrows");
      const double v = parse_double(tok, path);
      if (v == nodata) {
        grid.invalidate(c, r);
      } else {
        grid.set(c, r, v);
      }
    }
  }
  if (is >> tok) throw IoError("'" + path.string() + "': more values than ncols x nrows");
  return grid;
}

void write_pnm(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw DomainError("PNM images need 1 or 3 channels");
  if (image.data.size() != image.pixels() * image.channels) throw DomainError("image buffer size mismatch");
  std::string bytes(image.data.size(), '\0');
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
  }
  auto out = open_out(path, true);
  out << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

Image read_pnm(const fs::path& path) {
  auto in = open_in(path, true);
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw IoError("'" + path.string() + "': not a binary PGM/PPM file");
  const int w = std::stoi(token()), h = std::stoi(token()), maxval = std::stoi(token());
  if (w < 1 || h < 1 || maxval != 255) throw IoError("'" + path.string() + "': only 8-bit images are supported");
  Image img(w, h, magic == "P5" ? 1 : 3);
  std::string bytes(img.data.size(), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError("'" + path.string() + "': truncated pixel data");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
  }
  return img;
}

void write_geotransform(const fs::path& path, const GridSpec& spec) {
  std::ostringstream os;
  os << "origin_x " << shortest(spec.origin.x()) << "\n"
     << "origin_y " << shortest(spec.origin.y()) << "\n"
     << "cell_size " << shortest(spec.cell_size) << "\n"
     << "n_cols " << spec.n_cols << "\n"
     << "n_rows " << spec.n_rows << "\n"
     << "row_order top_down\n";
  auto out = open_out(path);
  out << os.str();
  finish(out, path);
}

GridSpec read_geotransform(const fs::path& path) {
  auto in = open_in(path);
  GridSpec g;
  std::string k, v;
  while (in >> k >> v) {
    if (k == "origin_x") g.origin.x() = parse_double(v, path);
    else if (k == "origin_y") g.origin.y() = parse_double(v, path);
    else if (k == "cell_size") g.cell_size = parse_double(v, path);
    else if (k == "n_cols") g.n_cols = std::stoi(v);
    else if (k == "n_rows") g.n_rows = std::stoi(v);
  }
  g.validate();
  return g;
}

void write_texture(const fs::path& path, const TerrainGrid& grid) {
  grid.check();
  if (grid.channels != 1 && grid.channels != 3) throw DomainError("texture raster needs 1 or 3 channels");
  const GridSpec& g = grid.spec;
  Image img(g.n_cols, g.n_rows, grid.channels);
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      for (int ch = 0; ch < grid.channels; ++ch) {
        img.at(c, g.n_rows - 1 - r, ch) = grid.colors[grid.index(c, r) * grid.channels + ch];
      }
    }
  }
  write_pnm(path, img);
  write_geotransform(fs::path(path.string() + ".geo"), g);
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  data.validate();
  json views = json::array();
  for (const auto& v : data.views) {
    const std::string file = v.name + (data.channels == 1 ? ".pgm" : ".ppm");
    write_pnm(dir / file, v.image);
    views.push_back({{"name", v.name}, {"image", file}, {"camera", to_json(v.camera)}});
  }
  const json j = {{"format", kManifestFormat},
                  {"units", "meters"},
                  {"channels", data.channels},
                  {"gsd_m", data.gsd_m},
                  {"seed", data.seed},
                  {"reference_dtm", data.reference_dtm},
                  {"frame", to_json(data.frame)},
                  {"views", views}};
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& path) {
  const fs::path manifest = fs::is_directory(path) ? path / "manifest.json" : path;
  if (!fs::exists(manifest)) throw IoError("dataset manifest '" + manifest.string() + "' does not exist");
  const fs::path dir = manifest.parent_path();
  json j;
  try {
    j = json::parse(read_text(manifest));
  } catch (const json::exception& e) {
    throw IoError("'" + manifest.string() + "': " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kManifestFormat) {
      throw ConfigError("'" + manifest.string() + "': unsupported manifest format");
    }
    Dataset d;
    d.channels = j.at("channels").get<int>();
    d.gsd_m = j.value("gsd_m", 0.0);
    d.seed = j.value("seed", std::uint64_t{0});
    d.reference_dtm = j.value("reference_dtm", std::string());
    d.frame = frame_from(j.at("frame"));
    for (const auto& v : j.at("views")) {
      View view;
      view.name = v.at("name").get<std::string>();
      view.camera = camera_from(v.at("camera"));
      view.image = read_pnm(dir / v.at("image").get<std::string>());
      d.views.push_back(std::move(view));
    }
    d.validate();
    return d;
  } catch (const json::exception& e) {
    throw ConfigError("'" + manifest.string() + "': " + e.what());
  }
}

template <typename T>
void write_checkpoint(const fs::path& path, const NtmModel<T>& model, const CheckpointInfo& info) {
  const auto blocks = model.parameter_blocks();
  json jb = json::array();
  for (const auto& b : blocks) jb.push_back({{"name", b.name}, {"size", b.size}});
  const json header = {{"format", kCheckpointFormat},
                       {"scalar", sizeof(T) == 4 ? "float32" : "float64"},
                       {"model", to_json(model.spec())},
                       {"frame", to_json(model.frame())},
                       {"height_offset", static_cast<double>(model.height.offset)},
                       {"iteration", info.iteration},
                       {"seed", info.seed},
                       {"blocks", jb}};
  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  auto out = open_out(path, true);
  out.write(kCheckpointMagic, 8);
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(len));
  for (const auto& b : blocks) {
    out.write(reinterpret_cast<const char*>(b.data), static_cast<std::streamsize>(b.size * sizeof(T)));
  }
  finish(out, path);
}

namespace {

json read_checkpoint_header(std::ifstream& in, const fs::path& path) {
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (std::uint64_t{1} << 30)) throw IoError("'" + path.string() + "': corrupt checkpoint header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("'" + path.string() + "': truncated checkpoint header");
  try {
    json h = json::parse(text);
    if (h.at("format").get<std::string>() != kCheckpointFormat) {
      throw IoError("'" + path.string() + "': unknown checkpoint format");
    }
    return h;
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace

std::string checkpoint_scalar(const fs::path& path) {
  auto in = open_in(path, true);
  try {
    return read_checkpoint_header(in, path).at("scalar").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

template <typename T>
NtmModel<T> read_checkpoint(const fs::path& path, CheckpointInfo* info) {
  auto in = open_in(path, true);
  const json h = read_checkpoint_header(in, path);
  try {
    const std::string scalar = h.at("scalar").get<std::string>();
    if (scalar != (sizeof(T) == 4 ? "float32" : "float64")) {
      throw IoError("'" + path.string() + "': checkpoint holds " + scalar + " parameters");
    }
    NtmModel<T> model(model_spec_from(h.at("model")), frame_from(h.at("frame")));
    model.height.offset = static_cast<T>(h.at("height_offset").get<double>());
    auto blocks = model.parameter_blocks();
    const auto& jb = h.at("blocks");
    if (jb.size() != blocks.size()) throw IoError("'" + path.string() + "': parameter layout mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (jb[i].at("name").get<std::string>() != blocks[i].name || jb[i].at("size").get<Eigen::Index>() != blocks[i].size) {
        throw IoError("'" + path.string() + "': parameter layout mismatch at " + blocks[i].name);
      }
      in.read(reinterpret_cast<char*>(blocks[i].data), static_cast<std::streamsize>(blocks[i].size * sizeof(T)));
      if (!in) throw IoError("'" + path.string() + "': truncated parameter data");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("'" + path.string() + "': trailing bytes");
    if (info) {
      info->iteration = h.at("iteration").get<int>();
      info->seed = h.at("seed").get<std::uint64_t>();
    }
    return model;
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

template void write_checkpoint<float>(const fs::path&, const NtmModel<float>&, const CheckpointInfo&);
template void write_checkpoint<double>(const fs::path&, const NtmModel<double>&, const CheckpointInfo&);
template NtmModel<float> read_checkpoint<float>(const fs::path&, CheckpointInfo*);
template NtmModel<double> read_checkpoint<double>(const fs::path&, CheckpointInfo*);

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_metadata(const fs::path& path, const std::string& command, std::uint64_t seed, std::uint64_t config_hash) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
  const json j = {{"tool", "ntm"}, {"version", kToolVersion}, {"command", command}, {"seed", seed}, {"config_hash", hex}};
  write_text(path, j.dump(2) + "\n");
}

void write_histogram_csv(const fs::path& path, const Histogram& h) {
  std::ostringstream os;
  os << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << shortest(h.edges[i]) << ',' << shortest(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
  }
  write_text(path, os.str());
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path, true);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace ntm
