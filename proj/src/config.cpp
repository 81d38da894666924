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


#include "ntm/config.hpp"

#include "ntm/io.hpp"

#include "json.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace ntm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename V>
V parse_number(std::string_view s, const std::string& key) {
  V v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("invalid value '" + std::string(s) + "' for " + key);
  }
  return v;
}

bool parse_bool(std::string_view s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(s) + "' for " + key);
}

std::vector<int> parse_int_list(std::string_view s, const std::string& key) {
  std::vector<int> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_number<int>(trim(s.substr(0, comma)), key));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, const std::string&, const fs::path&)>;

#define NTM_INT(expr) [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) { expr = parse_number<int>(v, k); }
#define NTM_DBL(expr) [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) { expr = parse_number<double>(v, k); }

void add_encoding(std::map<std::string, Setter>& t, const std::string& section,
                  std::function<std::vector<HashEncodingSpec*>(RunConfig&)> targets) {
  auto set_int = [targets](int HashEncodingSpec::*member) {
    return [targets, member](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      const int x = parse_number<int>(v, k);
      for (auto* e : targets(c)) e->*member = x;
    };
  };
  t[section + ".levels"] = set_int(&HashEncodingSpec::levels);
  t[section + ".base_resolution"] = set_int(&HashEncodingSpec::base_resolution);
  t[section + ".max_resolution"] = set_int(&HashEncodingSpec::max_resolution);
  t[section + ".log2_table_size"] = set_int(&HashEncodingSpec::log2_table_size);
  t[section + ".features_per_level"] = set_int(&HashEncodingSpec::features_per_level);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.seed"] = [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      c.train.seed = parse_number<std::uint64_t>(v, k);
    };
    t["run.threads"] = NTM_INT(c.train.threads);
    t["run.precision"] = [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      if (v == "float32") c.precision = Precision::Float32;
      else if (v == "float64") c.precision = Precision::Float64;
      else throw ConfigError("invalid value '" + std::string(v) + "' for " + k + " (float32 or float64)");
    };
    t["data.dataset"] = [](RunConfig& c, std::string_view v, const std::string&, const fs::path& base) {
      c.dataset = base / fs::path(std::string(v));
    };
    t["output.dir"] = [](RunConfig& c, std::string_view v, const std::string&, const fs::path& base) {
      c.output_dir = base / fs::path(std::string(v));
    };
    t["train.iterations"] = NTM_INT(c.train.iterations);
    t["train.batch_size"] = NTM_INT(c.train.batch_size);
    t["train.lr_fields"] = NTM_DBL(c.train.lr_fields);
    t["train.lr_proposal"] = NTM_DBL(c.train.lr_proposal);
    t["train.beta1"] = NTM_DBL(c.train.beta1);
    t["train.beta2"] = NTM_DBL(c.train.beta2);
    t["train.epsilon"] = NTM_DBL(c.train.epsilon);
    t["train.interlevel_weight"] = NTM_DBL(c.train.interlevel_weight);
    t["train.eval_every"] = NTM_INT(c.train.eval_every);
    t["train.checkpoint_every"] = NTM_INT(c.train.checkpoint_every);
    t["train.chunk_rays"] = NTM_INT(c.train.chunk_rays);
    t["sampler.kind"] = [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      if (v == "proposal") c.sampler.kind = SamplerConfig::Kind::Proposal;
      else if (v == "uniform") c.sampler.kind = SamplerConfig::Kind::Uniform;
      else throw ConfigError("invalid value '" + std::string(v) + "' for " + k + " (proposal or uniform)");
    };
    t["sampler.uniform_samples"] = NTM_INT(c.sampler.uniform_samples);
    t["sampler.proposal_samples"] = [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      c.sampler.proposal_samples = parse_int_list(v, k);
    };
    t["sampler.final_samples"] = NTM_INT(c.sampler.final_samples);
    t["sampler.pdf_padding"] = NTM_DBL(c.sampler.pdf_padding);
    t["model.height_hidden"] = NTM_INT(c.model.height_hidden);
    t["model.height_layers"] = NTM_INT(c.model.height_layers);
    t["model.height_skip_layer"] = NTM_INT(c.model.height_skip_layer);
    t["model.color_hidden"] = NTM_INT(c.model.color_hidden);
    t["model.color_layers"] = NTM_INT(c.model.color_layers);
    t["model.proposal_networks"] = NTM_INT(c.model.proposal_networks);
    t["model.proposal_hidden"] = NTM_INT(c.model.proposal.hidden_width);
    t["model.proposal_layers"] = NTM_INT(c.model.proposal.layers);
    add_encoding(t, "encoding", [](RunConfig& c) {
      return std::vector<HashEncodingSpec*>{&c.model.height_encoding, &c.model.color_encoding};
    });
    add_encoding(t, "proposal_encoding", [](RunConfig& c) {
      return std::vector<HashEncodingSpec*>{&c.model.proposal.encoding};
    });
    t["grid.cell_size"] = NTM_DBL(c.grid_cell_m);
    t["grid.footprint_mask"] = [](RunConfig& c, std::string_view v, const std::string& k, const fs::path&) {
      c.footprint_mask = parse_bool(v, k);
    };
    return t;
  }();
  return table;
}

#undef NTM_INT
#undef NTM_DBL

json encoding_json(const HashEncodingSpec& e) {
  return {{"levels", e.levels},
          {"base_resolution", e.base_resolution},
          {"max_resolution", e.max_resolution},
          {"log2_table_size", e.log2_table_size},
          {"features_per_level", e.features_per_level}};
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  sampler.validate();
  ModelSpec m = model;
  m.validate();
  if (sampler.kind == SamplerConfig::Kind::Proposal && model.proposal_networks < sampler.stages()) {
    throw ConfigError("sampler has more proposal stages than the model has proposal networks");
  }
  if (!(grid_cell_m >= 0.0)) throw ConfigError("grid cell size must be non-negative");
  if (dataset.empty()) throw ConfigError("no dataset path configured ([data] dataset)");
  if (!fs::exists(dataset)) throw ConfigError("dataset path '" + dataset.string() + "' does not exist");
  if (output_dir.empty()) throw ConfigError("no output directory configured ([output] dir)");
}

std::string RunConfig::canonical() const {
  const json j = {
      {"run", {{"seed", train.seed}, {"threads", train.threads}, {"precision", precision == Precision::Float32 ? "float32" : "float64"}}},
      {"data", {{"dataset", dataset.generic_string()}}},
      {"output", {{"dir", output_dir.generic_string()}}},
      {"train",
       {{"iterations", train.iterations},
        {"batch_size", train.batch_size},
        {"lr_fields", train.lr_fields},
        {"lr_proposal", train.lr_proposal},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"epsilon", train.epsilon},
        {"interlevel_weight", train.interlevel_weight},
        {"eval_every", train.eval_every},
        {"checkpoint_every", train.checkpoint_every},
        {"chunk_rays", train.chunk_rays}}},
      {"sampler",
       {{"kind", sampler.kind == SamplerConfig::Kind::Proposal ? "proposal" : "uniform"},
        {"uniform_samples", sampler.uniform_samples},
        {"proposal_samples", sampler.proposal_samples},
        {"final_samples", sampler.final_samples},
        {"pdf_padding", sampler.pdf_padding}}},
      {"model",
       {{"height_hidden", model.height_hidden},
        {"height_layers", model.height_layers},
        {"height_skip_layer", model.height_skip_layer},
        {"color_hidden", model.color_hidden},
        {"color_layers", model.color_layers},
        {"proposal_networks", model.proposal_networks},
        {"proposal_hidden", model.proposal.hidden_width},
        {"proposal_layers", model.proposal.layers}}},
      {"encoding", encoding_json(model.height_encoding)},
      {"proposal_encoding", encoding_json(model.proposal.encoding)},
      {"grid", {{"cell_size", grid_cell_m}, {"footprint_mask", footprint_mask}}}};
  return j.dump();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    it->second(c, value, key, base_dir);
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  return parse_run_config(read_text(path), path.parent_path());
}

}  // namespace ntm
