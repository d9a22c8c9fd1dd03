// Copyright 2026 The fgfi Authors
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

#ifndef FGFI_RUN_CONFIG_HPP
#define FGFI_RUN_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "fgfi/datagen.hpp"
#include "fgfi/episodic.hpp"
#include "fgfi/error.hpp"
#include "fgfi/model.hpp"

// One run configuration for the command-line tool: model + training +
// synthesis settings and paths, loadable from a `key = value` file with
// bracketed section headers. Precedence is flags > file > defaults;
// unknown sections or keys are rejected up front.

namespace fgfi {

struct RunConfig {
  ModelConfig model;
  TrainSpec train;
  SynthSpec synth;
  std::uint64_t seed = 1;  // drives every seeded command unless overridden
  std::string manifest;
  std::string checkpoint;
  std::string out_dir = "out";

  void validate() const {
    model.validate();
    train.validate();
    synth.validate();
  }
};

namespace detail {

inline std::int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const std::int64_t out = std::stoll(v, &used);
    require(used == v.size(), "config: trailing characters in value for " + key);
    return out;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("config: bad integer '" + v + "' for " + key);
  }
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    require(used == v.size(), "config: trailing characters in value for " + key);
    return out;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("config: bad number '" + v + "' for " + key);
  }
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Applies one `section.key = value` assignment; throws ValidationError
/// for unknown keys or malformed values.
inline void apply_config_key(RunConfig& rc, const std::string& section, const std::string& key,
                             const std::string& value) {
  using detail::parse_int;
  using detail::parse_real;
  const std::string full = section + "." + key;
  const std::map<std::string, std::function<void()>> setters{
      {"model.n_mels", [&] { rc.model.n_mels = parse_int(value, full); }},
      {"model.num_groups", [&] { rc.model.num_groups = parse_int(value, full); }},
      {"model.blstm_hidden", [&] { rc.model.blstm_hidden = parse_int(value, full); }},
      {"model.stem_channels", [&] { rc.model.stem_channels = parse_int(value, full); }},
      {"model.stem_kernel", [&] { rc.model.stem_kernel = parse_int(value, full); }},
      {"model.drc_kernel", [&] { rc.model.drc_kernel = parse_int(value, full); }},
      {"model.repr_maps", [&] { rc.model.repr_maps = parse_int(value, full); }},
      {"model.output_maps", [&] { rc.model.output_maps = parse_int(value, full); }},
      {"model.distance", [&] { rc.model.distance = parse_distance(value); }},
      {"train.episodes", [&] { rc.train.episodes_total = parse_int(value, full); }},
      {"train.n_way", [&] { rc.train.n_way = parse_int(value, full); }},
      {"train.k_shot", [&] { rc.train.k_shot = parse_int(value, full); }},
      {"train.query_shot", [&] { rc.train.query_shot = parse_int(value, full); }},
      {"train.learning_rate", [&] { rc.train.learning_rate = parse_real(value, full); }},
      {"train.seed",
       [&] { rc.seed = static_cast<std::uint64_t>(parse_int(value, full)); }},
      {"synth.speakers", [&] { rc.synth.num_speakers = parse_int(value, full); }},
      {"synth.samples_per_speaker",
       [&] { rc.synth.samples_per_speaker = parse_int(value, full); }},
      {"synth.n_mels", [&] { rc.synth.n_mels = parse_int(value, full); }},
      {"synth.frames", [&] { rc.synth.frames_per_sample = parse_int(value, full); }},
      {"synth.templates", [&] { rc.synth.templates_per_speaker = parse_int(value, full); }},
      {"synth.noise_sigma", [&] { rc.synth.noise_sigma = parse_real(value, full); }},
      {"paths.manifest", [&] { rc.manifest = value; }},
      {"paths.checkpoint", [&] { rc.checkpoint = value; }},
      {"paths.out", [&] { rc.out_dir = value; }},
  };
  const auto it = setters.find(full);
  require(it != setters.end(), "config: unknown key '" + full + "'");
  it->second();
}

/// `key = value` lines under [model] / [train] / [synth] / [paths]
/// headers; '#' starts a comment.
inline void load_config_file(const std::string& path, RunConfig& rc) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config: malformed section header at line " +
                                      std::to_string(line_no) + " of " + path);
      section = line.substr(1, line.size() - 2);
      require(section == "model" || section == "train" || section == "synth" ||
                  section == "paths",
              "config: unknown section '" + section + "' in " + path);
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config: expected 'key = value' at line " + std::to_string(line_no) + " of " + path);
    require(!section.empty(), "config: key before any [section] in " + path);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    require(!key.empty() && !value.empty(),
            "config: empty key or value at line " + std::to_string(line_no) + " of " + path);
    apply_config_key(rc, section, key, value);
  }
}

}  // namespace fgfi

#endif  // FGFI_RUN_CONFIG_HPP
