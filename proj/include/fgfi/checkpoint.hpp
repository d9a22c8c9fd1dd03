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

#ifndef FGFI_CHECKPOINT_HPP
#define FGFI_CHECKPOINT_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/model.hpp"

// Checkpoint layout: a text header followed by a raw little-endian
// 64-bit-float blob. The header carries the format version, the full
// model configuration as key = value lines, and a block table of
// `name shape byte_offset` rows; "[data]" ends the header and the blob
// follows immediately. Round trips are bit-exact.

namespace fgfi {

inline constexpr const char* kCheckpointMagic = "fgfi-checkpoint 1";

inline void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  const ModelConfig& c = params.config;
  out << kCheckpointMagic << "\n";
  out << "[config]\n";
  out << "n_mels = " << c.n_mels << "\n";
  out << "num_groups = " << c.num_groups << "\n";
  out << "blstm_hidden = " << c.blstm_hidden << "\n";
  out << "stem_channels = " << c.stem_channels << "\n";
  out << "stem_kernel = " << c.stem_kernel << "\n";
  out << "drc_kernel = " << c.drc_kernel << "\n";
  out << "repr_maps = " << c.repr_maps << "\n";
  out << "output_maps = " << c.output_maps << "\n";
  out << "distance = " << distance_name(c.distance) << "\n";
  out << "[blocks]\n";
  std::int64_t offset = 0;
  const auto named = params.named_parameters();
  for (const auto& [name, v] : named) {
    out << name << " ";
    const Shape& s = v.shape();
    for (std::size_t d = 0; d < s.size(); ++d) out << (d ? "x" : "") << s[d];
    out << " " << offset << "\n";
    offset += v.size() * static_cast<std::int64_t>(sizeof(double));
  }
  out << "[data]\n";
  for (const auto& [name, v] : named) {
    out.write(reinterpret_cast<const char*>(v.tensor().data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

namespace detail {

inline std::int64_t checkpoint_int(const std::map<std::string, std::string>& kv,
                                   const std::string& key, const std::string& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("checkpoint: missing config key '" + key + "' in " + path);
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad value for '" + key + "' in " + path);
  }
}

}  // namespace detail

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw DataError("checkpoint: bad magic in " + path);
  if (!std::getline(in, line) || line != "[config]")
    throw DataError("checkpoint: missing [config] section in " + path);

  std::map<std::string, std::string> kv;
  while (std::getline(in, line) && line != "[blocks]") {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw DataError("checkpoint: malformed config line '" + line + "' in " + path);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  if (line != "[blocks]") throw DataError("checkpoint: missing [blocks] section in " + path);

  ModelConfig c;
  c.n_mels = detail::checkpoint_int(kv, "n_mels", path);
  c.num_groups = detail::checkpoint_int(kv, "num_groups", path);
  c.blstm_hidden = detail::checkpoint_int(kv, "blstm_hidden", path);
  c.stem_channels = detail::checkpoint_int(kv, "stem_channels", path);
  c.stem_kernel = detail::checkpoint_int(kv, "stem_kernel", path);
  c.drc_kernel = detail::checkpoint_int(kv, "drc_kernel", path);
  c.repr_maps = detail::checkpoint_int(kv, "repr_maps", path);
  c.output_maps = detail::checkpoint_int(kv, "output_maps", path);
  {
    auto it = kv.find("distance");
    if (it == kv.end()) throw DataError("checkpoint: missing config key 'distance' in " + path);
    try {
      c.distance = parse_distance(it->second);
    } catch (const ValidationError& e) {
      throw DataError(std::string("checkpoint: ") + e.what());
    }
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw DataError("checkpoint: invalid config in " + path + ": " + e.what());
  }

  struct BlockRow {
    std::string name;
    Shape shape;
    std::int64_t offset;
  };
  std::vector<BlockRow> rows;
  while (std::getline(in, line) && line != "[data]") {
    std::istringstream ls(line);
    BlockRow row;
    std::string shape_text;
    if (!(ls >> row.name >> shape_text >> row.offset))
      throw DataError("checkpoint: malformed block row '" + line + "' in " + path);
    std::int64_t v = 0;
    bool have = false;
    for (char ch : shape_text + "x") {
      if (ch == 'x') {
        if (!have) throw DataError("checkpoint: malformed shape in " + path);
        row.shape.push_back(v);
        v = 0;
        have = false;
      } else if (ch >= '0' && ch <= '9') {
        v = v * 10 + (ch - '0');
        have = true;
      } else {
        throw DataError("checkpoint: malformed shape in " + path);
      }
    }
    rows.push_back(std::move(row));
  }
  if (line != "[data]") throw DataError("checkpoint: missing [data] section in " + path);

  ModelParams params(c);
  auto named = params.named_parameters();
  if (named.size() != rows.size())
    throw DataError("checkpoint: block count mismatch in " + path);
  const std::streampos blob_start = in.tellg();
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, var] = named[i];
    const BlockRow& row = rows[i];
    if (row.name != name)
      throw DataError("checkpoint: unexpected block '" + row.name + "', wanted '" + name +
                      "' in " + path);
    if (row.shape != var.shape())
      throw DataError("checkpoint: shape mismatch for block '" + name + "' in " + path);
    in.seekg(blob_start + static_cast<std::streamoff>(row.offset));
    in.read(reinterpret_cast<char*>(var.tensor().data()),
            static_cast<std::streamsize>(var.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(var.size() * sizeof(double)))
      throw DataError("checkpoint: truncated block '" + name + "' in " + path);
    var.tensor().check_finite("checkpoint block " + name);
  }
  return params;
}

}  // namespace fgfi

#endif  // FGFI_CHECKPOINT_HPP
