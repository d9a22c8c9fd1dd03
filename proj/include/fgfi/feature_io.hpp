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

#ifndef FGFI_FEATURE_IO_HPP
#define FGFI_FEATURE_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/frontend.hpp"

// Feature file layout (little-endian):
//   magic "FGFI" | format version u32 (=1) | H u32 | T u32 |
//   H*T float32, row-major, one row per mel bin.
// Dataset manifest: text, one `speaker_id<TAB>feature_path` per line.

namespace fgfi {

static_assert(std::endian::native == std::endian::little,
              "feature files are little-endian; big-endian hosts are unsupported");

inline constexpr char kFeatureMagic[4] = {'F', 'G', 'F', 'I'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::uint32_t kFeatureMaxDim = 1u << 24;

inline void write_features(const std::string& path, const LogMelFeature& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("features: cannot write " + path);
  out.write(kFeatureMagic, 4);
  auto put_u32 = [&out](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  put_u32(kFeatureVersion);
  require(f.n_mels >= 1 && f.n_frames >= 1, "features: empty matrix");
  require(f.n_mels <= kFeatureMaxDim && f.n_frames <= kFeatureMaxDim,
          "features: dimension overflow");
  put_u32(static_cast<std::uint32_t>(f.n_mels));
  put_u32(static_cast<std::uint32_t>(f.n_frames));
  std::vector<float> buf(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) buf[i] = static_cast<float>(f.values[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw DataError("features: write failed for " + path);
}

inline LogMelFeature read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("features: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw DataError("features: bad magic in " + path);
  auto get_u32 = [&in, &path](const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw DataError("features: truncated " + std::string(what) + " in " + path);
    return v;
  };
  const std::uint32_t version = get_u32("version");
  if (version != kFeatureVersion)
    throw DataError("features: unsupported version " + std::to_string(version) + " in " + path);
  const std::uint32_t h = get_u32("mel dimension");
  const std::uint32_t t = get_u32("frame count");
  if (h == 0 || t == 0 || h > kFeatureMaxDim || t > kFeatureMaxDim)
    throw DataError("features: dimension overflow in " + path);

  LogMelFeature f;
  f.n_mels = h;
  f.n_frames = t;
  std::vector<float> buf(static_cast<std::size_t>(h) * t);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw DataError("features: truncated payload in " + path +
                    " (header promises " + std::to_string(h) + "x" + std::to_string(t) + ")");
  f.values.assign(buf.begin(), buf.end());
  return f;
}

struct ManifestEntry {
  std::string speaker_id;
  std::string path;
};

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("manifest: cannot write " + path);
  for (const auto& e : entries) out << e.speaker_id << '\t' << e.path << '\n';
  if (!out) throw DataError("manifest: write failed for " + path);
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw DataError("manifest: malformed line " + std::to_string(line_no) + " in " + path);
    entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return entries;
}

/// Feature paths inside a manifest resolve relative to the manifest's
/// own directory unless absolute.
inline std::string resolve_manifest_path(const std::string& manifest_path,
                                         const std::string& entry_path) {
  const std::filesystem::path p(entry_path);
  if (p.is_absolute()) return entry_path;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

}  // namespace fgfi

#endif  // FGFI_FEATURE_IO_HPP
