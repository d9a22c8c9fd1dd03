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

#ifndef FGFI_METRICS_HPP
#define FGFI_METRICS_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fgfi/error.hpp"

namespace fgfi {

namespace detail {

inline std::string double_repr(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> eer;
  std::int64_t episodes = 0;
  std::int64_t n_way = 0;
  std::int64_t k_shot = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> loss_trace_path;
};

/// One flat JSON document with a fixed key order; doubles are printed at
/// full precision so identical runs serialise identically.
inline std::string metrics_to_json(const Metrics& m) {
  std::string out = "{\"accuracy\": " + detail::double_repr(m.accuracy);
  out += ", \"eer\": " + (m.eer ? detail::double_repr(*m.eer) : std::string("null"));
  out += ", \"episodes\": " + std::to_string(m.episodes);
  out += ", \"n_way\": " + std::to_string(m.n_way);
  out += ", \"k_shot\": " + std::to_string(m.k_shot);
  out += ", \"seed\": " + std::to_string(m.seed);
  out += ", \"loss_trace_path\": " +
         (m.loss_trace_path ? "\"" + detail::json_escape(*m.loss_trace_path) + "\""
                            : std::string("null"));
  out += "}\n";
  return out;
}

inline void write_metrics_json(const std::string& path, const Metrics& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("metrics: cannot write " + path);
  out << metrics_to_json(m);
  if (!out) throw DataError("metrics: write failed for " + path);
}

inline void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("loss trace: cannot write " + path);
  out << "episode,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << "," << detail::double_repr(trace[i]) << "\n";
  if (!out) throw DataError("loss trace: write failed for " + path);
}

}  // namespace fgfi

#endif  // FGFI_METRICS_HPP
