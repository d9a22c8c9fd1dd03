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

#ifndef FGFI_WAV_HPP
#define FGFI_WAV_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/frontend.hpp"

// Minimal RIFF/WAVE support: 16-bit PCM, mono. Compressed formats and
// multi-channel audio are out of scope.

namespace fgfi {

namespace detail {

inline std::uint32_t read_u32le(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("wav: truncated " + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16le(std::istream& in, const std::string& what) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw DataError("wav: truncated " + what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace detail

inline Waveform read_wav_pcm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw DataError("wav: bad magic in " + path);
  detail::read_u32le(in, "riff size");
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw DataError("wav: not a WAVE file: " + path);

  Waveform w;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const std::uint32_t chunk_size = detail::read_u32le(in, "chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw DataError("wav: fmt chunk too small in " + path);
      const std::uint16_t format = detail::read_u16le(in, "format");
      const std::uint16_t channels = detail::read_u16le(in, "channels");
      const std::uint32_t rate = detail::read_u32le(in, "sample rate");
      detail::read_u32le(in, "byte rate");
      detail::read_u16le(in, "block align");
      const std::uint16_t bits = detail::read_u16le(in, "bits per sample");
      if (format != 1) throw DataError("wav: only PCM is supported: " + path);
      if (channels != 1) throw DataError("wav: only mono is supported: " + path);
      if (bits != 16) throw DataError("wav: only 16-bit samples are supported: " + path);
      w.sample_rate = static_cast<int>(rate);
      in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data chunk before fmt in " + path);
      const std::size_t count = chunk_size / 2;
      std::vector<std::int16_t> raw(count);
      in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(chunk_size));
      if (!in) throw DataError("wav: truncated data chunk in " + path);
      w.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        w.samples[i] = static_cast<double>(raw[i]) / 32768.0;
      return w;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);  // chunks are word-aligned
      if (!in) throw DataError("wav: truncated chunk in " + path);
    }
  }
  throw DataError("wav: no data chunk in " + path);
}

inline void write_wav_pcm16(const std::string& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("wav: cannot write " + path);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  auto put_u32 = [&out](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_u16 = [&out](std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  };
  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(w.sample_rate));
  put_u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_bytes);
  for (double s : w.samples) {
    double clipped = s;
    if (clipped > 1.0) clipped = 1.0;
    if (clipped < -1.0) clipped = -1.0;
    const std::int16_t v = static_cast<std::int16_t>(std::lrint(clipped * 32767.0));
    put_u16(static_cast<std::uint16_t>(v));
  }
  if (!out) throw DataError("wav: write failed for " + path);
}

}  // namespace fgfi

#endif  // FGFI_WAV_HPP
