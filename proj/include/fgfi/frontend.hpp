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

#ifndef FGFI_FRONTEND_HPP
#define FGFI_FRONTEND_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "fgfi/error.hpp"

// Log Mel-spectrum extraction: 25 ms Hamming frames every 10 ms, power
// spectrum over a zero-padded 512-point FFT, an 80-band triangular mel
// filterbank on the HTK scale (mel = 2595*log10(1 + f/700)) spanning
// 0-8000 Hz, then a natural log floored at 1e-10 before the log.

namespace fgfi {

struct Waveform {
  int sample_rate = 16000;
  std::vector<double> samples;  // in [-1, 1]
};

/// H×T log-mel matrix for one sample, row-major with one row per mel bin.
struct LogMelFeature {
  std::int64_t n_mels = 0;
  std::int64_t n_frames = 0;
  std::vector<double> values;  // [n_mels][n_frames]
  std::string speaker_label;

  double at(std::int64_t mel, std::int64_t frame) const {
    return values[static_cast<std::size_t>(mel * n_frames + frame)];
  }
};

namespace detail {

// Iterative radix-2 FFT, in place. n must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

/// |X_k|^2 for k = 0..n_fft/2 of a zero-padded real frame.
inline std::vector<double> power_spectrum(const std::vector<double>& frame, std::size_t n_fft) {
  require((n_fft & (n_fft - 1)) == 0 && n_fft >= 2, "power_spectrum: n_fft must be a power of two");
  require(frame.size() <= n_fft, "power_spectrum: frame longer than n_fft");
  std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  detail::fft_inplace(buf);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) p[k] = std::norm(buf[k]);
  return p;
}

/// Triangular mel filterbank with band edges snapped to FFT bins. Edges
/// are forced strictly increasing so no band is empty and every triangle
/// peaks at exactly 1 at its centre bin; without the forcing, 80 bands
/// over 257 bins collapse below ~500 Hz.
class MelFilterbank {
 public:
  static double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
  static double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

  MelFilterbank(int n_mels, std::size_t n_fft, int sample_rate, double f_lo, double f_hi)
      : n_mels_(n_mels), n_fft_(n_fft), sample_rate_(sample_rate) {
    const std::int64_t n_bins = static_cast<std::int64_t>(n_fft / 2 + 1);
    require(n_mels >= 1, "filterbank needs at least one band");
    require(n_mels + 2 <= n_bins, "too many mel bands for this FFT size");
    const double mel_lo = hz_to_mel(f_lo);
    const double mel_hi = hz_to_mel(f_hi);
    std::vector<std::int64_t> edges(static_cast<std::size_t>(n_mels) + 2);
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(j) /
                                      static_cast<double>(n_mels + 1);
      const double hz = mel_to_hz(mel);
      edges[j] = static_cast<std::int64_t>(
          std::floor(static_cast<double>(n_fft + 1) * hz / sample_rate));
      if (j > 0 && edges[j] <= edges[j - 1]) edges[j] = edges[j - 1] + 1;
      require(edges[j] < n_bins, "mel band edges exceed the spectrum");
    }
    edges_ = edges;
    rows_.assign(static_cast<std::size_t>(n_mels) * static_cast<std::size_t>(n_bins), 0.0);
    for (int k = 0; k < n_mels; ++k) {
      const std::int64_t lo = edges[static_cast<std::size_t>(k)];
      const std::int64_t mid = edges[static_cast<std::size_t>(k) + 1];
      const std::int64_t hi = edges[static_cast<std::size_t>(k) + 2];
      double* row = rows_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(n_bins);
      for (std::int64_t i = lo; i <= mid; ++i)
        row[i] = static_cast<double>(i - lo) / static_cast<double>(mid - lo);
      for (std::int64_t i = mid + 1; i <= hi; ++i)
        row[i] = static_cast<double>(hi - i) / static_cast<double>(hi - mid);
    }
  }

  int n_mels() const { return n_mels_; }
  std::int64_t n_bins() const { return static_cast<std::int64_t>(n_fft_ / 2 + 1); }
  const double* row(int k) const {
    return rows_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(n_bins());
  }
  std::int64_t center_bin(int k) const { return edges_[static_cast<std::size_t>(k) + 1]; }
  double center_hz(int k) const {
    return static_cast<double>(center_bin(k)) * sample_rate_ / static_cast<double>(n_fft_);
  }

  std::vector<double> apply(const std::vector<double>& power) const {
    std::vector<double> out(static_cast<std::size_t>(n_mels_), 0.0);
    for (int k = 0; k < n_mels_; ++k) {
      const double* r = row(k);
      double acc = 0.0;
      for (std::int64_t i = 0; i < n_bins(); ++i) acc += r[i] * power[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(k)] = acc;
    }
    return out;
  }

 private:
  int n_mels_;
  std::size_t n_fft_;
  int sample_rate_;
  std::vector<std::int64_t> edges_;
  std::vector<double> rows_;
};

inline constexpr double kLogMelFloor = 1e-10;
inline constexpr std::size_t kLogMelFft = 512;

/// Frame count for a waveform of `samples` at the given frame/hop length.
inline std::int64_t log_mel_frame_count(std::int64_t samples, std::int64_t frame_len,
                                        std::int64_t hop) {
  return (samples - frame_len) / hop + 1;
}

inline LogMelFeature log_mel(const Waveform& w, int frame_ms = 25, int hop_ms = 10,
                             int n_mels = 80) {
  require(w.sample_rate == 16000,
          "log_mel: expected a 16 kHz waveform, got " + std::to_string(w.sample_rate) + " Hz");
  require(!w.samples.empty(), "log_mel: empty waveform");
  const std::int64_t frame_len = static_cast<std::int64_t>(w.sample_rate) * frame_ms / 1000;
  const std::int64_t hop = static_cast<std::int64_t>(w.sample_rate) * hop_ms / 1000;
  require(static_cast<std::int64_t>(w.samples.size()) >= frame_len,
          "log_mel: waveform shorter than one frame (" + std::to_string(frame_len) + " samples)");

  const std::int64_t frames =
      log_mel_frame_count(static_cast<std::int64_t>(w.samples.size()), frame_len, hop);

  std::vector<double> window(static_cast<std::size_t>(frame_len));
  for (std::int64_t n = 0; n < frame_len; ++n) {
    window[static_cast<std::size_t>(n)] =
        0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                               static_cast<double>(frame_len - 1));
  }

  const MelFilterbank fb(n_mels, kLogMelFft, 16000, 0.0, 8000.0);

  LogMelFeature f;
  f.n_mels = n_mels;
  f.n_frames = frames;
  f.values.assign(static_cast<std::size_t>(n_mels) * static_cast<std::size_t>(frames), 0.0);

  std::vector<double> frame(static_cast<std::size_t>(frame_len));
  for (std::int64_t t = 0; t < frames; ++t) {
    const double* src = w.samples.data() + t * hop;
    for (std::int64_t n = 0; n < frame_len; ++n)
      frame[static_cast<std::size_t>(n)] = src[n] * window[static_cast<std::size_t>(n)];
    const std::vector<double> power = power_spectrum(frame, kLogMelFft);
    const std::vector<double> mel = fb.apply(power);
    for (int m = 0; m < n_mels; ++m) {
      f.values[static_cast<std::size_t>(m) * static_cast<std::size_t>(frames) +
               static_cast<std::size_t>(t)] =
          std::log(std::max(mel[static_cast<std::size_t>(m)], kLogMelFloor));
    }
  }
  return f;
}

}  // namespace fgfi

#endif  // FGFI_FRONTEND_HPP
