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

#ifndef FGFI_DATAGEN_HPP
#define FGFI_DATAGEN_HPP

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/frontend.hpp"
#include "fgfi/rng.hpp"

// Deterministic synthetic speaker corpus. Each speaker owns a few smooth
// spectral templates (sums of three Gaussian bumps over the mel axis);
// a sample is a piecewise-linear walk between randomly chosen templates
// over time, plus i.i.d. Gaussian noise. Crude, but separable and fully
// reproducible, which is what the training and evaluation tests need.

namespace fgfi {

struct SynthSpec {
  std::int64_t num_speakers = 10;
  std::int64_t samples_per_speaker = 20;
  std::int64_t n_mels = 80;
  std::int64_t frames_per_sample = 100;
  std::int64_t templates_per_speaker = 3;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    require(num_speakers >= 1, "synth: num_speakers must be >= 1");
    require(samples_per_speaker >= 1, "synth: samples_per_speaker must be >= 1");
    require(n_mels >= 1, "synth: n_mels must be >= 1");
    require(frames_per_sample >= 1, "synth: frames_per_sample must be >= 1");
    require(templates_per_speaker >= 1, "synth: templates_per_speaker must be >= 1");
    require(noise_sigma >= 0.0, "synth: noise_sigma must be >= 0");
  }
};

namespace detail {

struct SpectralBump {
  double amp, center, width;
};

// A speaker's templates share one base set of three bumps; each template
// jitters the bump parameters slightly. Utterances of one speaker thus
// vary around a stable spectral signature while speakers stay far apart.
inline std::array<SpectralBump, 3> speaker_base_bumps(std::int64_t n_mels, SplitMix64& rng) {
  std::array<SpectralBump, 3> bumps;
  for (auto& b : bumps) {
    b.amp = 1.0 + 2.0 * rng.next_double();
    b.center = rng.next_double() * static_cast<double>(n_mels - 1);
    b.width = 2.0 + 6.0 * rng.next_double();
  }
  return bumps;
}

inline std::vector<double> gaussian_bump_template(std::int64_t n_mels,
                                                  const std::array<SpectralBump, 3>& base,
                                                  SplitMix64& rng) {
  std::vector<double> t(static_cast<std::size_t>(n_mels), 0.0);
  for (const SpectralBump& b : base) {
    const double amp = b.amp * (0.85 + 0.3 * rng.next_double());
    const double center = b.center + (2.0 * rng.next_double() - 1.0) * 2.0;
    const double width = b.width * (0.9 + 0.2 * rng.next_double());
    for (std::int64_t m = 0; m < n_mels; ++m) {
      const double d = (static_cast<double>(m) - center) / width;
      t[static_cast<std::size_t>(m)] += amp * std::exp(-0.5 * d * d);
    }
  }
  return t;
}

}  // namespace detail

/// Templates of every speaker, exposed so tests can run the
/// nearest-template separability check against the same draw.
inline std::vector<std::vector<std::vector<double>>> synth_templates(const SynthSpec& spec) {
  spec.validate();
  const SplitMix64 base(spec.seed);
  std::vector<std::vector<std::vector<double>>> all(
      static_cast<std::size_t>(spec.num_speakers));
  for (std::int64_t s = 0; s < spec.num_speakers; ++s) {
    SplitMix64 srng = base.fork(static_cast<std::uint64_t>(s));
    const auto bumps = detail::speaker_base_bumps(spec.n_mels, srng);
    auto& templates = all[static_cast<std::size_t>(s)];
    templates.reserve(static_cast<std::size_t>(spec.templates_per_speaker));
    for (std::int64_t t = 0; t < spec.templates_per_speaker; ++t)
      templates.push_back(detail::gaussian_bump_template(spec.n_mels, bumps, srng));
  }
  return all;
}

inline std::string synth_speaker_id(std::int64_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%04d", static_cast<int>(index));
  return buf;
}

inline std::vector<LogMelFeature> synth_corpus(const SynthSpec& spec) {
  spec.validate();
  const auto all_templates = synth_templates(spec);
  const SplitMix64 base(spec.seed);
  const std::int64_t frames = spec.frames_per_sample;

  std::vector<LogMelFeature> out;
  out.reserve(static_cast<std::size_t>(spec.num_speakers * spec.samples_per_speaker));
  for (std::int64_t s = 0; s < spec.num_speakers; ++s) {
    const auto& templates = all_templates[static_cast<std::size_t>(s)];
    const SplitMix64 srng = base.fork(static_cast<std::uint64_t>(s));
    for (std::int64_t j = 0; j < spec.samples_per_speaker; ++j) {
      // substream keyed by sample index; template draws above consumed a
      // different stream, so samples are independent of template count
      SplitMix64 rng = srng.fork(static_cast<std::uint64_t>(j) + 1);

      // waypoints roughly every 25 frames, endpoints pinned
      const std::int64_t segments =
          frames <= 1 ? 1 : std::max<std::int64_t>(1, (frames - 1 + 24) / 25);
      std::vector<std::int64_t> pos(static_cast<std::size_t>(segments) + 1);
      std::vector<std::size_t> tmpl(static_cast<std::size_t>(segments) + 1);
      for (std::int64_t k = 0; k <= segments; ++k) {
        pos[static_cast<std::size_t>(k)] =
            frames <= 1 ? 0 : (k * (frames - 1)) / segments;
        tmpl[static_cast<std::size_t>(k)] = static_cast<std::size_t>(
            rng.below(static_cast<std::uint64_t>(templates.size())));
      }

      LogMelFeature f;
      f.n_mels = spec.n_mels;
      f.n_frames = frames;
      f.speaker_label = synth_speaker_id(s);
      f.values.assign(static_cast<std::size_t>(spec.n_mels * frames), 0.0);

      std::int64_t seg = 0;
      for (std::int64_t t = 0; t < frames; ++t) {
        while (seg + 1 < segments && t >= pos[static_cast<std::size_t>(seg) + 1]) ++seg;
        const std::int64_t p0 = pos[static_cast<std::size_t>(seg)];
        const std::int64_t p1 = pos[static_cast<std::size_t>(seg) + 1];
        const double alpha =
            p1 > p0 ? static_cast<double>(t - p0) / static_cast<double>(p1 - p0) : 0.0;
        const auto& a = templates[tmpl[static_cast<std::size_t>(seg)]];
        const auto& b = templates[tmpl[static_cast<std::size_t>(seg) + 1]];
        for (std::int64_t m = 0; m < spec.n_mels; ++m) {
          const double v = (1.0 - alpha) * a[static_cast<std::size_t>(m)] +
                           alpha * b[static_cast<std::size_t>(m)] +
                           spec.noise_sigma * rng.next_gaussian();
          f.values[static_cast<std::size_t>(m * frames + t)] = v;
        }
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace fgfi

#endif  // FGFI_DATAGEN_HPP
