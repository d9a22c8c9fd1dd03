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

#ifndef FGFI_MODEL_HPP
#define FGFI_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

#include "fgfi/autodiff.hpp"
#include "fgfi/blstm.hpp"
#include "fgfi/conv.hpp"
#include "fgfi/frontend.hpp"
#include "fgfi/rng.hpp"
#include "fgfi/stats_pool.hpp"

// The speaker embedding network. The input log-mel matrix is split along
// the frequency axis into equal groups, each transformed by one shared
// recurrent-convolutional block (BLSTM over time, a small convolutional
// stem, then a de-redundancy convolution that produces most of its output
// maps through cheap per-channel transforms). Group interaction adds the
// cross-group mean back onto every group, the groups are concatenated,
// and a 1x1-convolution residual path from the raw input joins them
// before statistics pooling produces the fixed-length embedding.

namespace fgfi {

enum class DistanceKind { kSquaredEuclidean, kEuclidean };

inline std::string distance_name(DistanceKind d) {
  return d == DistanceKind::kSquaredEuclidean ? "squared_euclidean" : "euclidean";
}

inline DistanceKind parse_distance(const std::string& name) {
  if (name == "squared_euclidean") return DistanceKind::kSquaredEuclidean;
  if (name == "euclidean") return DistanceKind::kEuclidean;
  throw ValidationError("unknown distance '" + name + "'");
}

struct ModelConfig {
  std::int64_t n_mels = 80;        // input spectral dimension
  std::int64_t num_groups = 4;     // frequency subsets sharing the block
  std::int64_t blstm_hidden = 40;
  std::int64_t stem_channels = 32;
  std::int64_t stem_kernel = 3;
  std::int64_t drc_kernel = 3;
  std::int64_t repr_maps = 128;    // maps from the regular convolution
  std::int64_t output_maps = 256;  // total maps after derivative transforms
  DistanceKind distance = DistanceKind::kSquaredEuclidean;

  std::int64_t group_dim() const { return n_mels / num_groups; }
  std::int64_t derive_ratio() const { return output_maps / repr_maps; }
  std::int64_t embedding_dim() const { return 2 * output_maps; }
  /// Height of the feature maps inside one group: the BLSTM output per
  /// step, laid out as the image's frequency-like axis.
  std::int64_t map_height() const { return 2 * blstm_hidden; }

  void validate() const {
    require(n_mels >= 1 && num_groups >= 1 && blstm_hidden >= 1 && stem_channels >= 1 &&
                stem_kernel >= 1 && drc_kernel >= 1 && repr_maps >= 1 && output_maps >= 1,
            "model config: all sizes must be >= 1");
    require(n_mels % num_groups == 0,
            "model config: n_mels (" + std::to_string(n_mels) +
                ") must be divisible by num_groups (" + std::to_string(num_groups) + ")");
    require(output_maps % repr_maps == 0,
            "model config: output_maps must be a multiple of repr_maps");
  }

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  BlstmParams blstm;                        // shared by all groups
  ConvKernel stem;                          // 1 -> stem_channels
  ConvKernel drc_regular;                   // stem_channels -> repr_maps
  std::vector<DepthwiseKernel> drc_derive;  // derive_ratio-1 banks over repr_maps
  ConvKernel residual;                      // 1x1, 1 -> output_maps

  explicit ModelParams(const ModelConfig& c) : config(c) {
    c.validate();
    blstm = BlstmParams(c.group_dim(), c.blstm_hidden);
    stem = ConvKernel(1, c.stem_channels, c.stem_kernel, c.stem_kernel);
    drc_regular = ConvKernel(c.stem_channels, c.repr_maps, c.drc_kernel, c.drc_kernel);
    for (std::int64_t e = 1; e < c.derive_ratio(); ++e)
      drc_derive.emplace_back(c.repr_maps, c.drc_kernel, c.drc_kernel);
    residual = ConvKernel(1, c.output_maps, 1, 1);
  }

  /// Seeded uniform init, one layer after another in trainable() order.
  static ModelParams init(const ModelConfig& c, std::uint64_t seed) {
    ModelParams p(c);
    SplitMix64 rng(seed);
    p.blstm.init_uniform(rng);
    p.stem.init_uniform(rng);
    p.drc_regular.init_uniform(rng);
    for (auto& bank : p.drc_derive) bank.init_uniform(rng);
    p.residual.init_uniform(rng);
    return p;
  }

  /// Every trainable leaf in a fixed, documented order; this order also
  /// defines the checkpoint block table.
  std::vector<std::pair<std::string, Var>> named_parameters() const {
    std::vector<std::pair<std::string, Var>> out{
        {"blstm.w_ih_fwd", blstm.w_ih_fwd}, {"blstm.w_hh_fwd", blstm.w_hh_fwd},
        {"blstm.b_fwd", blstm.b_fwd},       {"blstm.w_ih_bwd", blstm.w_ih_bwd},
        {"blstm.w_hh_bwd", blstm.w_hh_bwd}, {"blstm.b_bwd", blstm.b_bwd},
        {"stem.weights", stem.weights},     {"stem.bias", stem.bias},
        {"drc.weights", drc_regular.weights}, {"drc.bias", drc_regular.bias}};
    for (std::size_t e = 0; e < drc_derive.size(); ++e) {
      out.emplace_back("derive." + std::to_string(e) + ".weights", drc_derive[e].weights);
      out.emplace_back("derive." + std::to_string(e) + ".bias", drc_derive[e].bias);
    }
    out.emplace_back("residual.weights", residual.weights);
    out.emplace_back("residual.bias", residual.bias);
    return out;
  }

  std::vector<Var> trainable() const {
    std::vector<Var> out;
    for (auto& [name, v] : named_parameters()) out.push_back(v);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = blstm.parameter_count() + stem.parameter_count() +
                     drc_regular.parameter_count() + residual.parameter_count();
    for (const auto& bank : drc_derive) n += bank.parameter_count();
    return n;
  }
};

/// One fixed-length speaker embedding.
struct Embedding {
  std::vector<double> values;
  std::string speaker_label;
};

inline Var feature_to_var(const LogMelFeature& f) {
  require(f.n_mels >= 1 && f.n_frames >= 1, "feature is empty");
  return Var::leaf(Tensor({f.n_mels, f.n_frames}, f.values));
}

/// Splits an H×T matrix into `groups` row blocks of H/groups rows each;
/// concatenating the blocks in order reconstructs the input exactly.
inline std::vector<Var> split_groups(const Var& f, std::int64_t groups) {
  require(f.shape().size() == 2, "split_groups: expects an H×T input");
  const std::int64_t h = f.shape()[0];
  require(groups >= 1 && h % groups == 0,
          "split_groups: " + std::to_string(h) + " rows not divisible into " +
              std::to_string(groups) + " groups");
  const std::int64_t rows = h / groups;
  std::vector<Var> out;
  out.reserve(static_cast<std::size_t>(groups));
  for (std::int64_t i = 0; i < groups; ++i)
    out.push_back(slice_axis0(f, i * rows, (i + 1) * rows));
  return out;
}

inline std::vector<Var> split_groups(const LogMelFeature& f, std::int64_t groups) {
  return split_groups(feature_to_var(f), groups);
}

/// De-redundancy convolution: the regular convolution produces the
/// representative maps; each bank of per-channel transforms derives one
/// extra map per representative. Output blocks are laid out derivative
/// maps first, representative map last.
inline Var drc_forward(const Var& input, const ConvKernel& regular,
                       const std::vector<DepthwiseKernel>& derive_banks) {
  Var repr = relu(conv2d(input, regular, Padding::kSame));
  if (derive_banks.empty()) return repr;
  std::vector<Var> blocks;
  blocks.reserve(derive_banks.size() + 1);
  for (const auto& bank : derive_banks) blocks.push_back(depthwise_conv2d(repr, bank));
  blocks.push_back(repr);
  return interleave_channel_blocks(blocks);
}

inline Var drc_forward(const Var& input, const ModelParams& p) {
  return drc_forward(input, p.drc_regular, p.drc_derive);
}

/// Shared recurrent-convolutional block over one frequency group. The
/// BLSTM runs over time with the group's rows as step features; its
/// T×(2*hidden) output is laid out as a single-channel
/// (2*hidden)×T image before the convolutions.
inline Var rcb_forward(const Var& group, const ModelParams& p) {
  require(group.shape().size() == 2, "rcb_forward: expects a J×T group");
  require(group.shape()[0] == p.config.group_dim(),
          "rcb_forward: group has " + std::to_string(group.shape()[0]) +
              " rows, config expects " + std::to_string(p.config.group_dim()));
  const std::int64_t frames = group.shape()[1];
  Var seq = transpose2d(group);          // T×J
  Var states = blstm_forward(seq, p.blstm);
  Var img = reshape(transpose2d(states), {1, p.config.map_height(), frames});
  Var stem_out = relu(conv2d(img, p.stem, Padding::kSame));
  return drc_forward(stem_out, p);
}

/// Adds the cross-group elementwise mean onto every group map.
inline std::vector<Var> feature_interaction(const std::vector<Var>& groups) {
  Var mean = mean_over_first_axis(groups);
  std::vector<Var> out;
  out.reserve(groups.size());
  for (const Var& g : groups) out.push_back(add(g, mean));
  return out;
}

/// Full embedding pass: split -> shared block per group -> interaction ->
/// height concat -> 1x1 residual from the raw input -> height means ->
/// statistics pooling. Output length is 2*output_maps.
inline Var embed(const Var& feature, const ModelParams& p) {
#if defined(__GLIBC__)
  // Activation buffers run to a few megabytes each; keep them on the
  // reusable heap instead of one fresh mmap (and page-fault storm) per
  // allocation.
  static const bool allocator_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    return true;
  }();
  (void)allocator_tuned;
#endif
  const ModelConfig& c = p.config;
  require(feature.shape().size() == 2 && feature.shape()[0] == c.n_mels,
          "embed: feature rows do not match the configured mel dimension");
  std::vector<Var> groups = split_groups(feature, c.num_groups);
  std::vector<Var> maps;
  maps.reserve(groups.size());
  for (const Var& g : groups) maps.push_back(rcb_forward(g, p));
  std::vector<Var> interacted = feature_interaction(maps);
  Var grouped = concat(interacted, 1);  // M × (num_groups*map_height) × T
  Var res = conv2d(reshape(feature, {1, c.n_mels, feature.shape()[1]}), p.residual,
                   Padding::kSame);     // M × H × T
  Var pooled = add(mean_over_height(grouped), mean_over_height(res));  // M × T
  return stats_pool(pooled);
}

inline Var embed(const LogMelFeature& f, const ModelParams& p) {
  return embed(feature_to_var(f), p);
}

inline Embedding embed_feature(const LogMelFeature& f, const ModelParams& p) {
  Var e = embed(f, p);
  return Embedding{e.tensor().vec(), f.speaker_label};
}

}  // namespace fgfi

#endif  // FGFI_MODEL_HPP
