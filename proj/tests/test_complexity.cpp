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

#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "fgfi/complexity.hpp"
#include "fgfi/macs.hpp"
#include "fgfi/model.hpp"
#include "fgfi/rng.hpp"

using fgfi::ModelConfig;
using fgfi::ModelParams;
using fgfi::SplitMix64;
using fgfi::SweepAxis;
using fgfi::Tensor;
using fgfi::Var;

namespace {

ModelConfig degenerate_config() {
  ModelConfig c;
  c.n_mels = 1;
  c.num_groups = 1;
  c.blstm_hidden = 1;
  c.stem_channels = 1;
  c.repr_maps = 1;
  c.output_maps = 1;
  return c;
}

}  // namespace

TEST_CASE("parameter count of the degenerate config matches the hand total") {
  // blstm: 2 dirs * 4 gates * (1*1 + 1*1 + 1)       = 24
  // stem: 1 kernel * 3*3 on 1 channel + 1 bias      = 10
  // drc conv: 1 kernel * 1*3*3 + 1 bias             = 10
  // depthwise: none (ratio 1)                       = 0
  // residual 1x1: 1 weight + 1 bias per output map  = 2
  CHECK(fgfi::param_count(degenerate_config()) == 46);
}

TEST_CASE("MAC count of the degenerate config at one frame matches the hand total") {
  // blstm: 1 group * 1 frame * 2 dirs * 4 gates * (1+1) = 16
  // stem conv: 3*3 taps * 1 out * (2x1 map)             = 18
  // drc conv: 3*3 * 1 * (2x1)                           = 18
  // residual 1x1: 1*1*1 out over 1x1 input              =  1
  // interaction: mean 2 + one add 2                     =  4
  // group height mean: 1*2*1 inputs                     =  2
  // residual height mean: 1*1*1                         =  1
  // residual add: 1                                     =  1
  // stats pool: 2 passes * 1 channel * 1 frame          =  2
  CHECK(fgfi::macs(degenerate_config(), 1) == 63);
}

TEST_CASE("full-size config parameter breakdown") {
  ModelConfig c;  // defaults: 80 mels, 4 groups, hidden 40, stem 32, 128/256 maps
  auto r = fgfi::complexity_report(c, 100);
  std::int64_t blstm = 0, stem = 0, drc = 0, dw = 0, res = 0;
  for (const auto& l : r.layers) {
    if (l.name == "blstm") blstm = l.params;
    if (l.name == "stem_conv") stem = l.params;
    if (l.name == "drc_conv") drc = l.params;
    if (l.name == "drc_depthwise") dw = l.params;
    if (l.name == "residual_conv") res = l.params;
  }
  CHECK(blstm == 19520);  // 8 * (20*40 + 1600 + 40)
  CHECK(stem == 320);     // 32*9 + 32
  CHECK(drc == 36992);    // 128*32*9 + 128
  CHECK(dw == 1280);      // 128 * (9+1)
  CHECK(res == 512);      // 256 + 256
  CHECK(r.param_count == 58624);

  // the accountant agrees with the parameters actually allocated
  ModelParams p(c);
  CHECK(p.parameter_count() == r.param_count);
}

TEST_CASE("accountant totals equal the sum of the breakdown") {
  SplitMix64 rng(8);
  for (int iter = 0; iter < 20; ++iter) {
    ModelConfig c;
    c.num_groups = std::int64_t(1) << rng.below(4);
    c.n_mels = c.num_groups * (1 + std::int64_t(rng.below(20)));
    c.blstm_hidden = 1 + std::int64_t(rng.below(8));
    c.stem_channels = 1 + std::int64_t(rng.below(8));
    c.repr_maps = 1 + std::int64_t(rng.below(6));
    c.output_maps = c.repr_maps * (1 + std::int64_t(rng.below(4)));
    const std::int64_t frames = 1 + std::int64_t(rng.below(50));
    auto r = fgfi::complexity_report(c, frames);
    std::int64_t params = 0, macs = 0;
    for (const auto& l : r.layers) {
      params += l.params;
      macs += l.macs;
      CHECK(l.params >= 0);
      CHECK(l.macs >= 0);
    }
    CHECK(params == r.param_count);
    CHECK(macs == r.macs);
    // the accountant and the allocated model agree on the count
    CHECK(ModelParams(c).parameter_count() == r.param_count);
  }
}

TEST_CASE("parameters strictly decrease as the group count doubles") {
  ModelConfig c;
  auto rows = fgfi::sweep(c, SweepAxis::kGroups, {1, 2, 4, 8, 16}, 100);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].report.param_count < rows[i - 1].report.param_count);
  // MACs grow with the group count in this composition: every group runs
  // the convolution stack at the full 2*hidden map height, and only the
  // recurrent input term shrinks with the group width
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].report.macs > rows[i - 1].report.macs);
}

TEST_CASE("parameters strictly decrease as the derive ratio grows") {
  ModelConfig c;
  auto rows = fgfi::sweep(c, SweepAxis::kDeriveRatio, {1, 2, 4}, 100);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].report.param_count > rows[1].report.param_count);
  CHECK(rows[1].report.param_count > rows[2].report.param_count);
  // ratio 1 produces every map by regular convolution: the MAC peak
  CHECK(rows[0].report.macs > rows[1].report.macs);
}

TEST_CASE("MACs are exactly linear in the frame count") {
  SplitMix64 rng(9);
  ModelConfig c;
  for (int iter = 0; iter < 20; ++iter) {
    const std::int64_t t = 1 + std::int64_t(rng.below(200));
    const std::int64_t a = 1 + std::int64_t(rng.below(9));
    CHECK(fgfi::macs(c, a * t) == a * fgfi::macs(c, t));
  }
  CHECK(fgfi::param_count(c) == fgfi::complexity_report(c, 977).param_count);
}

TEST_CASE("three seconds cost exactly three times one second") {
  ModelConfig c;
  const auto one = fgfi::macs(c, fgfi::frames_for_seconds(1.0));
  const auto three = fgfi::macs(c, fgfi::frames_for_seconds(3.0));
  const double ratio = static_cast<double>(three) / static_cast<double>(one);
  CHECK(ratio >= 2.99);
  CHECK(ratio <= 3.01);
  CHECK(fgfi::frames_for_seconds(1.0) == 100);
  CHECK(fgfi::frames_for_seconds(7.0) == 700);
}

TEST_CASE("instrumented forward count equals the accountant exactly") {
  ModelConfig c;
  c.n_mels = 8;
  c.num_groups = 2;
  c.blstm_hidden = 3;
  c.stem_channels = 2;
  c.repr_maps = 2;
  c.output_maps = 4;
  ModelParams p = ModelParams::init(c, 3);
  SplitMix64 rng(4);
  for (std::int64_t frames : {1, 5, 13}) {
    Tensor f({8, frames});
    for (auto& v : f.vec()) v = 2.0 * rng.next_double() - 1.0;
    fgfi::MacCounter::Scope scope;
    fgfi::embed(Var::leaf(std::move(f)), p);
    CHECK(scope.count() == static_cast<std::uint64_t>(fgfi::macs(c, frames)));
  }

  // ratio 1 (no derivative maps) and a single group are counted right too
  ModelConfig c1 = c;
  c1.num_groups = 1;
  c1.output_maps = 2;
  ModelParams p1 = ModelParams::init(c1, 5);
  Tensor f({8, 7});
  for (auto& v : f.vec()) v = rng.next_double();
  fgfi::MacCounter::Scope scope;
  fgfi::embed(Var::leaf(std::move(f)), p1);
  CHECK(scope.count() == static_cast<std::uint64_t>(fgfi::macs(c1, 7)));
}

TEST_CASE("single-value sweep equals the direct call") {
  ModelConfig c;
  auto rows = fgfi::sweep(c, SweepAxis::kGroups, {4}, 50);
  REQUIRE(rows.size() == 1);
  auto direct = fgfi::complexity_report(c, 50);
  CHECK(rows[0].report.param_count == direct.param_count);
  CHECK(rows[0].report.macs == direct.macs);
}

TEST_CASE("sweep CSV carries one row per value with the declared header") {
  ModelConfig c;
  const std::string csv = fgfi::sweep_to_csv(fgfi::sweep(c, SweepAxis::kGroups, {1, 2, 4}, 100));
  CHECK(csv.rfind("axis_value,params,macs_per_1s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("sweep validation") {
  ModelConfig c;
  CHECK_THROWS_AS(fgfi::sweep(c, SweepAxis::kGroups, {3}, 100), fgfi::ValidationError);
  CHECK_THROWS_AS(fgfi::sweep(c, SweepAxis::kDeriveRatio, {5}, 100), fgfi::ValidationError);
  CHECK_THROWS_AS(fgfi::macs(c, 0), fgfi::ValidationError);
  CHECK(fgfi::parse_sweep_axis("I") == SweepAxis::kGroups);
  CHECK(fgfi::parse_sweep_axis("ML") == SweepAxis::kDeriveRatio);
  CHECK_THROWS_AS(fgfi::parse_sweep_axis("bogus"), fgfi::ValidationError);
}

TEST_CASE("deviation against the reference totals is reported, not asserted") {
  ModelConfig c;  // full-size defaults
  auto d = fgfi::reference_deviation(c);
  CHECK(d.params == 58624);
  CHECK(d.params_within_tolerance);   // +8.3% against 54.14K
  CHECK(std::abs(d.params_deviation_pct) < 25.0);
  CHECK_FALSE(d.macs_within_tolerance);  // full-resolution convolutions dominate
  CHECK(d.divergence_note.find("drc_conv") != std::string::npos);
}
