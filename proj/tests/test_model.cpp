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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "fgfi/checkpoint.hpp"
#include "fgfi/model.hpp"
#include "fgfi/rng.hpp"
#include "oracles.hpp"

using fgfi::ModelConfig;
using fgfi::ModelParams;
using fgfi::SplitMix64;
using fgfi::Tensor;
using fgfi::Var;

namespace {

Var random_feature(std::int64_t mels, std::int64_t frames, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Tensor t({mels, frames});
  for (auto& v : t.vec()) v = 2.0 * rng.next_double() - 1.0;
  return Var::leaf(std::move(t));
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.n_mels = 8;
  c.num_groups = 2;
  c.blstm_hidden = 3;
  c.stem_channels = 2;
  c.repr_maps = 2;
  c.output_maps = 4;
  return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("split_groups slices frequency rows into equal blocks") {
  Var f = random_feature(80, 12, 1);
  auto groups = fgfi::split_groups(f, 4);
  REQUIRE(groups.size() == 4);
  for (const Var& g : groups) CHECK(g.shape() == fgfi::Shape{20, 12});
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t j = 0; j < 20 * 12; ++j)
      CHECK(groups[static_cast<std::size_t>(i)].tensor()[j] == f.tensor()[i * 240 + j]);

  auto one = fgfi::split_groups(f, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].tensor().vec() == f.tensor().vec());

  Var back = fgfi::concat(groups, 0);
  CHECK(back.tensor().vec() == f.tensor().vec());

  CHECK_THROWS_AS(fgfi::split_groups(f, 3), fgfi::ValidationError);
}

TEST_CASE("drc with ratio 1 returns the representative maps unchanged") {
  ModelConfig c = tiny_config();
  c.output_maps = 2;  // equal to repr_maps
  ModelParams p = ModelParams::init(c, 5);
  REQUIRE(p.drc_derive.empty());
  Var y = Var::leaf(Tensor({2, 4, 5}, std::vector<double>(40, 0.25)));
  Var repr = fgfi::relu(fgfi::conv2d(y, p.drc_regular, fgfi::Padding::kSame));
  Var out = fgfi::drc_forward(y, p);
  CHECK(out.tensor().vec() == repr.tensor().vec());
}

TEST_CASE("drc channel layout places derivatives first, representative last") {
  // two representative maps, ratio 3: expect [d11, d12, z1, d21, d22, z2]
  SplitMix64 rng(91);
  ModelConfig c;
  c.n_mels = 8;
  c.num_groups = 2;
  c.blstm_hidden = 2;
  c.stem_channels = 2;
  c.repr_maps = 2;
  c.output_maps = 6;
  ModelParams p = ModelParams::init(c, 17);

  std::vector<double> xs(2 * 4 * 4);
  for (auto& v : xs) v = 2.0 * rng.next_double() - 1.0;
  Var y = Var::leaf(Tensor({2, 4, 4}, xs));
  Var out = fgfi::drc_forward(y, p);
  REQUIRE(out.shape() == fgfi::Shape{6, 4, 4});

  // oracle path: regular conv + relu, then per-channel transforms
  std::int64_t oh = 0, ow = 0;
  auto z = oracle::conv2d(xs, 2, 4, 4, p.drc_regular.weights.tensor().vec(),
                          p.drc_regular.bias.tensor().vec(), 2, 3, 3, true, &oh, &ow);
  for (auto& v : z) v = v > 0.0 ? v : 0.0;
  auto d1 = oracle::depthwise_conv2d(z, 2, 4, 4, p.drc_derive[0].weights.tensor().vec(),
                                     p.drc_derive[0].bias.tensor().vec(), 3, 3);
  auto d2 = oracle::depthwise_conv2d(z, 2, 4, 4, p.drc_derive[1].weights.tensor().vec(),
                                     p.drc_derive[1].bias.tensor().vec(), 3, 3);
  std::vector<double> want;
  for (int l = 0; l < 2; ++l) {
    want.insert(want.end(), d1.begin() + l * 16, d1.begin() + (l + 1) * 16);
    want.insert(want.end(), d2.begin() + l * 16, d2.begin() + (l + 1) * 16);
    want.insert(want.end(), z.begin() + l * 16, z.begin() + (l + 1) * 16);
  }
  CHECK(max_abs_diff(out.tensor().vec(), want) < 1e-12);

  // bitwise: block position E holds exactly the representative map
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 16; ++i)
      CHECK(out.tensor()[(l * 3 + 2) * 16 + i] == z[static_cast<std::size_t>(l * 16 + i)]);
}

TEST_CASE("rcb output shape follows the configuration") {
  ModelConfig c;  // defaults: the full-size configuration
  ModelParams p = ModelParams::init(c, 3);
  Var group = random_feature(20, 6, 2);
  Var out = fgfi::rcb_forward(group, p);
  CHECK(out.shape() == fgfi::Shape{256, 80, 6});
}

TEST_CASE("rcb with all-zero parameters emits zeros") {
  ModelConfig c = tiny_config();
  ModelParams p(c);  // zero-initialised
  Var group = random_feature(4, 7, 4);
  Var out = fgfi::rcb_forward(group, p);
  for (double v : out.tensor().vec()) CHECK(v == 0.0);
}

TEST_CASE("rcb equals the straight-line composition of its primitives") {
  ModelConfig c = tiny_config();
  ModelParams p = ModelParams::init(c, 21);
  Var group = random_feature(4, 9, 5);

  Var seq = fgfi::transpose2d(group);
  Var states = fgfi::blstm_forward(seq, p.blstm);
  Var img = fgfi::reshape(fgfi::transpose2d(states), {1, 6, 9});
  Var stem_out = fgfi::relu(fgfi::conv2d(img, p.stem, fgfi::Padding::kSame));
  Var repr = fgfi::relu(fgfi::conv2d(stem_out, p.drc_regular, fgfi::Padding::kSame));
  Var derived = fgfi::depthwise_conv2d(repr, p.drc_derive[0]);
  Var want = fgfi::interleave_channel_blocks({derived, repr});

  Var got = fgfi::rcb_forward(group, p);
  CHECK(max_abs_diff(got.tensor().vec(), want.tensor().vec()) < 1e-12);
}

TEST_CASE("interaction with a single group doubles it exactly") {
  Var g = random_feature(3, 5, 6);
  Var g3 = fgfi::reshape(g, {1, 3, 5});
  auto out = fgfi::feature_interaction({g3});
  REQUIRE(out.size() == 1);
  for (std::int64_t i = 0; i < 15; ++i) CHECK(out[0].tensor()[i] == 2.0 * g3.tensor()[i]);
}

TEST_CASE("interaction of identical groups doubles each of them") {
  Var g = Var::leaf(Tensor({2, 3, 4}, std::vector<double>(24, 0.7)));
  auto out = fgfi::feature_interaction({g, g, g});
  for (const Var& o : out)
    for (double v : o.tensor().vec()) CHECK(v == Catch::Approx(1.4).margin(1e-14));
}

TEST_CASE("interaction preserves the group sum up to the factor two") {
  SplitMix64 rng(31);
  std::vector<Var> groups;
  for (int i = 0; i < 4; ++i) groups.push_back(random_feature(2, 3, 100 + i));
  std::vector<Var> g3;
  for (auto& g : groups) g3.push_back(fgfi::reshape(g, {1, 2, 3}));
  auto out = fgfi::feature_interaction(g3);
  auto reference = oracle::feature_interaction(
      {g3[0].tensor().vec(), g3[1].tensor().vec(), g3[2].tensor().vec(), g3[3].tensor().vec()});
  for (int i = 0; i < 4; ++i)
    CHECK(max_abs_diff(out[static_cast<std::size_t>(i)].tensor().vec(),
                       reference[static_cast<std::size_t>(i)]) < 1e-12);
  for (std::int64_t j = 0; j < 6; ++j) {
    double sum_in = 0.0, sum_out = 0.0;
    for (int i = 0; i < 4; ++i) {
      sum_in += g3[static_cast<std::size_t>(i)].tensor()[j];
      sum_out += out[static_cast<std::size_t>(i)].tensor()[j];
    }
    CHECK(sum_out == Catch::Approx(2.0 * sum_in).margin(1e-12));
  }
}

TEST_CASE("embedding has dimension 2*output_maps for every legal config") {
  for (auto [groups, maps] : {std::pair<int, int>{1, 4}, {2, 4}, {4, 8}}) {
    ModelConfig c = tiny_config();
    c.num_groups = groups;
    c.repr_maps = maps / 2;
    c.output_maps = maps;
    ModelParams p = ModelParams::init(c, 7);
    Var e = fgfi::embed(random_feature(c.n_mels, 5, 50), p);
    CHECK(e.shape() == fgfi::Shape{2 * maps});
  }
}

TEST_CASE("full-size config embeds into 512 dimensions") {
  ModelConfig c;  // defaults
  REQUIRE(c.embedding_dim() == 512);
  ModelParams p = ModelParams::init(c, 9);
  Var e = fgfi::embed(random_feature(80, 4, 51), p);
  CHECK(e.shape() == fgfi::Shape{512});
}

TEST_CASE("zero parameters on a time-constant input zero the std half") {
  ModelConfig c = tiny_config();
  ModelParams p(c);  // all-zero weights and biases
  Tensor f({8, 10});
  for (std::int64_t m = 0; m < 8; ++m)
    for (std::int64_t t = 0; t < 10; ++t) f[m * 10 + t] = 0.3 * static_cast<double>(m);
  Var e = fgfi::embed(Var::leaf(std::move(f)), p);
  for (std::int64_t i = c.output_maps; i < 2 * c.output_maps; ++i) CHECK(e.tensor()[i] == 0.0);
}

TEST_CASE("embed equals the scripted composition of the module operations") {
  ModelConfig c = tiny_config();
  ModelParams p = ModelParams::init(c, 33);
  Var f = random_feature(8, 11, 52);

  auto groups = fgfi::split_groups(f, c.num_groups);
  std::vector<Var> maps;
  for (const Var& g : groups) maps.push_back(fgfi::rcb_forward(g, p));
  auto interacted = fgfi::feature_interaction(maps);
  Var grouped = fgfi::concat(interacted, 1);
  Var res = fgfi::conv2d(fgfi::reshape(f, {1, 8, 11}), p.residual, fgfi::Padding::kSame);
  Var want = fgfi::stats_pool(fgfi::add(fgfi::mean_over_height(grouped),
                                        fgfi::mean_over_height(res)));

  Var got = fgfi::embed(f, p);
  CHECK(max_abs_diff(got.tensor().vec(), want.tensor().vec()) < 1e-12);
}

TEST_CASE("groups stay local before interaction") {
  ModelConfig c = tiny_config();
  ModelParams p = ModelParams::init(c, 41);
  // keep the relus live so perturbations cannot be masked by a dead stem
  for (auto& v : p.stem.bias.tensor().vec()) v = 1.0;
  for (auto& v : p.drc_regular.bias.tensor().vec()) v = 1.0;
  Var f = random_feature(8, 6, 53);
  auto groups = fgfi::split_groups(f, 2);

  // perturb only the rows of group 1
  Tensor f2 = f.tensor();
  for (std::int64_t j = 4 * 6; j < 8 * 6; ++j) f2[j] += 0.5;
  auto groups2 = fgfi::split_groups(Var::leaf(std::move(f2)), 2);

  Var a0 = fgfi::rcb_forward(groups[0], p);
  Var b0 = fgfi::rcb_forward(groups2[0], p);
  CHECK(a0.tensor().vec() == b0.tensor().vec());

  Var a1 = fgfi::rcb_forward(groups[1], p);
  Var b1 = fgfi::rcb_forward(groups2[1], p);
  CHECK(max_abs_diff(a1.tensor().vec(), b1.tensor().vec()) > 0.0);
}

TEST_CASE("model config validation") {
  ModelConfig c = tiny_config();
  c.num_groups = 3;
  CHECK_THROWS_AS(c.validate(), fgfi::ValidationError);
  c = tiny_config();
  c.output_maps = 5;
  CHECK_THROWS_AS(c.validate(), fgfi::ValidationError);
  c = tiny_config();
  c.blstm_hidden = 0;
  CHECK_THROWS_AS(c.validate(), fgfi::ValidationError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ModelConfig c = tiny_config();
  ModelParams p = ModelParams::init(c, 77);
  const auto path = std::filesystem::temp_directory_path() / "fgfi_ckpt_test.bin";
  fgfi::save_checkpoint(path.string(), p);
  ModelParams q = fgfi::load_checkpoint(path.string());
  CHECK(q.config == p.config);
  auto np = p.named_parameters();
  auto nq = q.named_parameters();
  REQUIRE(np.size() == nq.size());
  for (std::size_t i = 0; i < np.size(); ++i) {
    CHECK(np[i].first == nq[i].first);
    CHECK(np[i].second.tensor().vec() == nq[i].second.tensor().vec());
  }

  // saving the reload reproduces the file byte for byte
  const auto path2 = std::filesystem::temp_directory_path() / "fgfi_ckpt_test2.bin";
  fgfi::save_checkpoint(path2.string(), q);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint loader reports structured errors") {
  const auto path = std::filesystem::temp_directory_path() / "fgfi_ckpt_bad.bin";
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  CHECK_THROWS_MATCHES(fgfi::load_checkpoint(path.string()), fgfi::DataError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("bad magic")));

  ModelParams p = ModelParams::init(tiny_config(), 7);
  fgfi::save_checkpoint(path.string(), p);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 16);
  CHECK_THROWS_MATCHES(fgfi::load_checkpoint(path.string()), fgfi::DataError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("truncated")));
  std::filesystem::remove(path);
}
