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

#ifndef FGFI_STATS_POOL_HPP
#define FGFI_STATS_POOL_HPP

#include <cmath>
#include <cstdint>

#include "fgfi/autodiff.hpp"

namespace fgfi {

// Derivative damping for the standard deviation at zero variance. The
// forward value is the exact population std, so constant rows pool to
// exactly zero; only the backward pass sees the epsilon.
inline constexpr double kStatsPoolVarEps = 1e-10;

/// x [C,T] -> [2C]: per-channel temporal mean followed by per-channel
/// population (divide-by-T) standard deviation.
inline Var stats_pool(const Var& x) {
  require(x.shape().size() == 2, "stats_pool: expects a C×T input");
  const std::int64_t c = x.shape()[0];
  const std::int64_t steps = x.shape()[1];
  const double inv = 1.0 / static_cast<double>(steps);

  Tensor out({2 * c});
  const double* px = x.tensor().data();
  double* po = out.data();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* row = px + ch * steps;
    double mean = 0.0;
    for (std::int64_t t = 0; t < steps; ++t) mean += row[t];
    mean *= inv;
    double var = 0.0;
    for (std::int64_t t = 0; t < steps; ++t) {
      const double d = row[t] - mean;
      var += d * d;
    }
    var *= inv;
    po[ch] = mean;
    po[c + ch] = std::sqrt(var);
  }
  MacCounter::add(static_cast<std::uint64_t>(2 * c * steps));

  detail::Node* xn = x.node();
  return Var::make(std::move(out), {x}, [xn, c, steps, inv](detail::Node& self) {
    const double* g = self.t.grad().data();
    const double* y = self.t.data();
    const double* px = xn->t.data();
    double* gx = xn->t.grad().data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double gmean = g[ch] * inv;
      const double std_v = y[c + ch];
      // d std / d x_t = (x_t - mean) / (T * sqrt(var + eps))
      const double denom = std::sqrt(std_v * std_v + kStatsPoolVarEps);
      const double gstd = g[c + ch] * inv / denom;
      const double mean = y[ch];
      const double* row = px + ch * steps;
      double* grow = gx + ch * steps;
      for (std::int64_t t = 0; t < steps; ++t) {
        grow[t] += gmean + gstd * (row[t] - mean);
      }
    }
  });
}

}  // namespace fgfi

#endif  // FGFI_STATS_POOL_HPP
