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

#ifndef FGFI_GRAD_CHECK_HPP
#define FGFI_GRAD_CHECK_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "fgfi/autodiff.hpp"
#include "fgfi/rng.hpp"

namespace fgfi {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::int64_t coords_checked = 0;
};

/// Compares reverse-mode gradients against central finite differences.
/// `build_loss` must rebuild the same scalar loss from the current values
/// of `params` (deterministic forward). For each sampled coordinate the
/// reported error is |analytic - numeric| / max(1, |analytic|, |numeric|).
inline GradCheckReport grad_check(const std::function<Var()>& build_loss,
                                  const std::vector<Var>& params, double epsilon,
                                  std::int64_t max_coords_per_param, SplitMix64& rng) {
  require(epsilon >= 1e-6 && epsilon <= 1e-4, "grad_check: epsilon must be in [1e-6, 1e-4]");
  require(max_coords_per_param >= 1, "grad_check: need at least one coordinate per parameter");

  std::vector<Var> ps = params;
  for (Var& p : ps) {
    p.ensure_grad();
    p.zero_grad();
  }
  Var loss = build_loss();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(ps.size());
  for (Var& p : ps) analytic.push_back(p.grad());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    Var& p = ps[pi];
    const std::int64_t n = p.size();
    std::vector<std::int64_t> coords;
    if (n <= max_coords_per_param) {
      coords.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      // sample without replacement via a partial shuffle
      std::vector<std::int64_t> all(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      for (std::int64_t i = 0; i < max_coords_per_param; ++i) {
        const std::int64_t j = i + static_cast<std::int64_t>(rng.below(
                                       static_cast<std::uint64_t>(n - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      }
      coords.assign(all.begin(), all.begin() + max_coords_per_param);
    }

    for (std::int64_t c : coords) {
      double& theta = p.tensor()[c];
      const double saved = theta;
      theta = saved + epsilon;
      const double f_plus = build_loss().scalar_value();
      theta = saved - epsilon;
      const double f_minus = build_loss().scalar_value();
      theta = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double a = analytic[pi][static_cast<std::size_t>(c)];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.coords_checked;
    }
  }
  for (Var& p : ps) p.zero_grad();
  return report;
}

}  // namespace fgfi

#endif  // FGFI_GRAD_CHECK_HPP
