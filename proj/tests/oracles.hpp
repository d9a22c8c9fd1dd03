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

// Brute-force reference implementations used by the unit and acceptance
// suites. Everything here is written as directly as possible from the
// mathematical definitions (explicit padding, quadruple sums, two-pass
// statistics) and deliberately shares no code with the library kernels
// it checks.

#ifndef FGFI_TESTS_ORACLES_HPP
#define FGFI_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using std::int64_t;
using vec = std::vector<double>;

// Zero-pads a [C,h,w] image by `lead` cells before and `trail` cells
// after, per spatial axis.
inline vec pad_image(const vec& x, int64_t c, int64_t h, int64_t w, int64_t lead_h,
                     int64_t trail_h, int64_t lead_w, int64_t trail_w) {
  const int64_t ph = h + lead_h + trail_h;
  const int64_t pw = w + lead_w + trail_w;
  vec out(static_cast<std::size_t>(c * ph * pw), 0.0);
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t z = 0; z < w; ++z)
        out[(ch * ph + y + lead_h) * pw + (z + lead_w)] = x[(ch * h + y) * w + z];
  return out;
}

// Direct quadruple-sum cross-correlation. weights [out,in,kh,kw].
// same_padding: lead = (k-1)/2, trail = k-1-lead.
inline vec conv2d(const vec& x, int64_t in_c, int64_t h, int64_t w, const vec& weights,
                  const vec& bias, int64_t out_c, int64_t kh, int64_t kw, bool same_padding,
                  int64_t* out_h, int64_t* out_w) {
  int64_t lead_h = 0, trail_h = 0, lead_w = 0, trail_w = 0;
  if (same_padding) {
    lead_h = (kh - 1) / 2;
    trail_h = kh - 1 - lead_h;
    lead_w = (kw - 1) / 2;
    trail_w = kw - 1 - lead_w;
  }
  const vec padded = pad_image(x, in_c, h, w, lead_h, trail_h, lead_w, trail_w);
  const int64_t ph = h + lead_h + trail_h;
  const int64_t pw = w + lead_w + trail_w;
  const int64_t oh = ph - kh + 1;
  const int64_t ow = pw - kw + 1;
  vec out(static_cast<std::size_t>(out_c * oh * ow), 0.0);
  for (int64_t oc = 0; oc < out_c; ++oc)
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t z = 0; z < ow; ++z) {
        double acc = bias[static_cast<std::size_t>(oc)];
        for (int64_t ic = 0; ic < in_c; ++ic)
          for (int64_t u = 0; u < kh; ++u)
            for (int64_t v = 0; v < kw; ++v)
              acc += weights[((oc * in_c + ic) * kh + u) * kw + v] *
                     padded[(ic * ph + y + u) * pw + (z + v)];
        out[(oc * oh + y) * ow + z] = acc;
      }
  *out_h = oh;
  *out_w = ow;
  return out;
}

// Per-channel convolution with same padding. weights [C,kh,kw].
inline vec depthwise_conv2d(const vec& x, int64_t c, int64_t h, int64_t w, const vec& weights,
                            const vec& bias, int64_t kh, int64_t kw) {
  vec out(static_cast<std::size_t>(c * h * w), 0.0);
  for (int64_t ch = 0; ch < c; ++ch) {
    vec plane(x.begin() + ch * h * w, x.begin() + (ch + 1) * h * w);
    vec wch(weights.begin() + ch * kh * kw, weights.begin() + (ch + 1) * kh * kw);
    int64_t oh = 0, ow = 0;
    vec o = conv2d(plane, 1, h, w, wch, {bias[static_cast<std::size_t>(ch)]}, 1, kh, kw, true,
                   &oh, &ow);
    std::copy(o.begin(), o.end(), out.begin() + ch * h * w);
  }
  return out;
}

// One LSTM step from zero initial state. Weight rows stacked per gate in
// the order input, forget, cell, output.
inline vec lstm_single_step(const vec& x, int64_t in, int64_t hidden, const vec& w_ih,
                            const vec& w_hh, const vec& b) {
  (void)w_hh;  // h_prev is zero, the recurrent term vanishes
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  vec h(static_cast<std::size_t>(hidden));
  for (int64_t j = 0; j < hidden; ++j) {
    double pi = b[static_cast<std::size_t>(j)];
    double pf = b[static_cast<std::size_t>(hidden + j)];
    double pg = b[static_cast<std::size_t>(2 * hidden + j)];
    double po = b[static_cast<std::size_t>(3 * hidden + j)];
    for (int64_t k = 0; k < in; ++k) {
      pi += w_ih[j * in + k] * x[static_cast<std::size_t>(k)];
      pf += w_ih[(hidden + j) * in + k] * x[static_cast<std::size_t>(k)];
      pg += w_ih[(2 * hidden + j) * in + k] * x[static_cast<std::size_t>(k)];
      po += w_ih[(3 * hidden + j) * in + k] * x[static_cast<std::size_t>(k)];
    }
    const double c = sigmoid(pi) * std::tanh(pg);  // forget gate times zero cell drops out
    h[static_cast<std::size_t>(j)] = sigmoid(po) * std::tanh(c);
  }
  return h;
}

// Two-pass mean and population standard deviation per row of a [C,T]
// matrix, concatenated [means..., stds...].
inline vec stats_pool(const vec& x, int64_t c, int64_t t) {
  vec out(static_cast<std::size_t>(2 * c));
  for (int64_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (int64_t i = 0; i < t; ++i) mean += x[ch * t + i];
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (int64_t i = 0; i < t; ++i) {
      const double d = x[ch * t + i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(t);
    out[static_cast<std::size_t>(ch)] = mean;
    out[static_cast<std::size_t>(c + ch)] = std::sqrt(var);
  }
  return out;
}

// Direct, unshifted softmax.
inline vec softmax(const vec& x) {
  double z = 0.0;
  vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i]);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return out;
}

inline double squared_euclidean(const vec& a, const vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

// Per-class mean of support embeddings.
inline vec prototype(const std::vector<vec>& embeddings) {
  vec out(embeddings.front().size(), 0.0);
  for (const vec& e : embeddings)
    for (std::size_t i = 0; i < e.size(); ++i) out[i] += e[i];
  for (auto& v : out) v /= static_cast<double>(embeddings.size());
  return out;
}

// Softmax over negated squared distances to the prototypes.
inline vec classify(const vec& query, const std::vector<vec>& protos) {
  vec neg_d(protos.size());
  for (std::size_t n = 0; n < protos.size(); ++n)
    neg_d[n] = -squared_euclidean(protos[n], query);
  return softmax(neg_d);
}

// Group interaction: add the cross-group elementwise mean onto each map.
inline std::vector<vec> feature_interaction(const std::vector<vec>& groups) {
  vec mean(groups.front().size(), 0.0);
  for (const vec& g : groups)
    for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
  for (auto& v : mean) v /= static_cast<double>(groups.size());
  std::vector<vec> out(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    out[k].resize(groups[k].size());
    for (std::size_t i = 0; i < groups[k].size(); ++i) out[k][i] = groups[k][i] + mean[i];
  }
  return out;
}

// Equal-error rate by exhaustive threshold scan over score midpoints.
// Scores accept when >= threshold; returns the rate where the false
// rejection and false acceptance rates meet.
inline double eer_exhaustive(vec targets, vec nontargets) {
  vec candidates;
  for (double s : targets) candidates.push_back(s);
  for (double s : nontargets) candidates.push_back(s);
  std::sort(candidates.begin(), candidates.end());
  auto frr = [&](double th) {
    int64_t n = 0;
    for (double s : targets) n += s < th ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(targets.size());
  };
  auto far = [&](double th) {
    int64_t n = 0;
    for (double s : nontargets) n += s >= th ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(nontargets.size());
  };
  double prev_th = candidates.front() - 1.0;
  double prev_d = frr(prev_th) - far(prev_th);  // = -1
  double prev_frr = frr(prev_th);
  for (double th : candidates) {
    const double d = frr(th) - far(th);
    if (d == 0.0) return frr(th);
    if (d > 0.0) {
      // crossed between prev_th and th; interpolate both rates linearly
      const double t = -prev_d / (d - prev_d);
      return prev_frr + t * (frr(th) - prev_frr);
    }
    prev_th = th;
    prev_d = d;
    prev_frr = frr(th);
  }
  return 1.0;
}

}  // namespace oracle

#endif  // FGFI_TESTS_ORACLES_HPP
