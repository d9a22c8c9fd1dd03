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

#ifndef FGFI_CONV_HPP
#define FGFI_CONV_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "fgfi/autodiff.hpp"
#include "fgfi/rng.hpp"

// Stride-1 2-D convolutions in the deep-learning convention: the kernel
// is applied as cross-correlation, no flip. "Same" padding is symmetric
// zero padding; for even kernel sizes the extra row/column goes to the
// trailing side.

namespace fgfi {

enum class Padding { kSame, kValid };

/// Dense kernel bank: weights [out_channels, in_channels, kh, kw] plus a
/// per-output-channel bias.
struct ConvKernel {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kh = 0;
  std::int64_t kw = 0;
  Var weights;
  Var bias;

  ConvKernel() = default;

  ConvKernel(std::int64_t in_c, std::int64_t out_c, std::int64_t kernel_h, std::int64_t kernel_w)
      : in_channels(in_c), out_channels(out_c), kh(kernel_h), kw(kernel_w) {
    require(in_c >= 1 && out_c >= 1 && kernel_h >= 1 && kernel_w >= 1,
            "conv kernel dims must be positive");
    weights = Var::leaf(Tensor({out_c, in_c, kernel_h, kernel_w}));
    bias = Var::leaf(Tensor({out_c}));
  }

  ConvKernel(std::int64_t in_c, std::int64_t out_c, std::int64_t kernel_h, std::int64_t kernel_w,
             std::vector<double> w, std::vector<double> b)
      : ConvKernel(in_c, out_c, kernel_h, kernel_w) {
    require(static_cast<std::int64_t>(w.size()) == out_c * in_c * kernel_h * kernel_w,
            "conv kernel weight count must be in*kh*kw*out");
    require(static_cast<std::int64_t>(b.size()) == out_c,
            "conv kernel bias count must equal out_channels");
    weights = Var::leaf(Tensor({out_c, in_c, kernel_h, kernel_w}, std::move(w)));
    bias = Var::leaf(Tensor({out_c}, std::move(b)));
  }

  std::int64_t parameter_count() const {
    return out_channels * in_channels * kh * kw + out_channels;
  }

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = in*kh*kw.
  void init_uniform(SplitMix64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kh * kw));
    for (auto& v : weights.tensor().vec()) v = (2.0 * rng.next_double() - 1.0) * bound;
    for (auto& v : bias.tensor().vec()) v = (2.0 * rng.next_double() - 1.0) * bound;
  }
};

namespace detail {

// The compiler will not reorder a strict FP reduction on its own and a
// single accumulator chain is latency-bound; the simd pragma licenses a
// fixed vector summation order for this loop only (deterministic
// run-to-run, no fast-math anywhere else).
inline double dot_rows(const double* a, const double* b, std::int64_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::int64_t t = 0; t < n; ++t) acc += a[t] * b[t];
  return acc;
}

inline void conv_output_extent(std::int64_t in, std::int64_t k, Padding pad, std::int64_t* out,
                               std::int64_t* pad_lead) {
  if (pad == Padding::kSame) {
    *out = in;
    *pad_lead = (k - 1) / 2;  // trailing side gets the larger half for even k
  } else {
    require(in >= k, "valid convolution needs input >= kernel extent");
    *out = in - k + 1;
    *pad_lead = 0;
  }
}

}  // namespace detail

/// input [C,h,w] -> [out_channels,h',w'].
inline Var conv2d(const Var& input, const ConvKernel& k, Padding pad) {
  require(input.shape().size() == 3, "conv2d: expects a C×h×w input");
  const std::int64_t in_c = input.shape()[0];
  const std::int64_t h = input.shape()[1];
  const std::int64_t w = input.shape()[2];
  require(in_c == k.in_channels, "conv2d: input has " + std::to_string(in_c) +
                                     " channels, kernel expects " + std::to_string(k.in_channels));

  std::int64_t oh = 0, ow = 0, pt = 0, pl = 0;
  detail::conv_output_extent(h, k.kh, pad, &oh, &pt);
  detail::conv_output_extent(w, k.kw, pad, &ow, &pl);

  const std::int64_t out_c = k.out_channels;
  const std::int64_t kh = k.kh, kw = k.kw;
  Tensor out({out_c, oh, ow});
  {
    const double* x = input.tensor().data();
    const double* wt = k.weights.tensor().data();
    const double* b = k.bias.tensor().data();
    double* y = out.data();
    for (std::int64_t oc = 0; oc < out_c; ++oc) {
      double* plane = y + oc * oh * ow;
      for (std::int64_t i = 0; i < oh * ow; ++i) plane[i] = b[oc];
      for (std::int64_t ic = 0; ic < in_c; ++ic) {
        for (std::int64_t u = 0; u < kh; ++u) {
          const std::int64_t y0 = std::max<std::int64_t>(0, pt - u);
          const std::int64_t y1 = std::min(oh, h + pt - u);
          for (std::int64_t v = 0; v < kw; ++v) {
            const double wv = wt[((oc * in_c + ic) * kh + u) * kw + v];
            const std::int64_t x0 = std::max<std::int64_t>(0, pl - v);
            const std::int64_t x1 = std::min(ow, w + pl - v);
            for (std::int64_t r = y0; r < y1; ++r) {
              const double* src = x + (ic * h + r + u - pt) * w + (x0 + v - pl);
              double* dst = plane + r * ow + x0;
              for (std::int64_t t = 0; t < x1 - x0; ++t) dst[t] += wv * src[t];
            }
          }
        }
      }
    }
  }
  MacCounter::add(static_cast<std::uint64_t>(in_c * kh * kw * out_c * oh * ow));

  detail::Node* xn = input.node();
  detail::Node* wn = k.weights.node();
  detail::Node* bn = k.bias.node();
  return Var::make(
      std::move(out), {input, k.weights, k.bias},
      [xn, wn, bn, in_c, out_c, h, w, oh, ow, kh, kw, pt, pl](detail::Node& self) {
        const double* g = self.t.grad().data();
        const double* x = xn->t.data();
        const double* wt = wn->t.data();
        double* gx = xn->t.grad().data();
        double* gw = wn->t.grad().data();
        double* gb = bn->t.grad().data();
        for (std::int64_t oc = 0; oc < out_c; ++oc) {
          const double* gplane = g + oc * oh * ow;
          double acc = 0.0;
          for (std::int64_t i = 0; i < oh * ow; ++i) acc += gplane[i];
          gb[oc] += acc;
          for (std::int64_t ic = 0; ic < in_c; ++ic) {
            for (std::int64_t u = 0; u < kh; ++u) {
              const std::int64_t y0 = std::max<std::int64_t>(0, pt - u);
              const std::int64_t y1 = std::min(oh, h + pt - u);
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t x0 = std::max<std::int64_t>(0, pl - v);
                const std::int64_t x1 = std::min(ow, w + pl - v);
                const std::int64_t widx = ((oc * in_c + ic) * kh + u) * kw + v;
                const double wv = wt[widx];
                double wacc = 0.0;
                for (std::int64_t r = y0; r < y1; ++r) {
                  wacc += detail::dot_rows(gplane + r * ow + x0,
                                           x + (ic * h + r + u - pt) * w + (x0 + v - pl),
                                           x1 - x0);
                }
                gw[widx] += wacc;
                for (std::int64_t r = y0; r < y1; ++r) {
                  const double* grow = gplane + r * ow + x0;
                  double* gxrow = gx + (ic * h + r + u - pt) * w + (x0 + v - pl);
                  for (std::int64_t t = 0; t < x1 - x0; ++t) gxrow[t] += wv * grow[t];
                }
              }
            }
          }
        }
      });
}

/// One kh×kw kernel per channel, applied channel by channel with "same"
/// padding; weights [C,kh,kw], bias [C].
struct DepthwiseKernel {
  std::int64_t channels = 0;
  std::int64_t kh = 0;
  std::int64_t kw = 0;
  Var weights;
  Var bias;

  DepthwiseKernel() = default;

  DepthwiseKernel(std::int64_t c, std::int64_t kernel_h, std::int64_t kernel_w)
      : channels(c), kh(kernel_h), kw(kernel_w) {
    require(c >= 1 && kernel_h >= 1 && kernel_w >= 1, "depthwise kernel dims must be positive");
    weights = Var::leaf(Tensor({c, kernel_h, kernel_w}));
    bias = Var::leaf(Tensor({c}));
  }

  DepthwiseKernel(std::int64_t c, std::int64_t kernel_h, std::int64_t kernel_w,
                  std::vector<double> w, std::vector<double> b)
      : DepthwiseKernel(c, kernel_h, kernel_w) {
    require(static_cast<std::int64_t>(w.size()) == c * kernel_h * kernel_w,
            "depthwise kernel count must equal channel count");
    require(static_cast<std::int64_t>(b.size()) == c, "depthwise bias count must equal channels");
    weights = Var::leaf(Tensor({c, kernel_h, kernel_w}, std::move(w)));
    bias = Var::leaf(Tensor({c}, std::move(b)));
  }

  std::int64_t parameter_count() const { return channels * (kh * kw + 1); }

  void init_uniform(SplitMix64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(kh * kw));
    for (auto& v : weights.tensor().vec()) v = (2.0 * rng.next_double() - 1.0) * bound;
    for (auto& v : bias.tensor().vec()) v = (2.0 * rng.next_double() - 1.0) * bound;
  }
};

/// input [C,h,w] -> [C,h,w]; output channel c depends only on input
/// channel c.
inline Var depthwise_conv2d(const Var& input, const DepthwiseKernel& k) {
  require(input.shape().size() == 3, "depthwise_conv2d: expects a C×h×w input");
  const std::int64_t c = input.shape()[0];
  const std::int64_t h = input.shape()[1];
  const std::int64_t w = input.shape()[2];
  require(c == k.channels, "depthwise_conv2d: kernel count " + std::to_string(k.channels) +
                               " does not match channel count " + std::to_string(c));
  const std::int64_t kh = k.kh, kw = k.kw;
  const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;

  Tensor out({c, h, w});
  {
    const double* x = input.tensor().data();
    const double* wt = k.weights.tensor().data();
    const double* b = k.bias.tensor().data();
    double* y = out.data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
      double* plane = y + ch * h * w;
      for (std::int64_t i = 0; i < h * w; ++i) plane[i] = b[ch];
      for (std::int64_t u = 0; u < kh; ++u) {
        const std::int64_t y0 = std::max<std::int64_t>(0, pt - u);
        const std::int64_t y1 = std::min(h, h + pt - u);
        for (std::int64_t v = 0; v < kw; ++v) {
          const double wv = wt[(ch * kh + u) * kw + v];
          const std::int64_t x0 = std::max<std::int64_t>(0, pl - v);
          const std::int64_t x1 = std::min(w, w + pl - v);
          for (std::int64_t r = y0; r < y1; ++r) {
            const double* src = x + (ch * h + r + u - pt) * w + (x0 + v - pl);
            double* dst = plane + r * w + x0;
            for (std::int64_t t = 0; t < x1 - x0; ++t) dst[t] += wv * src[t];
          }
        }
      }
    }
  }
  MacCounter::add(static_cast<std::uint64_t>(c * kh * kw * h * w));

  detail::Node* xn = input.node();
  detail::Node* wn = k.weights.node();
  detail::Node* bn = k.bias.node();
  return Var::make(std::move(out), {input, k.weights, k.bias},
                   [xn, wn, bn, c, h, w, kh, kw, pt, pl](detail::Node& self) {
                     const double* g = self.t.grad().data();
                     const double* x = xn->t.data();
                     const double* wt = wn->t.data();
                     double* gx = xn->t.grad().data();
                     double* gw = wn->t.grad().data();
                     double* gb = bn->t.grad().data();
                     for (std::int64_t ch = 0; ch < c; ++ch) {
                       const double* gplane = g + ch * h * w;
                       double acc = 0.0;
                       for (std::int64_t i = 0; i < h * w; ++i) acc += gplane[i];
                       gb[ch] += acc;
                       for (std::int64_t u = 0; u < kh; ++u) {
                         const std::int64_t y0 = std::max<std::int64_t>(0, pt - u);
                         const std::int64_t y1 = std::min(h, h + pt - u);
                         for (std::int64_t v = 0; v < kw; ++v) {
                           const std::int64_t x0 = std::max<std::int64_t>(0, pl - v);
                           const std::int64_t x1 = std::min(w, w + pl - v);
                           const std::int64_t widx = (ch * kh + u) * kw + v;
                           const double wv = wt[widx];
                           double wacc = 0.0;
                           for (std::int64_t r = y0; r < y1; ++r) {
                             wacc += detail::dot_rows(
                                 gplane + r * w + x0,
                                 x + (ch * h + r + u - pt) * w + (x0 + v - pl), x1 - x0);
                           }
                           gw[widx] += wacc;
                           for (std::int64_t r = y0; r < y1; ++r) {
                             const double* grow = gplane + r * w + x0;
                             double* gxrow = gx + (ch * h + r + u - pt) * w + (x0 + v - pl);
                             for (std::int64_t t = 0; t < x1 - x0; ++t) gxrow[t] += wv * grow[t];
                           }
                         }
                       }
                     }
                   });
}

/// Round-robin channel interleave: given E sources of identical shape
/// [L,h,w], output channel l*E+e is channel l of sources[e]. Used to lay
/// out derivative maps next to the representative map they came from.
inline Var interleave_channel_blocks(const std::vector<Var>& sources) {
  require(!sources.empty(), "interleave_channel_blocks: no inputs");
  const Shape& s0 = sources.front().shape();
  require(s0.size() == 3, "interleave_channel_blocks: expects C×h×w inputs");
  for (const Var& v : sources) {
    require(v.shape() == s0, "interleave_channel_blocks: shape mismatch");
  }
  const std::int64_t stride = static_cast<std::int64_t>(sources.size());
  const std::int64_t l = s0[0], plane = s0[1] * s0[2];
  Tensor out({l * stride, s0[1], s0[2]});
  double* po = out.data();
  for (std::int64_t e = 0; e < stride; ++e) {
    const double* src = sources[static_cast<std::size_t>(e)].tensor().data();
    for (std::int64_t c = 0; c < l; ++c) {
      std::copy(src + c * plane, src + (c + 1) * plane, po + (c * stride + e) * plane);
    }
  }
  std::vector<detail::Node*> nodes;
  for (const Var& v : sources) nodes.push_back(v.node());
  return Var::make(std::move(out), sources, [nodes, stride, l, plane](detail::Node& self) {
    const double* g = self.t.grad().data();
    for (std::int64_t e = 0; e < stride; ++e) {
      double* gp = nodes[static_cast<std::size_t>(e)]->t.grad().data();
      for (std::int64_t c = 0; c < l; ++c) {
        const double* src = g + (c * stride + e) * plane;
        double* dst = gp + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
      }
    }
  });
}

}  // namespace fgfi

#endif  // FGFI_CONV_HPP
