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

#ifndef FGFI_BLSTM_HPP
#define FGFI_BLSTM_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fgfi/autodiff.hpp"
#include "fgfi/rng.hpp"

namespace fgfi {

/// Bidirectional LSTM parameters. Each direction owns an input-to-hidden
/// matrix [4*hidden, input], a hidden-to-hidden matrix [4*hidden, hidden]
/// and a bias [4*hidden]; rows are stacked per gate in the fixed order
/// input, forget, cell, output. Initial hidden and cell states are zero.
struct BlstmParams {
  std::int64_t input_size = 0;
  std::int64_t hidden_size = 0;
  Var w_ih_fwd, w_hh_fwd, b_fwd;
  Var w_ih_bwd, w_hh_bwd, b_bwd;

  BlstmParams() = default;

  BlstmParams(std::int64_t input, std::int64_t hidden) : input_size(input), hidden_size(hidden) {
    require(input >= 1 && hidden >= 1, "blstm sizes must be positive");
    w_ih_fwd = Var::leaf(Tensor({4 * hidden, input}));
    w_hh_fwd = Var::leaf(Tensor({4 * hidden, hidden}));
    b_fwd = Var::leaf(Tensor({4 * hidden}));
    w_ih_bwd = Var::leaf(Tensor({4 * hidden, input}));
    w_hh_bwd = Var::leaf(Tensor({4 * hidden, hidden}));
    b_bwd = Var::leaf(Tensor({4 * hidden}));
  }

  std::int64_t parameter_count() const {
    return 2 * 4 * (input_size * hidden_size + hidden_size * hidden_size + hidden_size);
  }

  void init_uniform(SplitMix64& rng) {
    auto fill = [&rng](Var& v, std::int64_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& x : v.tensor().vec()) x = (2.0 * rng.next_double() - 1.0) * bound;
    };
    fill(w_ih_fwd, input_size);
    fill(w_hh_fwd, hidden_size);
    fill(b_fwd, hidden_size);
    fill(w_ih_bwd, input_size);
    fill(w_hh_bwd, hidden_size);
    fill(b_bwd, hidden_size);
  }
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations one direction caches for backpropagation through time.
struct LstmTrace {
  std::vector<double> gi, gf, gc, go;  // post-activation gates, T*hidden each
  std::vector<double> c, tc;           // cell state and tanh(cell)
  std::vector<double> h;               // hidden state
};

// Runs one direction over the time indices t = order(0..T-1) and fills
// out[t, col0:col0+hidden].
inline LstmTrace lstm_direction(const double* seq, std::int64_t steps, std::int64_t in,
                                std::int64_t hidden, const double* w_ih, const double* w_hh,
                                const double* b, bool reversed, double* out,
                                std::int64_t out_cols, std::int64_t col0) {
  LstmTrace tr;
  const std::size_t th = static_cast<std::size_t>(steps * hidden);
  tr.gi.resize(th);
  tr.gf.resize(th);
  tr.gc.resize(th);
  tr.go.resize(th);
  tr.c.resize(th);
  tr.tc.resize(th);
  tr.h.resize(th);

  std::vector<double> pre(static_cast<std::size_t>(4 * hidden));
  std::vector<double> h_prev(static_cast<std::size_t>(hidden), 0.0);
  std::vector<double> c_prev(static_cast<std::size_t>(hidden), 0.0);

  for (std::int64_t step = 0; step < steps; ++step) {
    const std::int64_t t = reversed ? steps - 1 - step : step;
    const double* x = seq + t * in;
    const double* hp = h_prev.data();
    for (std::int64_t j = 0; j < 4 * hidden; ++j) {
      double acc = b[j];
      const double* wi = w_ih + j * in;
#pragma omp simd reduction(+ : acc)
      for (std::int64_t k = 0; k < in; ++k) acc += wi[k] * x[k];
      const double* wh = w_hh + j * hidden;
#pragma omp simd reduction(+ : acc)
      for (std::int64_t k = 0; k < hidden; ++k) acc += wh[k] * hp[k];
      pre[static_cast<std::size_t>(j)] = acc;
    }
    double* gi = tr.gi.data() + step * hidden;
    double* gf = tr.gf.data() + step * hidden;
    double* gc = tr.gc.data() + step * hidden;
    double* go = tr.go.data() + step * hidden;
    double* cc = tr.c.data() + step * hidden;
    double* tc = tr.tc.data() + step * hidden;
    double* hh = tr.h.data() + step * hidden;
    for (std::int64_t j = 0; j < hidden; ++j) {
      gi[j] = sigmoid(pre[static_cast<std::size_t>(j)]);
      gf[j] = sigmoid(pre[static_cast<std::size_t>(hidden + j)]);
      gc[j] = std::tanh(pre[static_cast<std::size_t>(2 * hidden + j)]);
      go[j] = sigmoid(pre[static_cast<std::size_t>(3 * hidden + j)]);
      cc[j] = gf[j] * c_prev[static_cast<std::size_t>(j)] + gi[j] * gc[j];
      tc[j] = std::tanh(cc[j]);
      hh[j] = go[j] * tc[j];
      out[t * out_cols + col0 + j] = hh[j];
      h_prev[static_cast<std::size_t>(j)] = hh[j];
      c_prev[static_cast<std::size_t>(j)] = cc[j];
    }
  }
  return tr;
}

inline void lstm_direction_backward(const LstmTrace& tr, const double* seq, std::int64_t steps,
                                    std::int64_t in, std::int64_t hidden, const double* w_ih,
                                    const double* w_hh, bool reversed, const double* gout,
                                    std::int64_t out_cols, std::int64_t col0, double* gseq,
                                    double* gw_ih, double* gw_hh, double* gb) {
  std::vector<double> dh(static_cast<std::size_t>(hidden), 0.0);
  std::vector<double> dc(static_cast<std::size_t>(hidden), 0.0);
  std::vector<double> dpre(static_cast<std::size_t>(4 * hidden));

  for (std::int64_t step = steps - 1; step >= 0; --step) {
    const std::int64_t t = reversed ? steps - 1 - step : step;
    const double* gi = tr.gi.data() + step * hidden;
    const double* gf = tr.gf.data() + step * hidden;
    const double* gc = tr.gc.data() + step * hidden;
    const double* go = tr.go.data() + step * hidden;
    const double* cc = tr.c.data() + step * hidden;
    const double* tc = tr.tc.data() + step * hidden;
    const double* c_prev = step > 0 ? tr.c.data() + (step - 1) * hidden : nullptr;
    const double* h_prev = step > 0 ? tr.h.data() + (step - 1) * hidden : nullptr;

    for (std::int64_t j = 0; j < hidden; ++j) {
      const double dhj = dh[static_cast<std::size_t>(j)] + gout[t * out_cols + col0 + j];
      const double dob = dhj * tc[j];
      double dcj = dc[static_cast<std::size_t>(j)] + dhj * go[j] * (1.0 - tc[j] * tc[j]);
      const double dib = dcj * gc[j];
      const double dgb = dcj * gi[j];
      const double dfb = dcj * (c_prev ? c_prev[j] : 0.0);
      dc[static_cast<std::size_t>(j)] = dcj * gf[j];
      dpre[static_cast<std::size_t>(j)] = dib * gi[j] * (1.0 - gi[j]);
      dpre[static_cast<std::size_t>(hidden + j)] = dfb * gf[j] * (1.0 - gf[j]);
      dpre[static_cast<std::size_t>(2 * hidden + j)] = dgb * (1.0 - gc[j] * gc[j]);
      dpre[static_cast<std::size_t>(3 * hidden + j)] = dob * go[j] * (1.0 - go[j]);
    }

    const double* x = seq + t * in;
    double* gx = gseq + t * in;
    std::fill(dh.begin(), dh.end(), 0.0);
    double* dhd = dh.data();
    for (std::int64_t j = 0; j < 4 * hidden; ++j) {
      const double d = dpre[static_cast<std::size_t>(j)];
      gb[j] += d;
      double* gwi = gw_ih + j * in;
      const double* wi = w_ih + j * in;
      for (std::int64_t k = 0; k < in; ++k) gwi[k] += d * x[k];
      for (std::int64_t k = 0; k < in; ++k) gx[k] += d * wi[k];
      if (h_prev) {
        double* gwh = gw_hh + j * hidden;
        const double* wh = w_hh + j * hidden;
        for (std::int64_t k = 0; k < hidden; ++k) gwh[k] += d * h_prev[k];
        for (std::int64_t k = 0; k < hidden; ++k) dhd[k] += d * wh[k];
      }
      // first step: h_prev is zero, contributes nothing
    }
  }
}

}  // namespace detail

/// seq [T, input_size] -> [T, 2*hidden]. Columns [0, hidden) carry the
/// forward direction's hidden state at each step, columns [hidden,
/// 2*hidden) the backward direction's, aligned per time step.
inline Var blstm_forward(const Var& seq, const BlstmParams& p) {
  require(seq.shape().size() == 2, "blstm_forward: expects a T×input sequence");
  const std::int64_t steps = seq.shape()[0];
  const std::int64_t in = seq.shape()[1];
  require(in == p.input_size, "blstm_forward: sequence feature size " + std::to_string(in) +
                                  " does not match input_size " + std::to_string(p.input_size));
  const std::int64_t hidden = p.hidden_size;

  Tensor out({steps, 2 * hidden});
  detail::LstmTrace fwd = detail::lstm_direction(
      seq.tensor().data(), steps, in, hidden, p.w_ih_fwd.tensor().data(),
      p.w_hh_fwd.tensor().data(), p.b_fwd.tensor().data(), false, out.data(), 2 * hidden, 0);
  detail::LstmTrace bwd = detail::lstm_direction(
      seq.tensor().data(), steps, in, hidden, p.w_ih_bwd.tensor().data(),
      p.w_hh_bwd.tensor().data(), p.b_bwd.tensor().data(), true, out.data(), 2 * hidden, hidden);
  MacCounter::add(static_cast<std::uint64_t>(steps) * 2 * 4 *
                  static_cast<std::uint64_t>(in * hidden + hidden * hidden));

  detail::Node* sn = seq.node();
  detail::Node* wif = p.w_ih_fwd.node();
  detail::Node* whf = p.w_hh_fwd.node();
  detail::Node* bf = p.b_fwd.node();
  detail::Node* wib = p.w_ih_bwd.node();
  detail::Node* whb = p.w_hh_bwd.node();
  detail::Node* bb = p.b_bwd.node();
  return Var::make(
      std::move(out), {seq, p.w_ih_fwd, p.w_hh_fwd, p.b_fwd, p.w_ih_bwd, p.w_hh_bwd, p.b_bwd},
      [sn, wif, whf, bf, wib, whb, bb, fwd = std::move(fwd), bwd = std::move(bwd), steps, in,
       hidden](detail::Node& self) {
        const double* g = self.t.grad().data();
        detail::lstm_direction_backward(fwd, sn->t.data(), steps, in, hidden, wif->t.data(),
                                        whf->t.data(), false, g, 2 * hidden, 0,
                                        sn->t.grad().data(), wif->t.grad().data(),
                                        whf->t.grad().data(), bf->t.grad().data());
        detail::lstm_direction_backward(bwd, sn->t.data(), steps, in, hidden, wib->t.data(),
                                        whb->t.data(), true, g, 2 * hidden, hidden,
                                        sn->t.grad().data(), wib->t.grad().data(),
                                        whb->t.grad().data(), bb->t.grad().data());
      });
}

}  // namespace fgfi

#endif  // FGFI_BLSTM_HPP
