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

#ifndef FGFI_AUTODIFF_HPP
#define FGFI_AUTODIFF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/macs.hpp"
#include "fgfi/tensor.hpp"

// Reverse-mode differentiation over a handful of dense kernels. Every
// operation evaluates eagerly and records a closure that scatters the
// output gradient back onto its inputs. A forward computation therefore
// *is* the recording; backward() walks it once in reverse topological
// order. Graphs are confined to one thread.

namespace fgfi {

namespace detail {

struct Node {
  Tensor t;  // value, plus the gradient slot once backward touches it
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  bool is_leaf() const { return parents.empty(); }
};

}  // namespace detail

/// Shared handle to one node of a recorded computation. Copying a Var
/// copies the handle, not the data.
class Var {
 public:
  Var() = default;

  /// A leaf: parameter or constant input. Leaves keep their value and
  /// accumulated gradient across backward passes.
  static Var leaf(Tensor t) {
    Var v;
    v.n_ = std::make_shared<detail::Node>();
    v.n_->t = std::move(t);
    return v;
  }

  static Var make(Tensor out, std::vector<Var> parents,
                  std::function<void(detail::Node&)> backprop) {
    Var v;
    v.n_ = std::make_shared<detail::Node>();
    v.n_->t = std::move(out);
    v.n_->parents.reserve(parents.size());
    for (auto& p : parents) {
      require(p.defined(), "operation input is an empty Var");
      v.n_->parents.push_back(p.n_);
    }
    v.n_->backprop = std::move(backprop);
    return v;
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor& tensor() const { return n_->t; }
  Tensor& tensor() { return n_->t; }
  const Shape& shape() const { return n_->t.shape(); }
  std::int64_t size() const { return n_->t.size(); }
  bool is_leaf() const { return n_->is_leaf(); }

  double scalar_value() const {
    require(n_->t.is_scalar(), "expected a scalar Var");
    return n_->t[0];
  }

  const std::vector<double>& grad() const { return n_->t.grad(); }
  void ensure_grad() { n_->t.ensure_grad(); }
  void zero_grad() { n_->t.zero_grad(); }

  detail::Node* node() const { return n_.get(); }

 private:
  std::shared_ptr<detail::Node> n_;
};

/// Runs reverse-mode accumulation from a scalar loss. Gradients
/// accumulate into every node of the recorded computation; leaf nodes
/// keep theirs (zero them between steps), interior nodes are fresh per
/// forward pass. With release_buffers, each interior node's value and
/// gradient storage is freed as soon as its closure has run, which caps
/// peak memory during training.
inline void backward(const Var& loss, bool release_buffers = false) {
  require(loss.defined(), "backward() on an empty Var");
  require(loss.tensor().is_scalar(), "backward() expects a scalar loss");
  require(!loss.node()->is_leaf(), "backward() before any recorded computation");
  loss.tensor().check_finite("loss passed to backward()");

  // Post-order over the producer DAG: parents end up before children, so
  // reverse iteration hands every node its full gradient before running
  // its closure.
  std::vector<detail::Node*> order;
  {
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    seen.insert(loss.node());
    stack.emplace_back(loss.node(), 0);
    while (!stack.empty()) {
      auto& top = stack.back();
      if (top.second < top.first->parents.size()) {
        detail::Node* p = top.first->parents[top.second++].get();
        if (seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(top.first);
        stack.pop_back();
      }
    }
  }

  loss.node()->t.ensure_grad();
  loss.node()->t.grad()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backprop) {
      n->t.ensure_grad();
      for (auto& p : n->parents) p->t.ensure_grad();
      n->backprop(*n);
    }
    if (release_buffers && !n->is_leaf()) {
      std::vector<double>().swap(n->t.vec());
      n->t.drop_grad();
    }
  }
}

// ---------------------------------------------------------------------
// Elementwise and reshaping operations
// ---------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  require(a.tensor().same_shape(b.tensor()),
          "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::int64_t n = a.size();
  Tensor out(a.shape());
  const double* pa = a.tensor().data();
  const double* pb = b.tensor().data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* an = a.node();
  detail::Node* bn = b.node();
  return Var::make(std::move(out), {a, b}, [an, bn, n](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data();
    double* gb = bn->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

inline Var scale(const Var& a, double factor) {
  const std::int64_t n = a.size();
  Tensor out(a.shape());
  const double* pa = a.tensor().data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = factor * pa[i];
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* an = a.node();
  return Var::make(std::move(out), {a}, [an, factor, n](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) ga[i] += factor * g[i];
  });
}

inline Var relu(const Var& a) {
  const std::int64_t n = a.size();
  Tensor out(a.shape());
  const double* pa = a.tensor().data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  detail::Node* an = a.node();
  return Var::make(std::move(out), {a}, [an, n](detail::Node& self) {
    // out > 0 exactly where in > 0, so the mask comes from our own value.
    const double* g = self.t.grad().data();
    const double* y = self.t.data();
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) {
      if (y[i] > 0.0) ga[i] += g[i];
    }
  });
}

/// Concatenation along `axis`; inputs must agree on every other axis.
inline Var concat(const std::vector<Var>& vs, int axis) {
  require(!vs.empty(), "concat: no inputs");
  const Shape& s0 = vs.front().shape();
  require(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: axis out of range");
  std::int64_t axis_total = 0;
  for (const Var& v : vs) {
    const Shape& s = v.shape();
    require(s.size() == s0.size(), "concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      require(static_cast<int>(d) == axis || s[d] == s0[d],
              "concat: shape mismatch on axis " + std::to_string(d));
    }
    axis_total += s[static_cast<std::size_t>(axis)];
  }
  Shape out_shape = s0;
  out_shape[static_cast<std::size_t>(axis)] = axis_total;

  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[static_cast<std::size_t>(d)];
  for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < s0.size(); ++d) inner *= s0[d];

  Tensor out(out_shape);
  double* po = out.data();
  const std::int64_t out_row = axis_total * inner;
  std::int64_t offset = 0;
  std::vector<std::int64_t> blocks;  // per input: axis extent * inner
  for (const Var& v : vs) {
    const std::int64_t block = v.shape()[static_cast<std::size_t>(axis)] * inner;
    const double* pv = v.tensor().data();
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy(pv + o * block, pv + (o + 1) * block, po + o * out_row + offset);
    }
    blocks.push_back(block);
    offset += block;
  }

  std::vector<detail::Node*> nodes;
  for (const Var& v : vs) nodes.push_back(v.node());
  return Var::make(std::move(out), vs,
                   [nodes, blocks, outer, out_row](detail::Node& self) {
                     const double* g = self.t.grad().data();
                     std::int64_t offset = 0;
                     for (std::size_t k = 0; k < nodes.size(); ++k) {
                       double* gp = nodes[k]->t.grad().data();
                       const std::int64_t block = blocks[k];
                       for (std::int64_t o = 0; o < outer; ++o) {
                         const double* src = g + o * out_row + offset;
                         double* dst = gp + o * block;
                         for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
                       }
                       offset += block;
                     }
                   });
}

/// Contiguous block [begin, end) of the first axis.
inline Var slice_axis0(const Var& a, std::int64_t begin, std::int64_t end) {
  const Shape& s = a.shape();
  require(begin >= 0 && begin < end && end <= s[0], "slice_axis0: range out of bounds");
  std::int64_t inner = 1;
  for (std::size_t d = 1; d < s.size(); ++d) inner *= s[d];
  Shape out_shape = s;
  out_shape[0] = end - begin;
  Tensor out(out_shape);
  std::copy(a.tensor().data() + begin * inner, a.tensor().data() + end * inner, out.data());
  detail::Node* an = a.node();
  const std::int64_t count = (end - begin) * inner;
  const std::int64_t shift = begin * inner;
  return Var::make(std::move(out), {a}, [an, count, shift](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data() + shift;
    for (std::int64_t i = 0; i < count; ++i) ga[i] += g[i];
  });
}

/// Elementwise mean of same-shape tensors (prototype vectors, group
/// interaction means).
inline Var mean_over_first_axis(const std::vector<Var>& vs) {
  require(!vs.empty(), "mean_over_first_axis: no inputs");
  const Shape& s0 = vs.front().shape();
  for (const Var& v : vs) {
    require(v.shape() == s0, "mean_over_first_axis: shape mismatch");
  }
  const std::int64_t n = vs.front().size();
  const double inv = 1.0 / static_cast<double>(vs.size());
  Tensor out(s0);
  double* po = out.data();
  for (const Var& v : vs) {
    const double* pv = v.tensor().data();
    for (std::int64_t i = 0; i < n; ++i) po[i] += pv[i];
  }
  for (std::int64_t i = 0; i < n; ++i) po[i] *= inv;
  MacCounter::add(static_cast<std::uint64_t>(n) * vs.size());
  std::vector<detail::Node*> nodes;
  for (const Var& v : vs) nodes.push_back(v.node());
  return Var::make(std::move(out), vs, [nodes, inv, n](detail::Node& self) {
    const double* g = self.t.grad().data();
    for (detail::Node* p : nodes) {
      double* gp = p->t.grad().data();
      for (std::int64_t i = 0; i < n; ++i) gp[i] += inv * g[i];
    }
  });
}

/// Mean of scalar Vars, summed around the first value so that identical
/// inputs average to themselves bitwise (a plain running sum rounds).
inline Var mean_scalars(const std::vector<Var>& vs) {
  require(!vs.empty(), "mean_scalars: no inputs");
  for (const Var& v : vs) require(v.tensor().is_scalar(), "mean_scalars: inputs must be scalars");
  const double v0 = vs.front().tensor()[0];
  double acc = 0.0;
  for (const Var& v : vs) acc += v.tensor()[0] - v0;
  const double inv = 1.0 / static_cast<double>(vs.size());
  MacCounter::add(vs.size());
  std::vector<detail::Node*> nodes;
  for (const Var& v : vs) nodes.push_back(v.node());
  return Var::make(Tensor::scalar(v0 + acc * inv), vs, [nodes, inv](detail::Node& self) {
    const double g = self.t.grad()[0] * inv;
    for (detail::Node* p : nodes) p->t.grad()[0] += g;
  });
}

/// Probability vector over a 1-D input, stabilised by subtracting the max.
inline Var softmax(const Var& a) {
  require(a.shape().size() == 1, "softmax: expects a 1-D input");
  const std::int64_t n = a.size();
  const double* pa = a.tensor().data();
  double m = pa[0];
  for (std::int64_t i = 1; i < n; ++i) m = std::max(m, pa[i]);
  Tensor out(a.shape());
  double* po = out.data();
  double z = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    po[i] = std::exp(pa[i] - m);
    z += po[i];
  }
  for (std::int64_t i = 0; i < n; ++i) po[i] /= z;
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* an = a.node();
  return Var::make(std::move(out), {a}, [an, n](detail::Node& self) {
    const double* g = self.t.grad().data();
    const double* y = self.t.data();
    double dot = 0.0;
    for (std::int64_t i = 0; i < n; ++i) dot += g[i] * y[i];
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) ga[i] += y[i] * (g[i] - dot);
  });
}

inline Var sum(const Var& a) {
  const std::int64_t n = a.size();
  const double* pa = a.tensor().data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += pa[i];
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* an = a.node();
  return Var::make(Tensor::scalar(acc), {a}, [an, n](detail::Node& self) {
    const double g = self.t.grad()[0];
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) ga[i] += g;
  });
}

inline Var squared_euclidean(const Var& a, const Var& b) {
  require(a.tensor().same_shape(b.tensor()), "squared_euclidean: shape mismatch");
  const std::int64_t n = a.size();
  const double* pa = a.tensor().data();
  const double* pb = b.tensor().data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* an = a.node();
  detail::Node* bn = b.node();
  return Var::make(Tensor::scalar(acc), {a, b}, [an, bn, n](detail::Node& self) {
    const double g = self.t.grad()[0];
    const double* pa = an->t.data();
    const double* pb = bn->t.data();
    double* ga = an->t.grad().data();
    double* gb = bn->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = 2.0 * g * (pa[i] - pb[i]);
      ga[i] += d;
      gb[i] -= d;
    }
  });
}

/// Plain Euclidean distance. The forward value is the exact root; the
/// derivative is damped near zero so coincident points stay finite.
inline Var euclidean(const Var& a, const Var& b) {
  Var sq = squared_euclidean(a, b);
  const double value = std::sqrt(sq.scalar_value());
  detail::Node* sn = sq.node();
  return Var::make(Tensor::scalar(value), {sq}, [sn](detail::Node& self) {
    const double g = self.t.grad()[0];
    const double sq_value = sn->t[0];
    sn->t.grad()[0] += g * 0.5 / std::sqrt(sq_value + 1e-12);
  });
}

inline Var transpose2d(const Var& a) {
  require(a.shape().size() == 2, "transpose2d: expects a 2-D input");
  const std::int64_t r = a.shape()[0];
  const std::int64_t c = a.shape()[1];
  Tensor out({c, r});
  const double* pa = a.tensor().data();
  double* po = out.data();
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < c; ++j) po[j * r + i] = pa[i * c + j];
  }
  detail::Node* an = a.node();
  return Var::make(std::move(out), {a}, [an, r, c](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < r; ++i) {
      for (std::int64_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
    }
  });
}

inline Var reshape(const Var& a, Shape shape) {
  require(shape_size(shape) == a.size(), "reshape: element count mismatch");
  Tensor out(std::move(shape), a.tensor().vec());
  detail::Node* an = a.node();
  const std::int64_t n = a.size();
  return Var::make(std::move(out), {a}, [an, n](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data();
    for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
  });
}

/// C×h×w -> C×w, averaging over the height axis.
inline Var mean_over_height(const Var& a) {
  require(a.shape().size() == 3, "mean_over_height: expects a 3-D input");
  const std::int64_t channels = a.shape()[0];
  const std::int64_t h = a.shape()[1];
  const std::int64_t w = a.shape()[2];
  const double inv = 1.0 / static_cast<double>(h);
  Tensor out({channels, w});
  const double* pa = a.tensor().data();
  double* po = out.data();
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t y = 0; y < h; ++y) {
      const double* row = pa + (c * h + y) * w;
      double* dst = po + c * w;
      for (std::int64_t x = 0; x < w; ++x) dst[x] += row[x];
    }
  }
  for (std::int64_t i = 0; i < channels * w; ++i) po[i] *= inv;
  MacCounter::add(static_cast<std::uint64_t>(channels * h * w));
  detail::Node* an = a.node();
  return Var::make(std::move(out), {a}, [an, channels, h, w, inv](detail::Node& self) {
    const double* g = self.t.grad().data();
    double* ga = an->t.grad().data();
    for (std::int64_t c = 0; c < channels; ++c) {
      const double* src = g + c * w;
      for (std::int64_t y = 0; y < h; ++y) {
        double* row = ga + (c * h + y) * w;
        for (std::int64_t x = 0; x < w; ++x) row[x] += inv * src[x];
      }
    }
  });
}

/// Packs scalar Vars into a 1-D vector (e.g. distances to prototypes).
inline Var stack_scalars(const std::vector<Var>& vs) {
  require(!vs.empty(), "stack_scalars: no inputs");
  const std::int64_t n = static_cast<std::int64_t>(vs.size());
  Tensor out({n});
  for (std::int64_t i = 0; i < n; ++i) {
    require(vs[static_cast<std::size_t>(i)].tensor().is_scalar(),
            "stack_scalars: inputs must be scalars");
    out[i] = vs[static_cast<std::size_t>(i)].tensor()[0];
  }
  std::vector<detail::Node*> nodes;
  for (const Var& v : vs) nodes.push_back(v.node());
  return Var::make(std::move(out), vs, [nodes](detail::Node& self) {
    const double* g = self.t.grad().data();
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i]->t.grad()[0] += g[i];
  });
}

/// Negative log probability of entry `true_index` under a softmax over
/// negated distances: d[i] + log(sum_j exp(-d[j])). Evaluated through a
/// shifted log-sum-exp, so large distance gaps cannot overflow.
inline Var nll_from_distances(const Var& dists, std::int64_t true_index) {
  require(dists.shape().size() == 1, "nll_from_distances: expects a 1-D input");
  const std::int64_t n = dists.size();
  require(true_index >= 0 && true_index < n, "nll_from_distances: index out of range");
  const double* d = dists.tensor().data();
  double m = -d[0];
  for (std::int64_t i = 1; i < n; ++i) m = std::max(m, -d[i]);
  std::vector<double> p(static_cast<std::size_t>(n));
  double z = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(-d[i] - m);
    z += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= z;
  // (d_true + m) first: when every distance ties, it cancels exactly and
  // the loss is bitwise log(N)
  const double loss = (d[true_index] + m) + std::log(z);
  MacCounter::add(static_cast<std::uint64_t>(n));
  detail::Node* dn = dists.node();
  return Var::make(Tensor::scalar(loss), {dists},
                   [dn, p = std::move(p), true_index, n](detail::Node& self) {
                     const double g = self.t.grad()[0];
                     double* gd = dn->t.grad().data();
                     for (std::int64_t i = 0; i < n; ++i) {
                       double v = -p[static_cast<std::size_t>(i)];
                       if (i == true_index) v += 1.0;
                       gd[i] += g * v;
                     }
                   });
}

}  // namespace fgfi

#endif  // FGFI_AUTODIFF_HPP
