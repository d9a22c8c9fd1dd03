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

#ifndef FGFI_MACS_HPP
#define FGFI_MACS_HPP

#include <cstdint>

namespace fgfi {

// Multiply-accumulate instrumentation. Forward kernels report their cost
// here; an active MacScope collects it. The counting convention is shared
// with the analytical accountant in complexity.hpp:
//   * convolutions: one MAC per kernel tap per output element, taps that
//     fall on zero padding included (the dense definition);
//   * recurrent gates: matrix-vector MACs only;
//   * elementwise add/scale: one MAC per output element;
//   * reductions (means, pooled statistics): one MAC per input element
//     consumed per statistic;
//   * bias additions, nonlinearities, and pure data movement
//     (concat/reshape/transpose/slice): zero.
class MacCounter {
 public:
  static void add(std::uint64_t n) {
    if (sink_) *sink_ += n;
  }

  /// RAII collection scope. Scopes nest; each op is charged to the
  /// innermost active scope only.
  class Scope {
   public:
    Scope() : prev_(sink_) { sink_ = &count_; }
    ~Scope() { sink_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    std::uint64_t count() const { return count_; }

   private:
    std::uint64_t count_ = 0;
    std::uint64_t* prev_;
  };

 private:
  static thread_local std::uint64_t* sink_;
};

inline thread_local std::uint64_t* MacCounter::sink_ = nullptr;

}  // namespace fgfi

#endif  // FGFI_MACS_HPP
