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

#ifndef FGFI_FGFI_HPP
#define FGFI_FGFI_HPP

#include "fgfi/autodiff.hpp"
#include "fgfi/blstm.hpp"
#include "fgfi/checkpoint.hpp"
#include "fgfi/complexity.hpp"
#include "fgfi/conv.hpp"
#include "fgfi/datagen.hpp"
#include "fgfi/episodic.hpp"
#include "fgfi/error.hpp"
#include "fgfi/feature_io.hpp"
#include "fgfi/frontend.hpp"
#include "fgfi/grad_check.hpp"
#include "fgfi/macs.hpp"
#include "fgfi/metrics.hpp"
#include "fgfi/model.hpp"
#include "fgfi/rng.hpp"
#include "fgfi/run_config.hpp"
#include "fgfi/stats_pool.hpp"
#include "fgfi/tensor.hpp"
#include "fgfi/wav.hpp"

#endif  // FGFI_FGFI_HPP
