// Copyright 2026 The CLDG Authors.
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

// Umbrella header.

#ifndef CLDG_CLDG_HPP_
#define CLDG_CLDG_HPP_

#include "cldg/adam.hpp"
#include "cldg/checkpoint.hpp"
#include "cldg/error.hpp"
#include "cldg/gradcheck.hpp"
#include "cldg/graph.hpp"
#include "cldg/invariance.hpp"
#include "cldg/io.hpp"
#include "cldg/kernels.hpp"
#include "cldg/linear_probe.hpp"
#include "cldg/loss.hpp"
#include "cldg/matrix.hpp"
#include "cldg/metrics.hpp"
#include "cldg/model.hpp"
#include "cldg/rng.hpp"
#include "cldg/sampler.hpp"
#include "cldg/split.hpp"
#include "cldg/synthetic.hpp"
#include "cldg/trainer.hpp"

#define CLDG_VERSION "0.1.0"

#endif  // CLDG_CLDG_HPP_
