// Copyright 2026 The hatlab Authors. All Rights Reserved.
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

// Quick oracle and property checks on seeded random models. Output is one
// line per check and contains no timing, so repeated runs are identical.

#pragma once

#include "hat/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

namespace hat {

struct SelftestCheck {
  std::string name;
  double value = 0.0;      // worst observed error
  double tolerance = 0.0;  // pass when value <= tolerance
  bool passed() const { return value <= tolerance; }
};

/// Small model with weights uniform on [-scale, scale], seeded.
ModelParams random_small_model(std::uint64_t seed, int vocab, int feat_dim = 3,
                               int context = kInfiniteContext, double scale = 0.8);
Matrix random_features(std::mt19937_64& gen, int frames, int feat_dim);
LabelSeq random_labels(std::mt19937_64& gen, int length, int vocab);

/// Runs every check, writes `PASS|FAIL name value tolerance` lines and a
/// summary. Returns true when all checks pass.
bool run_selftest(std::ostream& out, std::uint64_t seed = 47);

}  // namespace hat
