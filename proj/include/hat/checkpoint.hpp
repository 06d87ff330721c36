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

// Checkpoint format: a text header followed by raw parameters.
//
//   hat-checkpoint 1
//   # train.loss=hat model.activation=tanh model.context=inf ...
//   <tensor name> <rows> <cols>      one line per tensor
//   <empty line>
//   little-endian float64 values, tensor by tensor, column-major

#pragma once

#include "hat/network.hpp"
#include "hat/posterior.hpp"

#include <iosfwd>
#include <string>

namespace hat {

struct Checkpoint {
  ModelParams params;
  GridKind kind = GridKind::kHat;  // loss the parameters were trained with
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<checkpoint>");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hat
