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

// Flat key=value configuration with model., train., decode. and task.
// sections. Lines starting with '#' are comments. Unknown keys are errors.

#pragma once

#include "hat/data.hpp"
#include "hat/decoder.hpp"
#include "hat/network.hpp"
#include "hat/posterior.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace hat {

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  GridKind loss = GridKind::kHat;
  bool mtl = false;
  double mtl_weight = 0.1;  // applied only when mtl is set
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::kAdam;
  double momentum = 0.0;  // SGD heavy-ball coefficient in [0, 1)
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t seed = 47;  // shuffling
  int lm_order = 3;
  double lm_add_k = 0.1;
  std::vector<int> context_grid = {0, 1, 2, 4, kInfiniteContext};

  double effective_mtl_weight() const { return mtl ? mtl_weight : 0.0; }
  void validate() const;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  std::vector<double> lambda2_sweep = {0.0, 0.25, 0.5, 0.75, 0.95, 1.1};
  SyntheticTaskSpec task;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

/// Every recognised key, sorted by name.
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError for an unknown key or a malformed value.
void set_config_value(Config& config, const std::string& key,
                      const std::string& value);
std::string get_config_value(const Config& config, const std::string& key);

/// Applies every assignment in the stream on top of `config`.
void read_config(std::istream& in, Config& config,
                 const std::string& source = "<config>");
void read_config_file(const std::string& path, Config& config);
/// Writes all keys; read_config of the output reproduces the values.
void write_config(std::ostream& out, const Config& config);

GridKind parse_grid_kind(const std::string& text);
std::string format_context(int context);
int parse_context(const std::string& text);

}  // namespace hat
