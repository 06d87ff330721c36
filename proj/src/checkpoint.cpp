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

#include "hat/checkpoint.hpp"

#include "binary_io.hpp"
#include "hat/config.hpp"

#include <fstream>
#include <sstream>

namespace hat {

namespace {

constexpr const char* kMagic = "hat-checkpoint 1";

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelParams& params = ckpt.params;
  Config c;
  c.model = params.config;
  out << kMagic << "\n# train.loss=" << to_string(ckpt.kind);
  for (const auto& k : config_keys())
    if (k.name.rfind("model.", 0) == 0) out << ' ' << k.name << '=' << k.get(c);
  out << '\n';
  const auto tensors = params.tensors();
  for (const auto& t : tensors) out << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
  out << '\n';
  for (const auto& t : tensors)
    for (Eigen::Index i = 0; i < t.size(); ++i) detail::put_f64(out, t.data[i]);
  if (!out) throw ParseError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw ParseError(source + ": not a checkpoint (bad magic line)");
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw ParseError(source + ": missing model line");
  Config c;
  std::istringstream model_line(line.substr(1));
  for (std::string kv; model_line >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError(source + ": malformed model entry '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (key.rfind("model.", 0) != 0 && key != "train.loss")
      throw ParseError(source + ": unexpected key '" + key + "' in model line");
    try {
      set_config_value(c, key, kv.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(source + ": " + e.what());
    }
  }
  Checkpoint ckpt{ModelParams::zeros(c.model), c.train.loss};
  ModelParams& params = ckpt.params;
  auto tensors = params.tensors();
  std::size_t next = 0;
  int line_no = 2;
  while (std::getline(in, line) && !line.empty()) {
    ++line_no;
    std::istringstream ss(line);
    std::string name;
    Eigen::Index rows = -1, cols = -1;
    if (!(ss >> name >> rows >> cols))
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 'name rows cols'");
    if (next >= tensors.size())
      throw ParseError(source + ":" + std::to_string(line_no) + ": unexpected tensor " + name);
    const auto& t = tensors[next++];
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + t.name + " " +
                       std::to_string(t.rows) + " " + std::to_string(t.cols) + ", got " + line);
  }
  if (next != tensors.size()) throw ParseError(source + ": missing tensors in header");
  for (auto& t : tensors)
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = detail::get_f64(in, source);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError(source + ": trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return read_checkpoint(in, path);
}

}  // namespace hat
