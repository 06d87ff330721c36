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

#include "hat/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hat {

void TrainConfig::validate() const {
  if (!(mtl_weight >= 0)) throw ConfigError("train.mtl_weight must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("train.momentum must be in [0,1)");
  if (!(clip_norm >= 0)) throw ConfigError("train.clip_norm must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (lm_order < 1 || lm_order > 4) throw ConfigError("train.lm_order must be in 1..4");
  if (!(lm_add_k > 0)) throw ConfigError("train.lm_add_k must be > 0");
  for (int c : context_grid)
    if (c < kInfiniteContext) throw ConfigError("train.context_grid entries must be >= 0 or inf");
}

void Config::validate() const {
  const auto& m = model;
  if (m.vocab < 1 || m.feat_dim < 1 || m.embed_dim < 1 || m.enc_hidden < 1 ||
      m.dec_hidden < 1 || m.joint_dim < 1)
    throw ConfigError("model dimensions must be >= 1");
  if (m.context < kInfiniteContext) throw ConfigError("model.context must be >= 0 or inf");
  if (!(m.init_scale > 0)) throw ConfigError("model.init_scale must be > 0");
  train.validate();
  decode.validate();
  try {
    task.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
ConfigKey int_key(std::string name, std::string help, T Config::*section, int T::*field) {
  return {name, std::move(help),
          [=](Config& c, const std::string& v) { (c.*section).*field = parse_int<int>(name, v); },
          [=](const Config& c) { return std::to_string((c.*section).*field); }};
}

template <class T>
ConfigKey seed_key(std::string name, std::string help, T Config::*section,
                   std::uint64_t T::*field) {
  return {name, std::move(help),
          [=](Config& c, const std::string& v) {
            (c.*section).*field = parse_int<std::uint64_t>(name, v);
          },
          [=](const Config& c) { return std::to_string((c.*section).*field); }};
}

template <class T>
ConfigKey double_key(std::string name, std::string help, T Config::*section,
                     double T::*field) {
  return {name, std::move(help),
          [=](Config& c, const std::string& v) { (c.*section).*field = parse_double(name, v); },
          [=](const Config& c) { return format_double((c.*section).*field); }};
}

std::vector<ConfigKey> build_keys() {
  using C = Config;
  std::vector<ConfigKey> keys = {
      int_key("model.vocab", "label alphabet size |V|", &C::model, &ModelConfig::vocab),
      int_key("model.feat_dim", "input feature dimension", &C::model, &ModelConfig::feat_dim),
      int_key("model.embed_dim", "label embedding size", &C::model, &ModelConfig::embed_dim),
      int_key("model.enc_hidden", "encoder state size", &C::model, &ModelConfig::enc_hidden),
      int_key("model.dec_hidden", "decoder state size", &C::model, &ModelConfig::dec_hidden),
      int_key("model.joint_dim", "joint dimension D", &C::model, &ModelConfig::joint_dim),
      {"model.context", "decoder label history: 0,1,2,... or inf",
       [](C& c, const std::string& v) { c.model.context = parse_context(v); },
       [](const C& c) { return format_context(c.model.context); }},
      {"model.activation", "joint activation: tanh or identity",
       [](C& c, const std::string& v) {
         if (v == "tanh") c.model.activation = JointActivation::kTanh;
         else if (v == "identity") c.model.activation = JointActivation::kIdentity;
         else throw ConfigError("model.activation: expected tanh or identity, got '" + v + "'");
       },
       [](const C& c) {
         return std::string(c.model.activation == JointActivation::kTanh ? "tanh" : "identity");
       }},
      seed_key("model.seed", "initialisation seed", &C::model, &ModelConfig::seed),
      double_key("model.init_scale", "uniform initialisation half-width", &C::model,
                 &ModelConfig::init_scale),

      {"train.loss", "hat, rnnt or ctc",
       [](C& c, const std::string& v) { c.train.loss = parse_grid_kind(v); },
       [](const C& c) { return std::string(to_string(c.train.loss)); }},
      {"train.mtl", "add the weighted prior loss",
       [](C& c, const std::string& v) { c.train.mtl = parse_bool("train.mtl", v); },
       [](const C& c) { return std::string(c.train.mtl ? "true" : "false"); }},
      double_key("train.mtl_weight", "prior loss weight", &C::train, &TrainConfig::mtl_weight),
      double_key("train.learning_rate", "SGD step size", &C::train,
                 &TrainConfig::learning_rate),
      {"train.optimizer", "sgd or adam",
       [](C& c, const std::string& v) {
         if (v == "sgd") c.train.optimizer = Optimizer::kSgd;
         else if (v == "adam") c.train.optimizer = Optimizer::kAdam;
         else throw ConfigError("train.optimizer: expected sgd or adam, got '" + v + "'");
       },
       [](const C& c) { return std::string(c.train.optimizer == Optimizer::kSgd ? "sgd" : "adam"); }},
      double_key("train.momentum", "heavy-ball momentum", &C::train, &TrainConfig::momentum),
      double_key("train.clip_norm", "global gradient norm cap, 0 disables", &C::train,
                 &TrainConfig::clip_norm),
      int_key("train.batch_size", "utterances per step", &C::train, &TrainConfig::batch_size),
      int_key("train.epochs", "passes over the training set", &C::train, &TrainConfig::epochs),
      seed_key("train.seed", "shuffling seed", &C::train, &TrainConfig::seed),
      int_key("train.lm_order", "n-gram order", &C::train, &TrainConfig::lm_order),
      double_key("train.lm_add_k", "n-gram add-k constant", &C::train, &TrainConfig::lm_add_k),
      {"train.context_grid", "comma-separated contexts for the context table",
       [](C& c, const std::string& v) {
         c.train.context_grid.clear();
         for (const auto& item : split_list(v)) c.train.context_grid.push_back(parse_context(item));
       },
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.train.context_grid.size(); ++i)
           s += (i ? "," : "") + format_context(c.train.context_grid[i]);
         return s;
       }},

      double_key("decode.lambda1", "posterior weight", &C::decode, &DecodeConfig::lambda1),
      double_key("decode.lambda2", "ILM weight", &C::decode, &DecodeConfig::lambda2),
      int_key("decode.beam", "beam width", &C::decode, &DecodeConfig::beam_width),
      int_key("decode.max_labels_per_frame", "label expansions per frame", &C::decode,
              &DecodeConfig::max_labels_per_frame),
      int_key("decode.max_output_labels", "output length cap, 0 disables", &C::decode,
              &DecodeConfig::max_output_labels),
      int_key("decode.nbest", "hypotheses kept in the n-best list", &C::decode,
              &DecodeConfig::nbest),
      double_key("decode.blank_scale", "blank rescaling for fused decoding", &C::decode,
                 &DecodeConfig::blank_scale),
      double_key("decode.coverage", "per-label reward for fused decoding", &C::decode,
                 &DecodeConfig::coverage),
      {"decode.lm_mode", "label or word",
       [](C& c, const std::string& v) {
         if (v == "label") c.decode.mode = LmMode::kLabel;
         else if (v == "word") c.decode.mode = LmMode::kWord;
         else throw ConfigError("decode.lm_mode: expected label or word, got '" + v + "'");
       },
       [](const C& c) { return std::string(c.decode.mode == LmMode::kLabel ? "label" : "word"); }},
      {"decode.merge", "recombination: logsumexp or max",
       [](C& c, const std::string& v) {
         if (v == "logsumexp") c.decode.merge = MergeMode::kLogSumExp;
         else if (v == "max") c.decode.merge = MergeMode::kMax;
         else throw ConfigError("decode.merge: expected logsumexp or max, got '" + v + "'");
       },
       [](const C& c) {
         return std::string(c.decode.merge == MergeMode::kLogSumExp ? "logsumexp" : "max");
       }},
      {"decode.lambda2_sweep", "comma-separated ILM weights; empty uses decode.lambda2",
       [](C& c, const std::string& v) {
         c.lambda2_sweep.clear();
         for (const auto& item : split_list(v))
           c.lambda2_sweep.push_back(parse_double("decode.lambda2_sweep", item));
       },
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.lambda2_sweep.size(); ++i)
           s += (i ? "," : "") + format_double(c.lambda2_sweep[i]);
         return s;
       }},

      int_key("task.vocab", "label alphabet size", &C::task, &SyntheticTaskSpec::vocab),
      int_key("task.words", "lexicon size", &C::task, &SyntheticTaskSpec::num_words),
      int_key("task.min_word_len", "shortest pronunciation", &C::task,
              &SyntheticTaskSpec::min_word_len),
      int_key("task.max_word_len", "longest pronunciation", &C::task,
              &SyntheticTaskSpec::max_word_len),
      int_key("task.min_duration", "shortest label duration in frames", &C::task,
              &SyntheticTaskSpec::min_duration),
      int_key("task.max_duration", "longest label duration in frames", &C::task,
              &SyntheticTaskSpec::max_duration),
      int_key("task.feat_dim", "feature dimension", &C::task, &SyntheticTaskSpec::feat_dim),
      double_key("task.noise_std", "feature noise standard deviation", &C::task,
                 &SyntheticTaskSpec::noise_std),
      int_key("task.train_utts", "training utterances", &C::task, &SyntheticTaskSpec::train_utts),
      int_key("task.test_utts", "test utterances", &C::task, &SyntheticTaskSpec::test_utts),
      int_key("task.lm_sentences", "text-only LM sentences", &C::task,
              &SyntheticTaskSpec::lm_sentences),
      int_key("task.max_sentence_words", "sentence length cap", &C::task,
              &SyntheticTaskSpec::max_sentence_words),
      double_key("task.stop_prob", "per-word sentence stop probability", &C::task,
                 &SyntheticTaskSpec::stop_prob),
      double_key("task.text_bias", "text grammar mixing weight", &C::task,
                 &SyntheticTaskSpec::text_bias),
      seed_key("task.seed", "generation seed", &C::task, &SyntheticTaskSpec::seed),
  };
  std::sort(keys.begin(), keys.end(),
            [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
  return keys;
}

const ConfigKey& find_key(const std::string& key) {
  const auto& keys = config_keys();
  auto it = std::lower_bound(keys.begin(), keys.end(), key,
                             [](const ConfigKey& k, const std::string& n) { return k.name < n; });
  if (it == keys.end() || it->name != key) throw ConfigError("unknown config key '" + key + "'");
  return *it;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, value);
}

std::string get_config_value(const Config& config, const std::string& key) {
  return find_key(key).get(config);
}

void read_config(std::istream& in, Config& config, const std::string& source) {
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
    try {
      set_config_value(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void read_config_file(const std::string& path, Config& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  read_config(in, config, path);
}

void write_config(std::ostream& out, const Config& config) {
  for (const auto& k : config_keys()) out << k.name << '=' << k.get(config) << '\n';
}

GridKind parse_grid_kind(const std::string& text) {
  if (text == "hat") return GridKind::kHat;
  if (text == "rnnt") return GridKind::kRnnt;
  if (text == "ctc") return GridKind::kCtc;
  throw ConfigError("expected hat, rnnt or ctc, got '" + text + "'");
}

std::string format_context(int context) {
  return context == kInfiniteContext ? "inf" : std::to_string(context);
}

int parse_context(const std::string& text) {
  if (text == "inf") return kInfiniteContext;
  const int c = parse_int<int>("context", text);
  if (c < 0) throw ConfigError("context must be >= 0 or inf, got '" + text + "'");
  return c;
}

}  // namespace hat
