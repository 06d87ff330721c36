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

// Command-line front end: generate, train, train-lm, decode, eval, diagnose
// and selftest. Every config key is also a flag (--model.joint_dim 64);
// flags override --config files.
//
// Exit codes: 0 success, 1 other failure, 2 configuration or usage error,
// 3 file or parse error, 4 numeric failure.

#include "hat/config.hpp"
#include "hat/pipeline.hpp"
#include "hat/selftest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kParse = 3, kNumeric = 4 };

struct Options {
  std::vector<std::string> config_files;
  std::map<std::string, std::string> overrides;
  std::string task_dir, out, checkpoint, dataset = "test", lm, train_log;
  bool train_contexts = false;
  std::uint64_t selftest_seed = 47;
};

hat::Config build_config(const Options& opts) {
  hat::Config config;
  for (const auto& path : opts.config_files) hat::read_config_file(path, config);
  for (const auto& [key, value] : opts.overrides) hat::set_config_value(config, key, value);
  config.validate();
  return config;
}

int run(int argc, char** argv) {
  CLI::App app{"Hybrid autoregressive transducer toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config_files, "key=value config file (repeatable)")
      ->check(CLI::ExistingFile);
  for (const auto& key : hat::config_keys()) {
    app.add_option_function<std::string>(
           "--" + key.name,
           [&opts, name = key.name](const std::string& v) { opts.overrides[name] = v; },
           key.help)
        ->group("Config keys");
  }

  auto* gen = app.add_subcommand("generate", "write a synthetic task directory");
  gen->add_option("--out", opts.out, "task directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a task's training set");
  train->add_option("--task", opts.task_dir, "task directory")->required();
  train->add_option("--out", opts.out, "output directory")->required();

  auto* train_lm = app.add_subcommand("train-lm", "train an n-gram LM on the task's text corpus");
  train_lm->add_option("--task", opts.task_dir, "task directory")->required();
  train_lm->add_option("--out", opts.out, "ARPA output file")->required();

  auto* decode = app.add_subcommand("decode", "beam-search a dataset and report WER");
  decode->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
  decode->add_option("--task", opts.task_dir, "task directory")->required();
  decode->add_option("--dataset", opts.dataset, "dataset subdirectory of the task");
  decode->add_option("--lm", opts.lm, "ARPA LM (omit to decode without an LM)");
  decode->add_option("--out", opts.out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "mean loss and prior cost on a dataset");
  eval->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
  eval->add_option("--task", opts.task_dir, "task directory")->required();
  eval->add_option("--dataset", opts.dataset, "dataset subdirectory of the task");

  auto* diagnose = app.add_subcommand("diagnose", "lambda2 sweep, linearity, prior cost, contexts");
  diagnose->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
  diagnose->add_option("--task", opts.task_dir, "task directory")->required();
  diagnose->add_option("--dataset", opts.dataset, "dataset subdirectory of the task");
  diagnose->add_option("--lm", opts.lm, "ARPA LM");
  diagnose->add_option("--train-log", opts.train_log, "training log for the prior-cost series");
  diagnose->add_option("--out", opts.out, "output directory")->required();
  diagnose->add_flag("--train-contexts", opts.train_contexts,
                     "train one model per train.context_grid entry");

  auto* selftest = app.add_subcommand("selftest", "run the oracle and property checks");
  selftest->add_option("--seed", opts.selftest_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*selftest) return hat::run_selftest(std::cout, opts.selftest_seed) ? kOk : kFailure;

  const hat::Config config = build_config(opts);
  if (*gen) {
    hat::run_generate(config, opts.out);
    std::cout << "wrote task to " << opts.out << '\n';
  } else if (*train) {
    const auto result = hat::run_train(config, opts.task_dir, opts.out);
    if (!result.epochs.empty()) {
      const auto& e = result.epochs.back();
      std::printf("epoch %d mean_loss %.10g prior_cost %.10g\n", e.epoch, e.mean_loss,
                  e.prior_cost);
    }
  } else if (*train_lm) {
    hat::run_train_lm(config, opts.task_dir, opts.out);
    std::cout << "wrote " << opts.out << '\n';
  } else if (*decode) {
    const auto r = hat::run_decode(
        config, {opts.checkpoint, opts.task_dir, opts.dataset, opts.lm, opts.out});
    hat::write_wer_report(std::cout, r, config.decode.mode);
  } else if (*eval) {
    hat::run_eval(opts.checkpoint, opts.task_dir, opts.dataset, std::cout);
  } else if (*diagnose) {
    hat::run_diagnose(config, {opts.checkpoint, opts.task_dir, opts.dataset, opts.lm,
                               opts.train_log, opts.out, opts.train_contexts});
    std::cout << "wrote diagnostics to " << opts.out << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const hat::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const hat::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
