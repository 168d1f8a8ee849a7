/* Copyright 2026 The crnn-lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "crnn/experiment.hpp"
#include "crnn/gradcheck_suite.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  long seed = -1;
  std::string task;
  std::string init;
};

crnn::Config compose_config(const CommonOpts& opts) {
  crnn::Config cfg;
  if (!opts.config_path.empty()) cfg = crnn::Config::parse_file(opts.config_path);
  if (!opts.task.empty()) cfg.set("task", opts.task);
  if (!opts.init.empty()) cfg.set("init.strategy", opts.init);
  if (opts.seed >= 0) cfg.set("seed", std::to_string(opts.seed));
  for (const std::string& kv : opts.overrides) cfg.set_override(kv);
  cfg.validate_keys(crnn::allowed_config_keys());
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out) {
  cmd->add_option("--config", opts.config_path, "config file (key = value with [sections])");
  cmd->add_option("--seed", opts.seed, "run seed (overrides config)");
  cmd->add_option("--set", opts.overrides, "override, dotted key=value (repeatable)");
  cmd->add_option("--task", opts.task, "task: art | lcd (overrides config)");
  if (with_out) cmd->add_option("--out", opts.out_dir, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual-rnn laboratory: datasets, training, evaluation, generation"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, eval_opts, generate_opts;
  std::string checkpoint_path, data_path, split = "valid";
  double gen_x0 = 3.0, gen_period = 2.0;
  long gen_samples = 10;

  CLI::App* gen = app.add_subcommand("gen-data", "generate ART or LCD dataset files");
  add_common(gen, gen_opts, true);

  CLI::App* train = app.add_subcommand("train", "train a model; writes metrics + checkpoint");
  add_common(train, train_opts, true);
  train->add_option("--init", train_opts.init,
                    "init strategy: zero | free | learned | learned-distribution");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(eval, eval_opts, false);
  eval->add_option("--out", eval_opts.out_dir, "output directory (optional)");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--data", data_path, "dataset file")->required();
  eval->add_option("--split", split, "split label for the record (default: valid)");

  CLI::App* generate = app.add_subcommand("generate", "free-running LCD trajectories from a checkpoint");
  add_common(generate, generate_opts, true);
  generate->add_option("--checkpoint", checkpoint_path, "trained LCD checkpoint")->required();
  generate->add_option("--x0", gen_x0, "initial value x0");
  generate->add_option("--period", gen_period, "period T");
  generate->add_option("--samples", gen_samples, "number of sampled initial hidden states");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of all cells, heads and primitives");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      crnn::run_gen_data(compose_config(gen_opts), gen_opts.out_dir);
      return 0;
    }
    if (train->parsed()) {
      crnn::Config cfg = compose_config(train_opts);
      crnn::TrainRunResult result = crnn::run_train(cfg, train_opts.out_dir);
      if (!result.metrics.empty()) {
        const crnn::MetricsRecord& last = result.metrics.back();
        std::cout << crnn::metrics_json(last, cfg.get_str("task", "") == "art") << "\n";
      }
      return 0;
    }
    if (eval->parsed()) {
      crnn::Config cfg = compose_config(eval_opts);
      crnn::Checkpoint ck = crnn::Checkpoint::load(checkpoint_path);
      if (ck.config_hash != crnn::resolve_config(cfg).hash_hex())
        std::cerr << "warning: checkpoint config hash " << ck.config_hash
                  << " differs from resolved config hash\n";
      crnn::MetricsRecord r = crnn::run_eval(cfg, checkpoint_path, data_path, split);
      std::string line = crnn::metrics_json(r, cfg.get_str("task", "") == "art");
      std::cout << line << "\n";
      if (!eval_opts.out_dir.empty()) {
        std::filesystem::create_directories(eval_opts.out_dir);
        crnn::write_text(eval_opts.out_dir + "/eval.json", line + "\n");
      }
      return 0;
    }
    if (generate->parsed()) {
      crnn::Config cfg = compose_config(generate_opts);
      uint64_t seed = generate_opts.seed >= 0 ? static_cast<uint64_t>(generate_opts.seed) : 0;
      auto trajectories =
          crnn::run_generate(cfg, checkpoint_path, gen_x0, gen_period, gen_samples, seed);
      std::filesystem::create_directories(generate_opts.out_dir);
      crnn::write_trajectories_csv(generate_opts.out_dir + "/samples.csv", trajectories);
      crnn::write_text(generate_opts.out_dir + "/config.resolved",
                       crnn::resolve_config(cfg).snapshot());
      return 0;
    }
    if (gradcheck->parsed()) {
      crnn::GradCheckReport report = crnn::full_gradient_suite(1e-4);
      for (const crnn::GradCheckEntry& e : report.entries)
        std::printf("%-45s max_rel_err=%.3e  %s\n", e.name.c_str(), e.max_rel_err,
                    e.pass ? "pass" : "FAIL");
      std::printf("gradcheck: %s (tolerance %.0e)\n", report.all_pass ? "all pass" : "FAILED",
                  report.tolerance);
      return report.all_pass ? 0 : 1;
    }
  } catch (const crnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
