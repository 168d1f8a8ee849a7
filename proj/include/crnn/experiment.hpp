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

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "crnn/checkpoint.hpp"
#include "crnn/config.hpp"
#include "crnn/train.hpp"

namespace crnn {

inline const std::set<std::string>& allowed_config_keys() {
  static const std::set<std::string> keys = {
      "task",
      "seed",
      "model.hidden",
      "model.embedding",
      "model.ctx_hidden",
      "model.fw_lambda",
      "model.fw_eta",
      "model.fw_steps",
      "init.strategy",
      "init.noise_std",
      "init.sigma_init",
      "train.batch_size",
      "train.epochs",
      "train.lr",
      "train.eval_every",
      "train.grad_clip",
      "data.train_path",
      "data.valid_path",
      "data.k",
      "data.n_train",
      "data.n_valid",
      "data.t_f",
      "data.n_per_period_train",
      "data.n_per_period_valid",
      "data.periods_train",
      "data.periods_valid",
  };
  return keys;
}

inline InitKind parse_init_kind(const std::string& s) {
  if (s == "zero") return InitKind::kZero;
  if (s == "free") return InitKind::kFreeVariable;
  if (s == "learned") return InitKind::kContextual;
  if (s == "learned-distribution") return InitKind::kContextualStochastic;
  throw ConfigError("init.strategy must be one of zero|free|learned|learned-distribution, got '" +
                    s + "'");
}

inline std::vector<double> parse_period_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw ConfigError("empty period list: '" + s + "'");
  return out;
}

inline std::string require_task(const Config& cfg) {
  std::string task = cfg.require_str("task");
  if (task != "art" && task != "lcd")
    throw ConfigError("task must be 'art' or 'lcd', got '" + task + "'");
  return task;
}

/// Fills every effective key with its default so the snapshot written next
/// to the outputs reproduces the run exactly.
inline Config resolve_config(const Config& user) {
  user.validate_keys(allowed_config_keys());
  std::string task = require_task(user);
  Config r = user;
  auto def = [&](const std::string& key, const std::string& value) {
    if (!r.has(key)) r.set(key, value);
  };
  def("seed", "0");
  def("init.strategy", "zero");
  def("init.noise_std", "0");
  def("init.sigma_init", "-3");
  def("train.batch_size", "128");
  def("train.eval_every", "1");
  def("train.grad_clip", "0");
  if (task == "art") {
    def("model.hidden", "50");
    def("model.embedding", "64");
    def("model.fw_lambda", "0.95");
    def("model.fw_eta", "0.5");
    def("model.fw_steps", "1");
    def("train.epochs", "200");
    def("train.lr", "0.001");
    def("data.k", "4");
    def("data.n_train", "100000");
    def("data.n_valid", "20000");
  } else {
    def("model.hidden", "128");
    def("model.ctx_hidden", "50");
    def("train.epochs", "65");
    def("train.lr", "0.0002");
    def("data.t_f", "25");
    def("data.periods_train", "0.5,1.5,2.5,3.5,4.5");
    def("data.periods_valid", "1.0,2.0,3.0,4.0");
    def("data.n_per_period_train", "1000");
    def("data.n_per_period_valid", "500");
  }
  parse_init_kind(r.get_str("init.strategy", "zero"));  // name must be valid
  return r;
}

inline TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.seed = static_cast<uint64_t>(cfg.get_long("seed", 0));
  t.batch_size = cfg.get_long("train.batch_size", 128);
  t.epochs = cfg.get_long("train.epochs", 1);
  t.eval_every = cfg.get_long("train.eval_every", 1);
  t.lr = cfg.get_double("train.lr", 0.001);
  t.grad_clip = cfg.get_double("train.grad_clip", 0.0);
  return t;
}

inline ArtModelConfig art_model_config_from(const Config& cfg) {
  ArtModelConfig m;
  m.hidden = cfg.get_long("model.hidden", 50);
  m.embedding_dim = cfg.get_long("model.embedding", 64);
  m.fw_lambda = cfg.get_double("model.fw_lambda", 0.95);
  m.fw_eta = cfg.get_double("model.fw_eta", 0.5);
  m.fw_steps = static_cast<int>(cfg.get_long("model.fw_steps", 1));
  m.init = parse_init_kind(cfg.get_str("init.strategy", "zero"));
  m.noise_std = cfg.get_double("init.noise_std", 0.0);
  m.sigma_init = cfg.get_double("init.sigma_init", -3.0);
  return m;
}

inline LcdModelConfig lcd_model_config_from(const Config& cfg) {
  LcdModelConfig m;
  m.hidden = cfg.get_long("model.hidden", 128);
  m.ctx_hidden = cfg.get_long("model.ctx_hidden", 50);
  m.init = parse_init_kind(cfg.get_str("init.strategy", "zero"));
  m.noise_std = cfg.get_double("init.noise_std", 0.0);
  m.sigma_init = cfg.get_double("init.sigma_init", -3.0);
  return m;
}

// ---- run drivers (used by the CLI and the acceptance suite) ------------------

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

/// gen-data: writes train/valid dataset files into out_dir.
inline void run_gen_data(const Config& user, const std::string& out_dir) {
  Config cfg = resolve_config(user);
  std::string task = require_task(cfg);
  std::filesystem::create_directories(out_dir);
  uint64_t seed = static_cast<uint64_t>(cfg.get_long("seed", 0));
  if (task == "art") {
    auto [train, valid] =
        gen_art_dataset(cfg.get_long("data.n_train", 100000), cfg.get_long("data.n_valid", 20000),
                        cfg.get_long("data.k", 4), seed);
    save_art(out_dir + "/art_train.txt", train);
    save_art(out_dir + "/art_valid.txt", valid);
  } else {
    long t_f = cfg.get_long("data.t_f", 25);
    auto train = gen_lcd_dataset(parse_period_list(cfg.get_str("data.periods_train", "")),
                                 cfg.get_long("data.n_per_period_train", 1000), t_f, seed);
    auto valid = gen_lcd_dataset(parse_period_list(cfg.get_str("data.periods_valid", "")),
                                 cfg.get_long("data.n_per_period_valid", 500), t_f, seed + 1);
    save_lcd(out_dir + "/lcd_train.txt", train);
    save_lcd(out_dir + "/lcd_valid.txt", valid);
  }
  write_text(out_dir + "/config.resolved", cfg.snapshot());
}

struct TrainRunResult {
  std::vector<MetricsRecord> metrics;
  std::string checkpoint_path;
  std::string config_hash;
};

/// train: writes config.resolved, metrics.jsonl, timings.jsonl and
/// checkpoint.txt into out_dir.
inline TrainRunResult run_train(const Config& user, const std::string& out_dir) {
  Config cfg = resolve_config(user);
  std::string task = require_task(cfg);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir + "/config.resolved", cfg.snapshot());

  std::string train_path = cfg.require_str("data.train_path");
  std::string valid_path = cfg.require_str("data.valid_path");
  TrainConfig tcfg = train_config_from(cfg);

  std::ofstream metrics_out(out_dir + "/metrics.jsonl", std::ios::binary);
  if (!metrics_out) throw std::runtime_error("cannot open for writing: " + out_dir + "/metrics.jsonl");

  TrainRunResult result;
  result.config_hash = cfg.hash_hex();
  result.checkpoint_path = out_dir + "/checkpoint.txt";
  std::vector<double> epoch_seconds;

  if (task == "art") {
    auto train_set = load_art(train_path);
    auto valid_set = load_art(valid_path);
    auto out = train_art(art_model_config_from(cfg), tcfg, train_set, valid_set,
                         [&](const MetricsRecord& r) { metrics_out << metrics_json(r, true) << "\n"; });
    result.metrics = std::move(out.metrics);
    epoch_seconds = std::move(out.epoch_seconds);
    Checkpoint::from_store(out.model.store, result.config_hash).save(result.checkpoint_path);
  } else {
    auto train_set = load_lcd(train_path);
    auto valid_set = load_lcd(valid_path);
    auto out = train_lcd(lcd_model_config_from(cfg), tcfg, train_set, valid_set,
                         [&](const MetricsRecord& r) { metrics_out << metrics_json(r, false) << "\n"; });
    result.metrics = std::move(out.metrics);
    epoch_seconds = std::move(out.epoch_seconds);
    Checkpoint::from_store(out.model.store, result.config_hash).save(result.checkpoint_path);
  }

  // wall-clock lives outside metrics.jsonl: metrics must be byte-identical
  // across runs of the same (config, seed)
  std::ofstream timing_out(out_dir + "/timings.jsonl", std::ios::binary);
  for (size_t e = 0; e < epoch_seconds.size(); ++e)
    timing_out << "{\"epoch\":" << (e + 1) << ",\"wall_clock_seconds\":" << fmt_double(epoch_seconds[e])
               << "}\n";
  return result;
}

/// eval: loads a checkpoint into a model built from the resolved config and
/// evaluates one dataset split.
inline MetricsRecord run_eval(const Config& user, const std::string& checkpoint_path,
                              const std::string& data_path, const std::string& split) {
  Config cfg = resolve_config(user);
  std::string task = require_task(cfg);
  Checkpoint ck = Checkpoint::load(checkpoint_path);
  uint64_t seed = static_cast<uint64_t>(cfg.get_long("seed", 0));
  Rng init_rng = Rng::substream(seed, 0);
  MetricsRecord r;
  if (task == "art") {
    ArtModel model = ArtModel::create(art_model_config_from(cfg), init_rng);
    ck.apply(model.store);
    r = evaluate_art(model, load_art(data_path));
  } else {
    LcdModel model = LcdModel::create(lcd_model_config_from(cfg), init_rng);
    ck.apply(model.store);
    r = evaluate_lcd(model, load_lcd(data_path));
  }
  r.split = split;
  r.seed = seed;
  return r;
}

/// generate: free-running trajectories from a trained LCD checkpoint,
/// written as CSV rows (sample_id, t, x).
inline std::vector<std::vector<double>> run_generate(const Config& user,
                                                     const std::string& checkpoint_path,
                                                     double x0, double period, long n_samples,
                                                     uint64_t gen_seed) {
  Config cfg = resolve_config(user);
  if (require_task(cfg) != "lcd")
    throw ConfigError("generate requires an LCD config (task = lcd)");
  Checkpoint ck = Checkpoint::load(checkpoint_path);
  Rng init_rng = Rng::substream(static_cast<uint64_t>(cfg.get_long("seed", 0)), 0);
  LcdModel model = LcdModel::create(lcd_model_config_from(cfg), init_rng);
  ck.apply(model.store);
  long t_f = cfg.get_long("data.t_f", 25);
  Rng rng(gen_seed);
  return model.rollout(x0, period, n_samples, t_f, rng);
}

inline void write_trajectories_csv(const std::string& path,
                                   const std::vector<std::vector<double>>& trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "sample_id,t,x\n";
  for (size_t s = 0; s < trajectories.size(); ++s)
    for (size_t t = 0; t < trajectories[s].size(); ++t)
      out << s << "," << t << "," << fmt_double(trajectories[s][t]) << "\n";
}

}  // namespace crnn
