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

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "crnn/data.hpp"
#include "crnn/model.hpp"
#include "crnn/optim.hpp"
#include "crnn/rng.hpp"

namespace crnn {

struct MetricsRecord {
  long epoch = 0;
  std::string split;  // "train" | "valid"
  double log_likelihood = 0.0;  // ART: mean of -cross_entropy (higher is better)
  double accuracy = 0.0;        // ART
  double mse = 0.0;             // LCD
  uint64_t seed = 0;
};

/// Deterministic JSONL encoding; wall-clock timing is reported separately so
/// that metrics files are byte-identical for a fixed (config, seed).
inline std::string metrics_json(const MetricsRecord& r, bool is_art) {
  std::string out = "{\"epoch\":" + std::to_string(r.epoch) + ",\"split\":\"" + r.split + "\",";
  if (is_art) {
    out += "\"log_likelihood\":" + fmt_double(r.log_likelihood) +
           ",\"accuracy\":" + fmt_double(r.accuracy);
  } else {
    out += "\"mse\":" + fmt_double(r.mse);
  }
  out += ",\"seed\":" + std::to_string(r.seed) + "}";
  return out;
}

struct TrainConfig {
  uint64_t seed = 0;
  long batch_size = 128;
  long epochs = 1;
  long eval_every = 1;
  double lr = 0.001;
  double grad_clip = 0.0;  // 0 = off
};

namespace detail {

inline std::vector<std::vector<long>> make_batches(long n, long batch_size,
                                                   Rng* shuffle_rng) {
  std::vector<long> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0L);
  if (shuffle_rng != nullptr) shuffle_rng->shuffle(order);
  std::vector<std::vector<long>> batches;
  for (long start = 0; start < n; start += batch_size) {
    long end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

inline long argmax_row(const Tensor& t, long row) {
  long best = 0;
  for (long j = 1; j < t.shape[1]; ++j)
    if (t.at(row, j) > t.at(row, best)) best = j;
  return best;
}

}  // namespace detail

// ---- ART --------------------------------------------------------------------

/// No parameter updates; stochastic strategies are evaluated at the mean so
/// validation metrics are deterministic.
inline MetricsRecord evaluate_art(const ArtModel& model, const std::vector<ArtSample>& data,
                                  long batch_size = 256) {
  double loss_sum = 0.0;
  long correct = 0, total = 0;
  for (const std::vector<long>& batch :
       detail::make_batches(static_cast<long>(data.size()), batch_size, nullptr)) {
    Tape tape;
    std::vector<int> ids = model.store.stage(tape);
    BuiltGraph g = model.build(tape, ids, data, batch, nullptr, /*sample=*/false);
    long b = static_cast<long>(batch.size());
    loss_sum += tape.val(g.loss).data[0] * static_cast<double>(b);
    const Tensor& logits = tape.val(g.output);
    for (long i = 0; i < b; ++i)
      if (detail::argmax_row(logits, i) == data[static_cast<size_t>(batch[static_cast<size_t>(i)])].target)
        ++correct;
    total += b;
  }
  MetricsRecord r;
  r.log_likelihood = -loss_sum / static_cast<double>(total);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return r;
}

struct ArtTrainOutput {
  ArtModel model;
  std::vector<MetricsRecord> metrics;
  std::vector<double> epoch_seconds;
};

/// Full training loop for the associative retrieval task. Deterministic for
/// a fixed (config, seed): parameter init, shuffling, and strategy sampling
/// each use their own substream of the run seed.
inline ArtTrainOutput train_art(const ArtModelConfig& mcfg, const TrainConfig& tcfg,
                                const std::vector<ArtSample>& train_set,
                                const std::vector<ArtSample>& valid_set,
                                const std::function<void(const MetricsRecord&)>& on_record = {}) {
  Rng init_rng = Rng::substream(tcfg.seed, 0);
  Rng order_rng = Rng::substream(tcfg.seed, 1);
  Rng sample_rng = Rng::substream(tcfg.seed, 2);

  ArtTrainOutput out{ArtModel::create(mcfg, init_rng), {}, {}};
  ArtModel& model = out.model;
  Adam opt(tcfg.lr);

  auto emit = [&](MetricsRecord r) {
    r.seed = tcfg.seed;
    if (on_record) on_record(r);
    out.metrics.push_back(std::move(r));
  };

  for (long epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    long correct = 0, total = 0;
    for (const std::vector<long>& batch : detail::make_batches(
             static_cast<long>(train_set.size()), tcfg.batch_size, &order_rng)) {
      Tape tape;
      std::vector<int> ids = model.store.stage(tape);
      BuiltGraph g = model.build(tape, ids, train_set, batch, &sample_rng, /*sample=*/true);
      double loss = tape.val(g.loss).data[0];
      if (!std::isfinite(loss)) throw std::runtime_error("train_art: non-finite loss");
      GradMap grads = tape.backward(g.loss);
      opt.step(model.store, ids, grads, tcfg.grad_clip);
      long b = static_cast<long>(batch.size());
      loss_sum += loss * static_cast<double>(b);
      const Tensor& logits = tape.val(g.output);
      for (long i = 0; i < b; ++i)
        if (detail::argmax_row(logits, i) ==
            train_set[static_cast<size_t>(batch[static_cast<size_t>(i)])].target)
          ++correct;
      total += b;
    }
    MetricsRecord train_rec;
    train_rec.epoch = epoch;
    train_rec.split = "train";
    train_rec.log_likelihood = -loss_sum / static_cast<double>(total);
    train_rec.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    emit(train_rec);

    if (epoch % tcfg.eval_every == 0 || epoch == tcfg.epochs) {
      MetricsRecord valid_rec = evaluate_art(model, valid_set);
      valid_rec.epoch = epoch;
      valid_rec.split = "valid";
      emit(valid_rec);
    }
    out.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

// ---- LCD --------------------------------------------------------------------

inline MetricsRecord evaluate_lcd(const LcdModel& model, const std::vector<LcdSequence>& data,
                                  long batch_size = 256) {
  double loss_sum = 0.0;
  long total = 0;
  for (const std::vector<long>& batch :
       detail::make_batches(static_cast<long>(data.size()), batch_size, nullptr)) {
    Tape tape;
    std::vector<int> ids = model.store.stage(tape);
    BuiltGraph g = model.build(tape, ids, data, batch, nullptr, /*sample=*/false);
    long b = static_cast<long>(batch.size());
    loss_sum += tape.val(g.loss).data[0] * static_cast<double>(b);
    total += b;
  }
  MetricsRecord r;
  r.mse = loss_sum / static_cast<double>(total);
  return r;
}

struct LcdTrainOutput {
  LcdModel model;
  std::vector<MetricsRecord> metrics;
  std::vector<double> epoch_seconds;
};

inline LcdTrainOutput train_lcd(const LcdModelConfig& mcfg, const TrainConfig& tcfg,
                                const std::vector<LcdSequence>& train_set,
                                const std::vector<LcdSequence>& valid_set,
                                const std::function<void(const MetricsRecord&)>& on_record = {}) {
  Rng init_rng = Rng::substream(tcfg.seed, 0);
  Rng order_rng = Rng::substream(tcfg.seed, 1);
  Rng sample_rng = Rng::substream(tcfg.seed, 2);

  LcdTrainOutput out{LcdModel::create(mcfg, init_rng), {}, {}};
  LcdModel& model = out.model;
  Adam opt(tcfg.lr);

  auto emit = [&](MetricsRecord r) {
    r.seed = tcfg.seed;
    if (on_record) on_record(r);
    out.metrics.push_back(std::move(r));
  };

  for (long epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    long total = 0;
    for (const std::vector<long>& batch : detail::make_batches(
             static_cast<long>(train_set.size()), tcfg.batch_size, &order_rng)) {
      Tape tape;
      std::vector<int> ids = model.store.stage(tape);
      BuiltGraph g = model.build(tape, ids, train_set, batch, &sample_rng, /*sample=*/true);
      double loss = tape.val(g.loss).data[0];
      if (!std::isfinite(loss)) throw std::runtime_error("train_lcd: non-finite loss");
      GradMap grads = tape.backward(g.loss);
      opt.step(model.store, ids, grads, tcfg.grad_clip);
      long b = static_cast<long>(batch.size());
      loss_sum += loss * static_cast<double>(b);
      total += b;
    }
    MetricsRecord train_rec;
    train_rec.epoch = epoch;
    train_rec.split = "train";
    train_rec.mse = loss_sum / static_cast<double>(total);
    emit(train_rec);

    if (epoch % tcfg.eval_every == 0 || epoch == tcfg.epochs) {
      MetricsRecord valid_rec = evaluate_lcd(model, valid_set);
      valid_rec.epoch = epoch;
      valid_rec.split = "valid";
      emit(valid_rec);
    }
    out.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

}  // namespace crnn
