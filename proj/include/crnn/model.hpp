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

#include <stdexcept>
#include <string>
#include <vector>

#include "crnn/cells.hpp"
#include "crnn/data.hpp"
#include "crnn/params.hpp"
#include "crnn/rng.hpp"
#include "crnn/state_init.hpp"
#include "crnn/tape.hpp"

namespace crnn {

struct BuiltGraph {
  int loss = -1;
  int output = -1;  // ART: logits [B,10]; LCD: delta predictions [B,t_f-1]
};

// ---- ART: character embedding + FW RNN + 10-way softmax ---------------------

struct ArtModelConfig {
  long embedding_dim = 64;
  long hidden = 50;
  double fw_lambda = 0.95;
  double fw_eta = 0.5;
  int fw_steps = 1;
  InitKind init = InitKind::kZero;
  double noise_std = 0.0;
  double sigma_init = -3.0;
};

class ArtModel {
 public:
  ArtModelConfig cfg;
  ParamStore store;
  InitStrategy strat;

  static ArtModel create(const ArtModelConfig& cfg, Rng& rng) {
    ArtModel m;
    m.cfg = cfg;
    m.emb_ = m.store.add("embedding", rng.xavier(Vocabulary::kSize, cfg.embedding_dim));
    FwInit fw = make_fw_params(cfg.embedding_dim, cfg.hidden, rng);
    m.fw_w_ = m.store.add("fw.w", std::move(fw.w));
    m.fw_c_ = m.store.add("fw.c", std::move(fw.c));
    m.fw_gain_ = m.store.add("fw.ln_gain", std::move(fw.gain));
    m.fw_bias_ = m.store.add("fw.ln_bias", std::move(fw.bias));
    // small output head so an untrained model predicts near-uniformly
    DenseInit out = make_dense_params(cfg.hidden, 10, rng, 0.1);
    m.out_w_ = m.store.add("out.w", std::move(out.w));
    m.out_b_ = m.store.add("out.b", std::move(out.b));

    CellDesc cell = m.cell();
    switch (cfg.init) {
      case InitKind::kZero:
        m.strat = InitStrategy::zero(cell);
        break;
      case InitKind::kFreeVariable:
        m.strat = InitStrategy::free_variable(cell, cfg.noise_std, m.store);
        break;
      case InitKind::kContextual:
        m.strat = InitStrategy::token_context(cell, cfg.embedding_dim, m.emb_, false,
                                              m.store, rng, cfg.sigma_init);
        break;
      case InitKind::kContextualStochastic:
        m.strat = InitStrategy::token_context(cell, cfg.embedding_dim, m.emb_, true,
                                              m.store, rng, cfg.sigma_init);
        break;
    }
    return m;
  }

  CellDesc cell() const { return CellDesc{CellDesc::Kind::kFw, cfg.hidden}; }

  /// Unrolls the FW RNN over the token sequence and attaches the softmax
  /// head at the final step (the query position).
  BuiltGraph build(Tape& t, const std::vector<int>& ids, const std::vector<ArtSample>& data,
                   const std::vector<long>& batch, Rng* rng, bool sample,
                   bool with_loss = true) const {
    long B = static_cast<long>(batch.size());
    long seq_len = static_cast<long>(data[static_cast<size_t>(batch[0])].tokens.size());
    ContextInput ctx;
    ctx.tokens.reserve(static_cast<size_t>(B));
    for (long i : batch) {
      const ArtSample& s = data[static_cast<size_t>(i)];
      if (static_cast<long>(s.tokens.size()) != seq_len)
        throw std::invalid_argument("ART batch mixes sequence lengths");
      ctx.tokens.push_back(s.tokens[0]);  // conditioned on the first character
    }

    StateIds state = strat.build(t, ids, B, ctx, cell(), rng, sample);
    FwParamIds fw{ids[static_cast<size_t>(fw_w_)], ids[static_cast<size_t>(fw_c_)],
                  ids[static_cast<size_t>(fw_gain_)], ids[static_cast<size_t>(fw_bias_)],
                  cfg.fw_lambda, cfg.fw_eta, cfg.fw_steps};
    std::vector<long> col(static_cast<size_t>(B));
    for (long step = 0; step < seq_len; ++step) {
      for (long i = 0; i < B; ++i)
        col[static_cast<size_t>(i)] =
            data[static_cast<size_t>(batch[static_cast<size_t>(i)])].tokens[static_cast<size_t>(step)];
      int x = t.embed(ids[static_cast<size_t>(emb_)], col);
      state = fw_step(t, x, state, fw);
    }

    BuiltGraph g;
    g.output = dense(t, state.h,
                     DenseIds{ids[static_cast<size_t>(out_w_)], ids[static_cast<size_t>(out_b_)],
                              Activation::kIdentity});
    if (with_loss) {
      std::vector<long> targets(static_cast<size_t>(B));
      for (long i = 0; i < B; ++i)
        targets[static_cast<size_t>(i)] = data[static_cast<size_t>(batch[static_cast<size_t>(i)])].target;
      g.loss = t.softmax_cross_entropy(g.output, std::move(targets));
    }
    return g;
  }

 private:
  int emb_ = -1, fw_w_ = -1, fw_c_ = -1, fw_gain_ = -1, fw_bias_ = -1;
  int out_w_ = -1, out_b_ = -1;
};

// ---- LCD: LSTM + single-unit delta head --------------------------------------

struct LcdModelConfig {
  long hidden = 128;
  long ctx_hidden = 50;
  InitKind init = InitKind::kZero;
  double noise_std = 0.0;
  double sigma_init = -3.0;
};

class LcdModel {
 public:
  LcdModelConfig cfg;
  ParamStore store;
  InitStrategy strat;
  Scaler scaler;

  /// Only the zero baseline sees the period at every step; contextual models
  /// carry it in the initial state instead.
  bool append_period() const { return cfg.init == InitKind::kZero; }
  long input_dim() const { return append_period() ? 2 : 1; }

  static LcdModel create(const LcdModelConfig& cfg, Rng& rng) {
    LcdModel m;
    m.cfg = cfg;
    LstmInit lstm = make_lstm_params(m.input_dim(), cfg.hidden, rng);
    m.wx_ = m.store.add("lstm.wx", std::move(lstm.wx));
    m.wh_ = m.store.add("lstm.wh", std::move(lstm.wh));
    m.b_ = m.store.add("lstm.b", std::move(lstm.b));
    DenseInit out = make_dense_params(cfg.hidden, 1, rng, 0.1);
    m.out_w_ = m.store.add("out.w", std::move(out.w));
    m.out_b_ = m.store.add("out.b", std::move(out.b));

    CellDesc cell = m.cell();
    switch (cfg.init) {
      case InitKind::kZero:
        m.strat = InitStrategy::zero(cell);
        break;
      case InitKind::kFreeVariable:
        m.strat = InitStrategy::free_variable(cell, cfg.noise_std, m.store);
        break;
      case InitKind::kContextual:
        m.strat = InitStrategy::feature_context(cell, 2, cfg.ctx_hidden, false, m.store,
                                                rng, cfg.sigma_init);
        break;
      case InitKind::kContextualStochastic:
        m.strat = InitStrategy::feature_context(cell, 2, cfg.ctx_hidden, true, m.store,
                                                rng, cfg.sigma_init);
        break;
    }
    return m;
  }

  CellDesc cell() const { return CellDesc{CellDesc::Kind::kLstm, cfg.hidden}; }

  ContextInput context_for(const std::vector<LcdSequence>& data,
                           const std::vector<long>& batch) const {
    long B = static_cast<long>(batch.size());
    ContextInput ctx;
    ctx.features = Tensor({B, 2});
    for (long i = 0; i < B; ++i) {
      const LcdSequence& s = data[static_cast<size_t>(batch[static_cast<size_t>(i)])];
      ctx.features.at(i, 0) = scaler.scale_x(s.values[0]);
      ctx.features.at(i, 1) = scaler.scale_period(s.config.period);
    }
    return ctx;
  }

  /// Teacher-forced unroll. Input at step t is scaled x_{t-1} (plus the
  /// scaled period for the zero baseline); the head predicts delta x_t; the
  /// loss is the MSE over all predicted steps.
  BuiltGraph build(Tape& t, const std::vector<int>& ids, const std::vector<LcdSequence>& data,
                   const std::vector<long>& batch, Rng* rng, bool sample,
                   bool with_loss = true) const {
    long B = static_cast<long>(batch.size());
    long t_f = data[static_cast<size_t>(batch[0])].config.t_f;
    long steps = t_f - 1;

    // scaled values and targets
    Tensor scaled({B, t_f});
    Tensor targets({B, steps});
    Tensor periods({B, 1});
    for (long i = 0; i < B; ++i) {
      const LcdSequence& s = data[static_cast<size_t>(batch[static_cast<size_t>(i)])];
      if (s.config.t_f != t_f) throw std::invalid_argument("LCD batch mixes lengths");
      for (long k = 0; k < t_f; ++k) scaled.at(i, k) = scaler.scale_x(s.values[static_cast<size_t>(k)]);
      for (long k = 0; k < steps; ++k) targets.at(i, k) = scaled.at(i, k + 1) - scaled.at(i, k);
      periods.at(i, 0) = scaler.scale_period(s.config.period);
    }

    ContextInput ctx = context_for(data, batch);
    StateIds state = strat.build(t, ids, B, ctx, cell(), rng, sample);
    LstmParamIds lstm{ids[static_cast<size_t>(wx_)], ids[static_cast<size_t>(wh_)],
                      ids[static_cast<size_t>(b_)], cfg.hidden};
    DenseIds head{ids[static_cast<size_t>(out_w_)], ids[static_cast<size_t>(out_b_)],
                  Activation::kIdentity};

    std::vector<int> preds;
    preds.reserve(static_cast<size_t>(steps));
    for (long step = 0; step < steps; ++step) {
      Tensor x({B, input_dim()});
      for (long i = 0; i < B; ++i) {
        x.at(i, 0) = scaled.at(i, step);
        if (append_period()) x.at(i, 1) = periods.at(i, 0);
      }
      state = lstm_step(t, t.constant(std::move(x)), state, lstm);
      preds.push_back(dense(t, state.h, head));
    }

    BuiltGraph g;
    g.output = t.concat(preds);
    if (with_loss) {
      int diff = g.output;
      diff = t.add(diff, t.scalar_mul(t.constant(std::move(targets)), -1.0));
      g.loss = t.mean(t.mul(diff, diff));
    }
    return g;
  }

  /// Free-running conditional generation: samples n initial hidden states
  /// for (x0, T), then feeds each delta prediction back as the next input.
  /// Returns unscaled trajectories of length t_f, all starting at x0.
  std::vector<std::vector<double>> rollout(double x0, double period, long n_samples,
                                           long t_f, Rng& rng) const {
    Tape t;
    std::vector<int> ids = store.stage(t);
    ContextInput ctx;
    ctx.features = Tensor({n_samples, 2});
    for (long i = 0; i < n_samples; ++i) {
      ctx.features.at(i, 0) = scaler.scale_x(x0);
      ctx.features.at(i, 1) = scaler.scale_period(period);
    }
    StateIds state = strat.build(t, ids, n_samples, ctx, cell(), &rng, true);
    LstmParamIds lstm{ids[static_cast<size_t>(wx_)], ids[static_cast<size_t>(wh_)],
                      ids[static_cast<size_t>(b_)], cfg.hidden};
    DenseIds head{ids[static_cast<size_t>(out_w_)], ids[static_cast<size_t>(out_b_)],
                  Activation::kIdentity};

    std::vector<std::vector<double>> traj(static_cast<size_t>(n_samples));
    std::vector<double> current(static_cast<size_t>(n_samples), scaler.scale_x(x0));
    for (long i = 0; i < n_samples; ++i) traj[static_cast<size_t>(i)].push_back(x0);
    double tp = scaler.scale_period(period);
    for (long step = 1; step < t_f; ++step) {
      Tensor x({n_samples, input_dim()});
      for (long i = 0; i < n_samples; ++i) {
        x.at(i, 0) = current[static_cast<size_t>(i)];
        if (append_period()) x.at(i, 1) = tp;
      }
      state = lstm_step(t, t.constant(std::move(x)), state, lstm);
      int pred = dense(t, state.h, head);
      const Tensor& d = t.val(pred);
      for (long i = 0; i < n_samples; ++i) {
        current[static_cast<size_t>(i)] += d.at(i, 0);
        traj[static_cast<size_t>(i)].push_back(scaler.unscale_x(current[static_cast<size_t>(i)]));
      }
    }
    return traj;
  }

 private:
  int wx_ = -1, wh_ = -1, b_ = -1, out_w_ = -1, out_b_ = -1;
};

}  // namespace crnn
