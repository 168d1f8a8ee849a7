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
#include "crnn/params.hpp"
#include "crnn/rng.hpp"
#include "crnn/tape.hpp"

namespace crnn {

enum class InitKind { kZero, kFreeVariable, kContextual, kContextualStochastic };
enum class ContextKind { kNone, kToken, kFeature };

inline const char* init_kind_name(InitKind k) {
  switch (k) {
    case InitKind::kZero: return "zero";
    case InitKind::kFreeVariable: return "free";
    case InitKind::kContextual: return "learned";
    case InitKind::kContextualStochastic: return "learned-distribution";
  }
  return "?";
}

/// Shape summary of the cell whose state is being initialized. The full
/// initializable state is 2H for an LSTM (h and c) and H for Fast Weights
/// (A always starts at zero; context networks emit vectors, not matrices).
struct CellDesc {
  enum class Kind { kLstm, kFw } kind = Kind::kLstm;
  long hidden = 0;

  long state_size() const {
    return kind == Kind::kLstm ? 2 * hidden : hidden;
  }
};

/// Batch context consumed by the context network: the first token id per
/// example (ART) or a per-example feature vector (LCD: scaled x0 and T).
struct ContextInput {
  std::vector<long> tokens;
  Tensor features;  // [B, F]
};

/// Pluggable initial-state strategy. Parameters live in a ParamStore; the
/// strategy holds store indices and stages nothing itself.
struct InitStrategy {
  InitKind kind = InitKind::kZero;
  ContextKind ctx_kind = ContextKind::kNone;
  long state_size = 0;
  double noise_std = 0.0;

  // ParamStore indices (-1 when unused by the chosen kind)
  int free_vec = -1;
  int shared_embedding = -1;  // token context: table shared with the model
  int hid_w = -1, hid_b = -1; // feature context hidden layer
  int head_w = -1, head_b = -1;
  int sigma_raw = -1;

  static InitStrategy zero(const CellDesc& cell) {
    InitStrategy s;
    s.kind = InitKind::kZero;
    s.state_size = cell.state_size();
    return s;
  }

  /// Single trainable vector tiled across the batch, with optional
  /// per-copy Gaussian noise.
  static InitStrategy free_variable(const CellDesc& cell, double noise_std,
                                    ParamStore& store) {
    InitStrategy s;
    s.kind = InitKind::kFreeVariable;
    s.state_size = cell.state_size();
    s.noise_std = noise_std;
    s.free_vec = store.add("init.state_vector", Tensor::zeros({s.state_size}));
    return s;
  }

  /// Context network over the first token: shared embedding followed by a
  /// single dense head. The head starts at zero so the strategy begins as an
  /// exact zero initialization and departs from it only where the context
  /// earns its keep; this also makes same-seed zero/contextual runs start
  /// from identical shared weights.
  static InitStrategy token_context(const CellDesc& cell, long emb_dim,
                                    int embedding_store_idx, bool stochastic,
                                    ParamStore& store, Rng& rng,
                                    double sigma_init = -3.0) {
    (void)rng;
    InitStrategy s;
    s.kind = stochastic ? InitKind::kContextualStochastic : InitKind::kContextual;
    s.ctx_kind = ContextKind::kToken;
    s.state_size = cell.state_size();
    s.shared_embedding = embedding_store_idx;
    s.head_w = store.add("init.head_w", Tensor::zeros({emb_dim, s.state_size}));
    s.head_b = store.add("init.head_b", Tensor::zeros({s.state_size}));
    if (stochastic)
      s.sigma_raw = store.add("init.sigma_raw", Tensor::full({s.state_size}, sigma_init));
    return s;
  }

  /// Context network over a feature vector: tanh hidden layer then a dense
  /// head emitting the full state (the mean, for the stochastic variant).
  /// The head starts at zero for the same reason as token_context.
  static InitStrategy feature_context(const CellDesc& cell, long feat_dim,
                                      long hidden_units, bool stochastic,
                                      ParamStore& store, Rng& rng,
                                      double sigma_init = -3.0) {
    InitStrategy s;
    s.kind = stochastic ? InitKind::kContextualStochastic : InitKind::kContextual;
    s.ctx_kind = ContextKind::kFeature;
    s.state_size = cell.state_size();
    s.hid_w = store.add("init.hidden_w", rng.xavier(feat_dim, hidden_units));
    s.hid_b = store.add("init.hidden_b", Tensor::zeros({hidden_units}));
    s.head_w = store.add("init.head_w", Tensor::zeros({hidden_units, s.state_size}));
    s.head_b = store.add("init.head_b", Tensor::zeros({s.state_size}));
    if (stochastic)
      s.sigma_raw = store.add("init.sigma_raw", Tensor::full({s.state_size}, sigma_init));
    return s;
  }

  /// Builds the [B, state_size] initial-state vector on the tape.
  /// `sample` enables noise/epsilon draws; `eps_override` pins epsilon for
  /// the stochastic strategy (test hook / reparameterization checks).
  int build_state_vector(Tape& t, const std::vector<int>& ids, long batch,
                         const ContextInput& ctx, Rng* rng, bool sample,
                         const Tensor* eps_override = nullptr) const {
    switch (kind) {
      case InitKind::kZero:
        return t.constant(Tensor::zeros({batch, state_size}));
      case InitKind::kFreeVariable: {
        int tiled = t.add(t.constant(Tensor::zeros({batch, state_size})),
                          ids[static_cast<size_t>(free_vec)]);
        if (sample && noise_std > 0.0 && rng != nullptr)
          tiled = t.add(tiled, t.constant(rng->normal_tensor({batch, state_size}, noise_std)));
        return tiled;
      }
      case InitKind::kContextual:
        return context_net(t, ids, batch, ctx);
      case InitKind::kContextualStochastic: {
        int mu = context_net(t, ids, batch, ctx);
        Tensor eps;
        if (eps_override != nullptr) {
          eps = *eps_override;
        } else if (sample && rng != nullptr) {
          eps = rng->normal_tensor({batch, state_size});
        } else {
          return mu;  // evaluated at the mean
        }
        int scale = t.add(t.constant(Tensor::zeros({batch, state_size})),
                          t.softplus(ids[static_cast<size_t>(sigma_raw)]));
        return t.add(mu, t.mul(scale, t.constant(std::move(eps))));
      }
    }
    throw std::logic_error("unreachable");
  }

  /// Full RecurrentState for the target cell: the state vector split into
  /// (h, c) for an LSTM, or used as h with A = 0 for Fast Weights.
  StateIds build(Tape& t, const std::vector<int>& ids, long batch, const ContextInput& ctx,
                 const CellDesc& cell, Rng* rng, bool sample,
                 const Tensor* eps_override = nullptr) const {
    if (cell.state_size() != state_size)
      throw std::invalid_argument("init strategy state size " + std::to_string(state_size) +
                                  " does not match cell state size " +
                                  std::to_string(cell.state_size()));
    int vec = build_state_vector(t, ids, batch, ctx, rng, sample, eps_override);
    StateIds s;
    if (cell.kind == CellDesc::Kind::kLstm) {
      s.h = t.slice(vec, 0, cell.hidden);
      s.c = t.slice(vec, cell.hidden, cell.hidden);
    } else {
      s.h = vec;
      s.a = t.constant(Tensor::zeros({batch, cell.hidden, cell.hidden}));
    }
    return s;
  }

 private:
  int context_net(Tape& t, const std::vector<int>& ids, long batch,
                  const ContextInput& ctx) const {
    if (ctx_kind == ContextKind::kToken) {
      if (static_cast<long>(ctx.tokens.size()) != batch)
        throw std::invalid_argument("context batch " + std::to_string(ctx.tokens.size()) +
                                    " does not match requested batch " + std::to_string(batch));
      int emb = t.embed(ids[static_cast<size_t>(shared_embedding)], ctx.tokens);
      return dense(t, emb, DenseIds{ids[static_cast<size_t>(head_w)],
                                    ids[static_cast<size_t>(head_b)], Activation::kIdentity});
    }
    if (ctx.features.ndim() != 2 || ctx.features.shape[0] != batch)
      throw std::invalid_argument("context batch " +
                                  Tensor::shape_str(ctx.features.shape) +
                                  " does not match requested batch " + std::to_string(batch));
    int feat = t.constant(ctx.features);
    int hidden = dense(t, feat, DenseIds{ids[static_cast<size_t>(hid_w)],
                                         ids[static_cast<size_t>(hid_b)], Activation::kTanh});
    return dense(t, hidden, DenseIds{ids[static_cast<size_t>(head_w)],
                                     ids[static_cast<size_t>(head_b)], Activation::kIdentity});
  }
};

}  // namespace crnn
