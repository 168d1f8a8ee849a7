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

#include <string>
#include <vector>

#include "crnn/cells.hpp"
#include "crnn/gradcheck.hpp"
#include "crnn/state_init.hpp"

namespace crnn {

namespace detail {

inline void check_into(GradCheckReport& all, const std::string& prefix, ParamStore& params,
                       const LossBuilder& build, double tol) {
  GradCheckReport r = finite_difference_check(params, build, tol);
  for (GradCheckEntry& e : r.entries) {
    e.name = prefix + "/" + e.name;
    all.all_pass = all.all_pass && e.pass;
    all.entries.push_back(std::move(e));
  }
}

// random values bounded away from 0 (keeps relu/log checks off non-smooth
// or singular loci)
inline Tensor away_from_zero(Rng& rng, std::vector<long> shape, double lo = 0.1,
                             double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  return t;
}

}  // namespace detail

/// Finite-difference check of every primitive, both cells, the loss heads,
/// both context networks and the reparameterized head (fixed epsilon).
inline GradCheckReport full_gradient_suite(double tol = 1e-4) {
  GradCheckReport all;
  all.tolerance = tol;
  Rng rng(20260823);

  {  // matmul, both shape rules
    ParamStore ps;
    ps.add("a", rng.normal_tensor({2, 3}));
    ps.add("b", rng.normal_tensor({3, 4}));
    detail::check_into(all, "matmul", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.tanh(t.matmul(ids[0], ids[1])));
    }, tol);
  }
  {
    ParamStore ps;
    ps.add("a", rng.normal_tensor({2, 3, 4}));
    ps.add("b", rng.normal_tensor({2, 4}));
    detail::check_into(all, "matmul_batched", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.tanh(t.matmul(ids[0], ids[1])));
    }, tol);
  }
  {  // add (same shape + leading-batch broadcast), mul, scalar_mul
    ParamStore ps;
    ps.add("a", rng.normal_tensor({3, 4}));
    ps.add("b", rng.normal_tensor({3, 4}));
    ps.add("bias", rng.normal_tensor({4}));
    detail::check_into(all, "add_mul", ps, [](Tape& t, const std::vector<int>& ids) {
      int s = t.add(t.mul(ids[0], ids[1]), ids[1]);
      return t.sum(t.tanh(t.scalar_mul(t.add(s, ids[2]), 0.7)));
    }, tol);
  }
  {  // concat + slice
    ParamStore ps;
    ps.add("a", rng.normal_tensor({2, 3}));
    ps.add("b", rng.normal_tensor({2, 2}));
    detail::check_into(all, "concat_slice", ps, [](Tape& t, const std::vector<int>& ids) {
      int c = t.concat({ids[0], ids[1]});
      return t.sum(t.tanh(t.slice(c, 1, 3)));
    }, tol);
  }
  {  // smooth unaries
    ParamStore ps;
    ps.add("x", rng.normal_tensor({2, 5}));
    detail::check_into(all, "tanh_sigmoid_softplus_exp", ps,
                       [](Tape& t, const std::vector<int>& ids) {
      int y = t.add(t.tanh(ids[0]), t.sigmoid(ids[0]));
      y = t.add(y, t.softplus(ids[0]));
      return t.mean(t.add(y, t.exp(ids[0])));
    }, tol);
  }
  {  // relu away from the kink
    ParamStore ps;
    ps.add("x", detail::away_from_zero(rng, {3, 4}));
    detail::check_into(all, "relu", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.relu(ids[0]));
    }, tol);
  }
  {  // log on positive inputs
    ParamStore ps;
    ps.add("x", detail::away_from_zero(rng, {2, 3}, 0.5, 2.0));
    detail::check_into(all, "log", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.log(t.mul(ids[0], ids[0])));
    }, tol);
  }
  {  // mean, sum, outer
    ParamStore ps;
    ps.add("a", rng.normal_tensor({2, 3}));
    ps.add("b", rng.normal_tensor({2, 4}));
    detail::check_into(all, "outer_mean_sum", ps, [](Tape& t, const std::vector<int>& ids) {
      int o = t.outer(ids[0], ids[1]);
      return t.add(t.mean(o), t.sum(t.tanh(o)));
    }, tol);
  }
  {  // embedding lookup with a repeated row (gradient accumulation)
    ParamStore ps;
    ps.add("table", rng.normal_tensor({5, 3}));
    detail::check_into(all, "embedding_lookup", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.tanh(t.embed(ids[0], {0, 3, 3, 1})));
    }, tol);
  }
  {  // layer_norm
    ParamStore ps;
    ps.add("v", rng.normal_tensor({3, 5}));
    ps.add("gain", detail::away_from_zero(rng, {5}, 0.5, 1.5));
    ps.add("bias", rng.normal_tensor({5}));
    detail::check_into(all, "layer_norm", ps, [](Tape& t, const std::vector<int>& ids) {
      return t.sum(t.tanh(t.layer_norm(ids[0], ids[1], ids[2])));
    }, tol);
  }
  {  // softmax cross entropy
    ParamStore ps;
    ps.add("logits", rng.normal_tensor({3, 5}));
    detail::check_into(all, "softmax_cross_entropy", ps,
                       [](Tape& t, const std::vector<int>& ids) {
      return t.softmax_cross_entropy(ids[0], {1, 4, 0});
    }, tol);
  }
  {  // full LSTM step
    ParamStore ps;
    Rng init = Rng::substream(7, 0);
    LstmInit p = make_lstm_params(3, 4, init);
    ps.add("wx", std::move(p.wx));
    ps.add("wh", std::move(p.wh));
    ps.add("b", std::move(p.b));
    ps.add("x", rng.normal_tensor({2, 3}));
    ps.add("h", rng.normal_tensor({2, 4}));
    ps.add("c", rng.normal_tensor({2, 4}));
    detail::check_into(all, "lstm_step", ps, [](Tape& t, const std::vector<int>& ids) {
      LstmParamIds lp{ids[0], ids[1], ids[2], 4};
      StateIds s{ids[4], ids[5], -1};
      StateIds out = lstm_step(t, ids[3], s, lp);
      return t.add(t.sum(t.tanh(out.h)), t.sum(t.tanh(out.c)));
    }, tol);
  }
  {  // full FW step (two inner-loop iterations)
    ParamStore ps;
    Rng init = Rng::substream(11, 0);
    FwInit p = make_fw_params(2, 3, init);
    ps.add("w", std::move(p.w));
    ps.add("c", std::move(p.c));
    ps.add("gain", std::move(p.gain));
    ps.add("bias", std::move(p.bias));
    ps.add("x", rng.normal_tensor({2, 2}));
    ps.add("h", rng.normal_tensor({2, 3}));
    ps.add("a", rng.normal_tensor({2, 3, 3}, 0.1));
    detail::check_into(all, "fw_step", ps, [](Tape& t, const std::vector<int>& ids) {
      FwParamIds fp{ids[0], ids[1], ids[2], ids[3], 0.9, 0.5, 2};
      StateIds s{ids[5], -1, ids[6]};
      StateIds out = fw_step(t, ids[4], s, fp);
      return t.add(t.sum(t.tanh(out.h)), t.mean(t.tanh(out.a)));
    }, tol);
  }
  {  // token context network (gradient through the shared embedding)
    ParamStore ps;
    Rng init = Rng::substream(13, 0);
    CellDesc cell{CellDesc::Kind::kFw, 4};
    int emb = ps.add("embedding", init.xavier(6, 3));
    InitStrategy strat = InitStrategy::token_context(cell, 3, emb, false, ps, init);
    detail::check_into(all, "token_context", ps,
                       [strat](Tape& t, const std::vector<int>& ids) {
      ContextInput ctx;
      ctx.tokens = {0, 2, 2};
      return t.sum(t.tanh(strat.build_state_vector(t, ids, 3, ctx, nullptr, false)));
    }, tol);
  }
  {  // feature context network
    ParamStore ps;
    Rng init = Rng::substream(17, 0);
    CellDesc cell{CellDesc::Kind::kLstm, 3};
    InitStrategy strat = InitStrategy::feature_context(cell, 2, 5, false, ps, init);
    Tensor feats = rng.normal_tensor({2, 2});
    detail::check_into(all, "feature_context", ps,
                       [strat, feats](Tape& t, const std::vector<int>& ids) {
      ContextInput ctx;
      ctx.features = feats;
      return t.sum(t.tanh(strat.build_state_vector(t, ids, 2, ctx, nullptr, false)));
    }, tol);
  }
  {  // reparameterized head, fixed epsilon
    ParamStore ps;
    Rng init = Rng::substream(19, 0);
    CellDesc cell{CellDesc::Kind::kLstm, 3};
    InitStrategy strat = InitStrategy::feature_context(cell, 2, 4, true, ps, init, -0.5);
    Tensor feats = rng.normal_tensor({2, 2});
    Tensor eps = rng.normal_tensor({2, 6});
    detail::check_into(all, "reparameterized_head", ps,
                       [strat, feats, eps](Tape& t, const std::vector<int>& ids) {
      ContextInput ctx;
      ctx.features = feats;
      return t.sum(t.tanh(strat.build_state_vector(t, ids, 2, ctx, nullptr, true, &eps)));
    }, tol);
  }
  {  // free-variable tiling
    ParamStore ps;
    CellDesc cell{CellDesc::Kind::kFw, 4};
    InitStrategy strat = InitStrategy::free_variable(cell, 0.0, ps);
    detail::check_into(all, "free_variable", ps,
                       [strat](Tape& t, const std::vector<int>& ids) {
      ContextInput ctx;
      return t.sum(t.tanh(strat.build_state_vector(t, ids, 3, ctx, nullptr, false)));
    }, tol);
  }
  return all;
}

}  // namespace crnn
