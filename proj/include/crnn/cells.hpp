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

#include "crnn/rng.hpp"
#include "crnn/tape.hpp"
#include "crnn/tensor.hpp"

namespace crnn {

/// Node ids of the full initializable state of a recurrent cell on a tape.
/// LSTM uses (h, c); Fast Weights uses (h, a) with a the per-example
/// fast-weight matrix [B,H,H].
struct StateIds {
  int h = -1;
  int c = -1;
  int a = -1;
};

enum class Activation { kIdentity, kTanh, kRelu };

struct DenseIds {
  int w = -1;
  int b = -1;
  Activation act = Activation::kIdentity;
};

inline int dense(Tape& t, int x, const DenseIds& d) {
  int y = t.add(t.matmul(x, d.w), d.b);
  switch (d.act) {
    case Activation::kIdentity: return y;
    case Activation::kTanh: return t.tanh(y);
    case Activation::kRelu: return t.relu(y);
  }
  return y;
}

// ---- LSTM ----------------------------------------------------------------

/// Gate order within the 4H axis is fixed as [input, forget, candidate,
/// output] so that checkpoints are portable.
struct LstmParamIds {
  int wx = -1;  // [E, 4H]
  int wh = -1;  // [H, 4H]
  int b = -1;   // [4H]
  long hidden = 0;
};

struct LstmInit {
  Tensor wx, wh, b;
};

inline LstmInit make_lstm_params(long input_dim, long hidden, Rng& rng) {
  LstmInit p;
  p.wx = rng.xavier(input_dim, 4 * hidden);
  p.wh = rng.xavier(hidden, 4 * hidden);
  p.b = Tensor::zeros({4 * hidden});
  // forget-gate bias segment starts at 1
  for (long j = hidden; j < 2 * hidden; ++j) p.b.data[j] = 1.0;
  return p;
}

inline StateIds lstm_step(Tape& t, int x, StateIds s, const LstmParamIds& p) {
  long H = p.hidden;
  int gates = t.add(t.add(t.matmul(x, p.wx), t.matmul(s.h, p.wh)), p.b);
  int ig = t.sigmoid(t.slice(gates, 0, H));
  int fg = t.sigmoid(t.slice(gates, H, H));
  int cand = t.tanh(t.slice(gates, 2 * H, H));
  int og = t.sigmoid(t.slice(gates, 3 * H, H));
  StateIds out;
  out.c = t.add(t.mul(fg, s.c), t.mul(ig, cand));
  out.h = t.mul(og, t.tanh(out.c));
  return out;
}

// ---- Fast Weights ----------------------------------------------------------

struct FwParamIds {
  int w = -1;     // hidden-to-hidden [H, H]
  int c = -1;     // input-to-hidden [E, H]
  int gain = -1;  // layer-norm gain [H]
  int bias = -1;  // layer-norm bias [H]
  double lambda = 0.95;  // fast-weight decay, in [0,1)
  double eta = 0.5;      // fast-weight learning rate
  int steps = 1;         // inner-loop step count S >= 1
};

struct FwInit {
  Tensor w, c, gain, bias;
};

inline FwInit make_fw_params(long input_dim, long hidden, Rng& rng) {
  FwInit p;
  p.w = rng.xavier(hidden, hidden);
  p.c = rng.xavier(input_dim, hidden);
  p.gain = Tensor::full({hidden}, 1.0);
  p.bias = Tensor::zeros({hidden});
  return p;
}

/// One fast-weights step:
///   A' = lambda A + eta (h outer h)
///   z  = W h + C x
///   h_0 = relu(z);  h_s = relu(layer_norm(z + A' h_{s-1})),  s = 1..S
/// Returns (h_S, A').
inline StateIds fw_step(Tape& t, int x, StateIds s, const FwParamIds& p) {
  int a_next = t.add(t.scalar_mul(s.a, p.lambda), t.scalar_mul(t.outer(s.h, s.h), p.eta));
  int z = t.add(t.matmul(s.h, p.w), t.matmul(x, p.c));
  int h = t.relu(z);
  for (int step = 0; step < p.steps; ++step)
    h = t.relu(t.layer_norm(t.add(z, t.matmul(a_next, h)), p.gain, p.bias));
  StateIds out;
  out.h = h;
  out.a = a_next;
  return out;
}

// ---- misc initializers -----------------------------------------------------

struct DenseInit {
  Tensor w, b;
};

inline DenseInit make_dense_params(long input_dim, long output_dim, Rng& rng,
                                   double scale = 1.0) {
  DenseInit p;
  p.w = rng.xavier(input_dim, output_dim);
  if (scale != 1.0)
    for (double& v : p.w.data) v *= scale;
  p.b = Tensor::zeros({output_dim});
  return p;
}

}  // namespace crnn
