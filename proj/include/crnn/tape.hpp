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

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "crnn/tensor.hpp"

namespace crnn {

enum class Op {
  kConstant,
  kParam,
  kMatMul,
  kAdd,
  kMul,
  kScalarMul,
  kConcat,
  kSlice,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftplus,
  kExp,
  kLog,
  kMean,
  kSum,
  kOuter,
  kEmbed,
  kLayerNorm,
  kSoftmaxXent,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kScalarMul: return "scalar_mul";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftplus: return "softplus";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kMean: return "mean";
    case Op::kSum: return "sum";
    case Op::kOuter: return "outer";
    case Op::kEmbed: return "embedding_lookup";
    case Op::kLayerNorm: return "layer_norm";
    case Op::kSoftmaxXent: return "softmax_cross_entropy";
  }
  return "?";
}

/// Gradient map produced by Tape::backward: one entry per node id, with an
/// empty tensor for nodes the loss does not depend on (or that no parameter
/// feeds into). Gradient shape always equals the node's value shape.
using GradMap = std::vector<Tensor>;

namespace detail {
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;
}  // namespace detail

/// Eager reverse-mode tape over Tensor values. Every primitive records a
/// node; backward() replays the record once in reverse. One tape per
/// training step; single-threaded.
class Tape {
 public:
  struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor value;
    double scalar = 0.0;             // kScalarMul
    long offset = 0, extent = 0;     // kSlice
    std::vector<long> indices;       // kEmbed tokens / kSoftmaxXent targets
    std::vector<Tensor> saved;       // intermediates for the backward rule
    bool needs_grad = false;         // reachable from a parameter
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  const std::vector<int>& params() const { return param_ids_; }

  int constant(Tensor v) {
    Node n{Op::kConstant, {}, std::move(v)};
    return push(std::move(n));
  }

  int param(Tensor v) {
    Node n{Op::kParam, {}, std::move(v)};
    n.needs_grad = true;
    int id = push(std::move(n));
    param_ids_.push_back(id);
    return id;
  }

  // ---- primitives ------------------------------------------------------

  // [M,K]x[K,N] -> [M,N], or batched matrix-vector [B,M,K]x[B,K] -> [B,M].
  int matmul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.ndim() == 2 && B.ndim() == 2 && A.shape[1] == B.shape[0]) {
      long M = A.shape[0], K = A.shape[1], N = B.shape[1];
      Tensor out({M, N});
      detail::MapM(out.data.data(), M, N).noalias() =
          detail::CMapM(A.data.data(), M, K) * detail::CMapM(B.data.data(), K, N);
      return push(Node{Op::kMatMul, {a, b}, std::move(out)});
    }
    if (A.ndim() == 3 && B.ndim() == 2 && A.shape[0] == B.shape[0] &&
        A.shape[2] == B.shape[1]) {
      long Bn = A.shape[0], M = A.shape[1], K = A.shape[2];
      Tensor out({Bn, M});
      for (long i = 0; i < Bn; ++i) {
        detail::MapV(out.data.data() + i * M, M).noalias() =
            detail::CMapM(A.data.data() + i * M * K, M, K) *
            detail::CMapV(B.data.data() + i * K, K);
      }
      return push(Node{Op::kMatMul, {a, b}, std::move(out)});
    }
    throw shape_error("matmul", A, B);
  }

  // Same-shape elementwise add, or broadcast of a vector [N] over the
  // leading batch dimension of [B,N].
  int add(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.same_shape(B)) {
      Tensor out = A;
      const double* pb = B.data.data();
      double* po = out.data.data();
      for (long i = 0; i < out.size(); ++i) po[i] += pb[i];
      return push(Node{Op::kAdd, {a, b}, std::move(out)});
    }
    if (A.ndim() == 2 && B.ndim() == 1 && A.shape[1] == B.shape[0]) {
      long Bn = A.shape[0], N = A.shape[1];
      Tensor out = A;
      for (long i = 0; i < Bn; ++i)
        for (long j = 0; j < N; ++j) out.data[i * N + j] += B.data[j];
      return push(Node{Op::kAdd, {a, b}, std::move(out)});
    }
    throw shape_error("add", A, B);
  }

  int mul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) throw shape_error("mul", A, B);
    Tensor out = A;
    for (long i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
    return push(Node{Op::kMul, {a, b}, std::move(out)});
  }

  int scalar_mul(int a, double s) {
    Tensor out = val(a);
    for (double& v : out.data) v *= s;
    Node n{Op::kScalarMul, {a}, std::move(out)};
    n.scalar = s;
    return push(std::move(n));
  }

  // N-ary concatenation along the last axis of 1-D or 2-D tensors.
  int concat(const std::vector<int>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat: no inputs");
    const Tensor& first = val(xs[0]);
    long nd = first.ndim();
    if (nd == 1) {
      long total = 0;
      for (int x : xs) {
        if (val(x).ndim() != 1) throw shape_error("concat", first, val(x));
        total += val(x).shape[0];
      }
      Tensor out({total});
      long off = 0;
      for (int x : xs) {
        const Tensor& t = val(x);
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + off);
        off += t.size();
      }
      return push(Node{Op::kConcat, xs, std::move(out)});
    }
    if (nd == 2) {
      long Bn = first.shape[0], total = 0;
      for (int x : xs) {
        const Tensor& t = val(x);
        if (t.ndim() != 2 || t.shape[0] != Bn) throw shape_error("concat", first, t);
        total += t.shape[1];
      }
      Tensor out({Bn, total});
      long off = 0;
      for (int x : xs) {
        const Tensor& t = val(x);
        long N = t.shape[1];
        for (long i = 0; i < Bn; ++i)
          std::copy(t.data.begin() + i * N, t.data.begin() + (i + 1) * N,
                    out.data.begin() + i * total + off);
        off += N;
      }
      return push(Node{Op::kConcat, xs, std::move(out)});
    }
    throw std::invalid_argument(std::string("concat: unsupported rank for shape ") +
                                Tensor::shape_str(first.shape));
  }

  // Contiguous slice [offset, offset+extent) along the last axis.
  int slice(int a, long offset, long extent) {
    const Tensor& A = val(a);
    long last = A.shape.back();
    if (offset < 0 || extent <= 0 || offset + extent > last) {
      throw std::invalid_argument("slice: range [" + std::to_string(offset) + "," +
                                  std::to_string(offset + extent) +
                                  ") out of bounds for shape " +
                                  Tensor::shape_str(A.shape));
    }
    std::vector<long> oshape = A.shape;
    oshape.back() = extent;
    Tensor out(oshape);
    long rows = A.size() / last;
    for (long i = 0; i < rows; ++i)
      std::copy(A.data.begin() + i * last + offset,
                A.data.begin() + i * last + offset + extent,
                out.data.begin() + i * extent);
    Node n{Op::kSlice, {a}, std::move(out)};
    n.offset = offset;
    n.extent = extent;
    return push(std::move(n));
  }

  int tanh(int a) { return unary(Op::kTanh, a, [](double x) { return std::tanh(x); }); }

  int sigmoid(int a) {
    return unary(Op::kSigmoid, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }

  // gradient at exactly 0 is defined as 0
  int relu(int a) { return unary(Op::kRelu, a, [](double x) { return x > 0 ? x : 0.0; }); }

  int softplus(int a) {
    return unary(Op::kSoftplus, a, [](double x) {
      return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    });
  }

  int exp(int a) { return unary(Op::kExp, a, [](double x) { return std::exp(x); }); }
  int log(int a) { return unary(Op::kLog, a, [](double x) { return std::log(x); }); }

  int mean(int a) {
    const Tensor& A = val(a);
    double s = 0;
    for (double v : A.data) s += v;
    return push(Node{Op::kMean, {a}, Tensor::scalar(s / static_cast<double>(A.size()))});
  }

  int sum(int a) {
    const Tensor& A = val(a);
    double s = 0;
    for (double v : A.data) s += v;
    return push(Node{Op::kSum, {a}, Tensor::scalar(s)});
  }

  // Batched outer product: [B,M] x [B,N] -> [B,M,N].
  int outer(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.ndim() != 2 || B.ndim() != 2 || A.shape[0] != B.shape[0])
      throw shape_error("outer", A, B);
    long Bn = A.shape[0], M = A.shape[1], N = B.shape[1];
    Tensor out({Bn, M, N});
    for (long i = 0; i < Bn; ++i) {
      const double* pa = A.data.data() + i * M;
      const double* pb = B.data.data() + i * N;
      double* po = out.data.data() + i * M * N;
      for (long r = 0; r < M; ++r)
        for (long c = 0; c < N; ++c) po[r * N + c] = pa[r] * pb[c];
    }
    return push(Node{Op::kOuter, {a, b}, std::move(out)});
  }

  // Row gather from a [V,E] table; gradient scatters into the picked rows.
  int embed(int table, std::vector<long> tokens) {
    const Tensor& T = val(table);
    if (T.ndim() != 2)
      throw std::invalid_argument(std::string("embedding_lookup: table must be 2-D, got ") +
                                  Tensor::shape_str(T.shape));
    long V = T.shape[0], E = T.shape[1];
    for (long tok : tokens) {
      if (tok < 0 || tok >= V)
        throw std::invalid_argument("embedding_lookup: token id " + std::to_string(tok) +
                                    " out of range [0," + std::to_string(V) + ")");
    }
    long Bn = static_cast<long>(tokens.size());
    Tensor out({Bn, E});
    for (long i = 0; i < Bn; ++i)
      std::copy(T.data.begin() + tokens[static_cast<size_t>(i)] * E,
                T.data.begin() + (tokens[static_cast<size_t>(i)] + 1) * E,
                out.data.begin() + i * E);
    Node n{Op::kEmbed, {table}, std::move(out)};
    n.indices = std::move(tokens);
    return push(std::move(n));
  }

  // Per-row normalization with population variance and eps = 1e-5.
  int layer_norm(int v, int gain, int bias) {
    static constexpr double kEps = 1e-5;
    const Tensor& X = val(v);
    const Tensor& G = val(gain);
    const Tensor& C = val(bias);
    if (X.ndim() != 2 || G.ndim() != 1 || C.ndim() != 1 || G.shape[0] != X.shape[1] ||
        C.shape[0] != X.shape[1])
      throw shape_error("layer_norm", X, G);
    long Bn = X.shape[0], H = X.shape[1];
    Tensor out({Bn, H});
    Tensor xhat({Bn, H});
    Tensor inv_std({Bn});
    for (long i = 0; i < Bn; ++i) {
      const double* px = X.data.data() + i * H;
      double m = 0;
      for (long j = 0; j < H; ++j) m += px[j];
      m /= static_cast<double>(H);
      double var = 0;
      for (long j = 0; j < H; ++j) var += (px[j] - m) * (px[j] - m);
      var /= static_cast<double>(H);
      double inv = 1.0 / std::sqrt(var + kEps);
      inv_std.data[i] = inv;
      for (long j = 0; j < H; ++j) {
        double xh = (px[j] - m) * inv;
        xhat.data[i * H + j] = xh;
        out.data[i * H + j] = xh * G.data[j] + C.data[j];
      }
    }
    Node n{Op::kLayerNorm, {v, gain, bias}, std::move(out)};
    n.saved.push_back(std::move(xhat));
    n.saved.push_back(std::move(inv_std));
    return push(std::move(n));
  }

  // Mean over the batch of -log softmax(logits)[target]; max-stabilized.
  int softmax_cross_entropy(int logits, std::vector<long> targets) {
    const Tensor& L = val(logits);
    if (L.ndim() != 2 || static_cast<long>(targets.size()) != L.shape[0])
      throw std::invalid_argument(
          std::string("softmax_cross_entropy: logits ") + Tensor::shape_str(L.shape) +
          " vs " + std::to_string(targets.size()) + " targets");
    long Bn = L.shape[0], C = L.shape[1];
    for (long t : targets) {
      if (t < 0 || t >= C)
        throw std::invalid_argument("softmax_cross_entropy: target " + std::to_string(t) +
                                    " out of range [0," + std::to_string(C) + ")");
    }
    Tensor probs({Bn, C});
    double loss = 0;
    for (long i = 0; i < Bn; ++i) {
      const double* pl = L.data.data() + i * C;
      double mx = pl[0];
      for (long j = 1; j < C; ++j) mx = std::max(mx, pl[j]);
      double z = 0;
      for (long j = 0; j < C; ++j) {
        double e = std::exp(pl[j] - mx);
        probs.data[i * C + j] = e;
        z += e;
      }
      for (long j = 0; j < C; ++j) probs.data[i * C + j] /= z;
      loss -= pl[targets[static_cast<size_t>(i)]] - mx - std::log(z);
    }
    Node n{Op::kSoftmaxXent, {logits}, Tensor::scalar(loss / static_cast<double>(Bn))};
    n.indices = std::move(targets);
    n.saved.push_back(std::move(probs));
    return push(std::move(n));
  }

  // ---- backward --------------------------------------------------------

  GradMap backward(int loss) const {
    const Tensor& L = val(loss);
    if (L.size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                  Tensor::shape_str(L.shape));
    GradMap grads(nodes_.size());
    grads[static_cast<size_t>(loss)] = Tensor::scalar(1.0);
    for (int id = loss; id >= 0; --id) {
      const Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.needs_grad || grads[static_cast<size_t>(id)].data.empty()) continue;
      propagate(id, n, grads);
    }
    return grads;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<int> param_ids_;

  int push(Node n) {
    if (n.op != Op::kParam) {
      for (int i : n.inputs)
        if (nodes_[static_cast<size_t>(i)].needs_grad) {
          n.needs_grad = true;
          break;
        }
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  template <typename F>
  int unary(Op op, int a, F f) {
    Tensor out = val(a);
    for (double& v : out.data) v = f(v);
    return push(Node{op, {a}, std::move(out)});
  }

  static std::invalid_argument shape_error(const char* prim, const Tensor& a, const Tensor& b) {
    return std::invalid_argument(std::string(prim) + ": incompatible shapes " +
                                 Tensor::shape_str(a.shape) + " and " +
                                 Tensor::shape_str(b.shape));
  }

  // Accumulate into grads[id], allocating zeros on first touch. Fan-out
  // nodes therefore sum the gradients of all their consumers.
  Tensor& grad_slot(int id, GradMap& grads) const {
    Tensor& g = grads[static_cast<size_t>(id)];
    if (g.data.empty()) g = Tensor::zeros(val(id).shape);
    return g;
  }

  bool wants(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  void propagate(int id, const Node& n, GradMap& grads) const {
    const Tensor& g = grads[static_cast<size_t>(id)];
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        return;
      case Op::kMatMul: {
        const Tensor& A = val(n.inputs[0]);
        const Tensor& B = val(n.inputs[1]);
        if (A.ndim() == 2) {
          long M = A.shape[0], K = A.shape[1], N = B.shape[1];
          if (wants(n.inputs[0])) {
            Tensor& da = grad_slot(n.inputs[0], grads);
            detail::MapM(da.data.data(), M, K).noalias() +=
                detail::CMapM(g.data.data(), M, N) *
                detail::CMapM(B.data.data(), K, N).transpose();
          }
          if (wants(n.inputs[1])) {
            Tensor& db = grad_slot(n.inputs[1], grads);
            detail::MapM(db.data.data(), K, N).noalias() +=
                detail::CMapM(A.data.data(), M, K).transpose() *
                detail::CMapM(g.data.data(), M, N);
          }
        } else {
          long Bn = A.shape[0], M = A.shape[1], K = A.shape[2];
          if (wants(n.inputs[0])) {
            Tensor& da = grad_slot(n.inputs[0], grads);
            for (long i = 0; i < Bn; ++i)
              detail::MapM(da.data.data() + i * M * K, M, K).noalias() +=
                  detail::CMapV(g.data.data() + i * M, M) *
                  detail::CMapV(B.data.data() + i * K, K).transpose();
          }
          if (wants(n.inputs[1])) {
            Tensor& db = grad_slot(n.inputs[1], grads);
            for (long i = 0; i < Bn; ++i)
              detail::MapV(db.data.data() + i * K, K).noalias() +=
                  detail::CMapM(A.data.data() + i * M * K, M, K).transpose() *
                  detail::CMapV(g.data.data() + i * M, M);
          }
        }
        return;
      }
      case Op::kAdd: {
        const Tensor& A = val(n.inputs[0]);
        const Tensor& B = val(n.inputs[1]);
        if (wants(n.inputs[0])) {
          Tensor& da = grad_slot(n.inputs[0], grads);
          for (long i = 0; i < da.size(); ++i) da.data[i] += g.data[i];
        }
        if (wants(n.inputs[1])) {
          Tensor& db = grad_slot(n.inputs[1], grads);
          if (A.same_shape(B)) {
            for (long i = 0; i < db.size(); ++i) db.data[i] += g.data[i];
          } else {  // broadcast over leading batch dim: sum rows
            long Bn = A.shape[0], N = A.shape[1];
            for (long i = 0; i < Bn; ++i)
              for (long j = 0; j < N; ++j) db.data[j] += g.data[i * N + j];
          }
        }
        return;
      }
      case Op::kMul: {
        const Tensor& A = val(n.inputs[0]);
        const Tensor& B = val(n.inputs[1]);
        if (wants(n.inputs[0])) {
          Tensor& da = grad_slot(n.inputs[0], grads);
          for (long i = 0; i < da.size(); ++i) da.data[i] += g.data[i] * B.data[i];
        }
        if (wants(n.inputs[1])) {
          Tensor& db = grad_slot(n.inputs[1], grads);
          for (long i = 0; i < db.size(); ++i) db.data[i] += g.data[i] * A.data[i];
        }
        return;
      }
      case Op::kScalarMul: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i) da.data[i] += g.data[i] * n.scalar;
        return;
      }
      case Op::kConcat: {
        long nd = n.value.ndim();
        long total = n.value.shape.back();
        long off = 0;
        for (int in : n.inputs) {
          const Tensor& t = val(in);
          long N = t.shape.back();
          if (wants(in)) {
            Tensor& di = grad_slot(in, grads);
            if (nd == 1) {
              for (long j = 0; j < N; ++j) di.data[j] += g.data[off + j];
            } else {
              long Bn = t.shape[0];
              for (long i = 0; i < Bn; ++i)
                for (long j = 0; j < N; ++j)
                  di.data[i * N + j] += g.data[i * total + off + j];
            }
          }
          off += N;
        }
        return;
      }
      case Op::kSlice: {
        if (!wants(n.inputs[0])) return;
        const Tensor& A = val(n.inputs[0]);
        long last = A.shape.back();
        long rows = A.size() / last;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < rows; ++i)
          for (long j = 0; j < n.extent; ++j)
            da.data[i * last + n.offset + j] += g.data[i * n.extent + j];
        return;
      }
      case Op::kTanh: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i) {
          double y = n.value.data[i];
          da.data[i] += g.data[i] * (1.0 - y * y);
        }
        return;
      }
      case Op::kSigmoid: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i) {
          double y = n.value.data[i];
          da.data[i] += g.data[i] * y * (1.0 - y);
        }
        return;
      }
      case Op::kRelu: {
        if (!wants(n.inputs[0])) return;
        const Tensor& A = val(n.inputs[0]);
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i)
          if (A.data[i] > 0) da.data[i] += g.data[i];
        return;
      }
      case Op::kSoftplus: {
        if (!wants(n.inputs[0])) return;
        const Tensor& A = val(n.inputs[0]);
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i)
          da.data[i] += g.data[i] / (1.0 + std::exp(-A.data[i]));
        return;
      }
      case Op::kExp: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i) da.data[i] += g.data[i] * n.value.data[i];
        return;
      }
      case Op::kLog: {
        if (!wants(n.inputs[0])) return;
        const Tensor& A = val(n.inputs[0]);
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < da.size(); ++i) da.data[i] += g.data[i] / A.data[i];
        return;
      }
      case Op::kMean: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        double s = g.data[0] / static_cast<double>(da.size());
        for (double& v : da.data) v += s;
        return;
      }
      case Op::kSum: {
        if (!wants(n.inputs[0])) return;
        Tensor& da = grad_slot(n.inputs[0], grads);
        for (double& v : da.data) v += g.data[0];
        return;
      }
      case Op::kOuter: {
        const Tensor& A = val(n.inputs[0]);
        const Tensor& B = val(n.inputs[1]);
        long Bn = A.shape[0], M = A.shape[1], N = B.shape[1];
        if (wants(n.inputs[0])) {
          Tensor& da = grad_slot(n.inputs[0], grads);
          for (long i = 0; i < Bn; ++i)
            detail::MapV(da.data.data() + i * M, M).noalias() +=
                detail::CMapM(g.data.data() + i * M * N, M, N) *
                detail::CMapV(B.data.data() + i * N, N);
        }
        if (wants(n.inputs[1])) {
          Tensor& db = grad_slot(n.inputs[1], grads);
          for (long i = 0; i < Bn; ++i)
            detail::MapV(db.data.data() + i * N, N).noalias() +=
                detail::CMapM(g.data.data() + i * M * N, M, N).transpose() *
                detail::CMapV(A.data.data() + i * M, M);
        }
        return;
      }
      case Op::kEmbed: {
        if (!wants(n.inputs[0])) return;
        Tensor& dt = grad_slot(n.inputs[0], grads);
        long E = n.value.shape[1];
        for (size_t i = 0; i < n.indices.size(); ++i) {
          long row = n.indices[i];
          for (long j = 0; j < E; ++j)
            dt.data[row * E + j] += g.data[static_cast<long>(i) * E + j];
        }
        return;
      }
      case Op::kLayerNorm: {
        const Tensor& G = val(n.inputs[1]);
        const Tensor& xhat = n.saved[0];
        const Tensor& inv_std = n.saved[1];
        long Bn = n.value.shape[0], H = n.value.shape[1];
        if (wants(n.inputs[0])) {
          Tensor& dv = grad_slot(n.inputs[0], grads);
          for (long i = 0; i < Bn; ++i) {
            double mean_dxh = 0, mean_dxh_xh = 0;
            for (long j = 0; j < H; ++j) {
              double dxh = g.data[i * H + j] * G.data[j];
              mean_dxh += dxh;
              mean_dxh_xh += dxh * xhat.data[i * H + j];
            }
            mean_dxh /= static_cast<double>(H);
            mean_dxh_xh /= static_cast<double>(H);
            for (long j = 0; j < H; ++j) {
              double dxh = g.data[i * H + j] * G.data[j];
              dv.data[i * H + j] +=
                  inv_std.data[i] * (dxh - mean_dxh - xhat.data[i * H + j] * mean_dxh_xh);
            }
          }
        }
        if (wants(n.inputs[1])) {
          Tensor& dg = grad_slot(n.inputs[1], grads);
          for (long i = 0; i < Bn; ++i)
            for (long j = 0; j < H; ++j)
              dg.data[j] += g.data[i * H + j] * xhat.data[i * H + j];
        }
        if (wants(n.inputs[2])) {
          Tensor& db = grad_slot(n.inputs[2], grads);
          for (long i = 0; i < Bn; ++i)
            for (long j = 0; j < H; ++j) db.data[j] += g.data[i * H + j];
        }
        return;
      }
      case Op::kSoftmaxXent: {
        if (!wants(n.inputs[0])) return;
        const Tensor& probs = n.saved[0];
        long Bn = probs.shape[0], C = probs.shape[1];
        double scale = g.data[0] / static_cast<double>(Bn);
        Tensor& dl = grad_slot(n.inputs[0], grads);
        for (long i = 0; i < Bn; ++i) {
          for (long j = 0; j < C; ++j) dl.data[i * C + j] += scale * probs.data[i * C + j];
          dl.data[i * C + n.indices[static_cast<size_t>(i)]] -= scale;
        }
        return;
      }
    }
  }
};

}  // namespace crnn
