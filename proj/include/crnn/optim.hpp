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

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnn/params.hpp"
#include "crnn/tape.hpp"
#include "crnn/tensor.hpp"

namespace crnn {

/// Bias-corrected Adam over a ParamStore. Moment tensors are allocated on
/// first use with shapes matching each parameter.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  long step_count() const { return step_; }

  /// Applies one update from the staged gradients. `grad_clip` > 0 rescales
  /// by global norm first. Non-finite gradients abort with a diagnostic
  /// naming the parameter.
  void step(ParamStore& params, const std::vector<int>& staged_ids, const GradMap& grads,
            double grad_clip = 0.0) {
    ensure_state(params);
    double clip_scale = 1.0;
    if (grad_clip > 0.0) {
      double sq = 0.0;
      for (int p = 0; p < params.size(); ++p) {
        const Tensor& g = grads[static_cast<size_t>(staged_ids[static_cast<size_t>(p)])];
        for (double v : g.data) sq += v * v;
      }
      double norm = std::sqrt(sq);
      if (norm > grad_clip) clip_scale = grad_clip / norm;
    }
    ++step_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (int p = 0; p < params.size(); ++p) {
      const Tensor& g = grads[static_cast<size_t>(staged_ids[static_cast<size_t>(p)])];
      if (g.data.empty()) continue;  // parameter not touched by this loss
      Tensor& value = params.value(p);
      Tensor& m = m_[static_cast<size_t>(p)];
      Tensor& v = v_[static_cast<size_t>(p)];
      for (long i = 0; i < value.size(); ++i) {
        double gi = g.data[i] * clip_scale;
        if (!std::isfinite(gi))
          throw std::runtime_error("adam_step: non-finite gradient in parameter '" +
                                   params.name(p) + "'");
        m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * gi;
        v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * gi * gi;
        double mh = m.data[i] / bc1;
        double vh = v.data[i] / bc2;
        value.data[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Tensor> m_, v_;

  void ensure_state(const ParamStore& params) {
    if (static_cast<int>(m_.size()) == params.size()) return;
    m_.clear();
    v_.clear();
    for (int p = 0; p < params.size(); ++p) {
      m_.push_back(Tensor::zeros(params.value(p).shape));
      v_.push_back(Tensor::zeros(params.value(p).shape));
    }
  }
};

}  // namespace crnn
