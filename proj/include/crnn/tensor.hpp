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
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnn {

/// Dense row-major tensor of doubles with explicit shape. The universal
/// value carrier for the tape, cells and training code. Immutable by
/// convention once placed on a tape.
struct Tensor {
  std::vector<long> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<long> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel(shape)), 0.0);
  }

  Tensor(std::vector<long> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != static_cast<long>(data.size())) {
      throw std::invalid_argument("Tensor: shape/data size mismatch: shape " +
                                  shape_str(shape) + " vs " +
                                  std::to_string(data.size()) + " elements");
    }
  }

  static long numel(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension in shape " + shape_str(s));
      n *= d;
    }
    return n;
  }

  static std::string shape_str(const std::vector<long>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
  }

  long size() const { return static_cast<long>(data.size()); }
  long ndim() const { return static_cast<long>(shape.size()); }

  static Tensor zeros(std::vector<long> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<long> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor row(std::vector<double> d) {
    long n = static_cast<long>(d.size());
    return Tensor({n}, std::move(d));
  }

  double& at(long i) { return data[static_cast<size_t>(i)]; }
  double at(long i) const { return data[static_cast<size_t>(i)]; }
  double& at(long i, long j) { return data[static_cast<size_t>(i * shape[1] + j)]; }
  double at(long i, long j) const { return data[static_cast<size_t>(i * shape[1] + j)]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline double frobenius_norm(const Tensor& t) {
  double s = 0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

}  // namespace crnn
