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

#include "crnn/tape.hpp"
#include "crnn/tensor.hpp"

namespace crnn {

/// Named trainable tensors owned outside the tape. Each training step stages
/// the current values onto a fresh tape (one param node per entry, in
/// insertion order) and applies optimizer updates back to the stored values.
class ParamStore {
 public:
  int add(std::string name, Tensor value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[static_cast<size_t>(i)]; }
  Tensor& value(int i) { return values_[static_cast<size_t>(i)]; }
  const Tensor& value(int i) const { return values_[static_cast<size_t>(i)]; }

  /// Registers every parameter on the tape; result[i] is the node id of
  /// parameter i.
  std::vector<int> stage(Tape& tape) const {
    std::vector<int> ids;
    ids.reserve(values_.size());
    for (const Tensor& v : values_) ids.push_back(tape.param(v));
    return ids;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

}  // namespace crnn
