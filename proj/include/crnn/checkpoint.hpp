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

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crnn/data.hpp"
#include "crnn/params.hpp"

namespace crnn {

/// Text container of named parameter tensors plus the resolved-config hash.
/// Values are written with %.17g so save -> load is bit-exact.
struct Checkpoint {
  std::string config_hash;
  std::vector<std::pair<std::string, Tensor>> params;

  static Checkpoint from_store(const ParamStore& store, std::string config_hash) {
    Checkpoint ck;
    ck.config_hash = std::move(config_hash);
    for (int i = 0; i < store.size(); ++i) ck.params.emplace_back(store.name(i), store.value(i));
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "crnn-checkpoint v1\n";
    out << "config_hash " << config_hash << "\n";
    for (const auto& [name, tensor] : params) {
      out << "param " << name << " " << tensor.ndim();
      for (long d : tensor.shape) out << " " << d;
      out << "\n";
      for (long i = 0; i < tensor.size(); ++i)
        out << (i ? " " : "") << fmt_double(tensor.data[i]);
      out << "\n";
    }
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "crnn-checkpoint v1")
      throw std::runtime_error("not a checkpoint file: " + path);
    Checkpoint ck;
    if (!std::getline(in, line) || line.rfind("config_hash ", 0) != 0)
      throw std::runtime_error("checkpoint missing config_hash: " + path);
    ck.config_hash = line.substr(12);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream hs(line);
      std::string tag, name;
      long ndim;
      if (!(hs >> tag >> name >> ndim) || tag != "param")
        throw std::runtime_error("malformed checkpoint entry in " + path);
      std::vector<long> shape(static_cast<size_t>(ndim));
      for (long& d : shape)
        if (!(hs >> d)) throw std::runtime_error("malformed shape in " + path);
      Tensor t(shape);
      if (!std::getline(in, line)) throw std::runtime_error("truncated checkpoint: " + path);
      std::istringstream vs(line);
      for (long i = 0; i < t.size(); ++i)
        if (!(vs >> t.data[i])) throw std::runtime_error("truncated values in " + path);
      ck.params.emplace_back(std::move(name), std::move(t));
    }
    return ck;
  }

  /// Writes the stored values into a model's ParamStore. Names and shapes
  /// must match exactly; a dimension mismatch is rejected.
  void apply(ParamStore& store) const {
    if (static_cast<int>(params.size()) != store.size())
      throw std::runtime_error("checkpoint has " + std::to_string(params.size()) +
                               " parameters, model expects " + std::to_string(store.size()));
    for (int i = 0; i < store.size(); ++i) {
      const auto& [name, tensor] = params[static_cast<size_t>(i)];
      if (name != store.name(i))
        throw std::runtime_error("checkpoint parameter '" + name + "' does not match model '" +
                                 store.name(i) + "'");
      if (tensor.shape != store.value(i).shape)
        throw std::runtime_error("checkpoint parameter '" + name + "' shape " +
                                 Tensor::shape_str(tensor.shape) + " does not match model " +
                                 Tensor::shape_str(store.value(i).shape));
      store.value(i) = tensor;
    }
  }
};

}  // namespace crnn
