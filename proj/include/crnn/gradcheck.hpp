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
#include <functional>
#include <string>
#include <vector>

#include "crnn/params.hpp"
#include "crnn/tape.hpp"

namespace crnn {

/// Builds a scalar loss from staged parameters. Must be deterministic: two
/// calls with the same parameter values produce the same loss.
using LossBuilder = std::function<int(Tape&, const std::vector<int>&)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;
  bool all_pass = true;
};

inline double gradcheck_forward(ParamStore& params, const LossBuilder& build) {
  Tape tape;
  std::vector<int> ids = params.stage(tape);
  int loss = build(tape, ids);
  return tape.val(loss).data[0];
}

/// Compares tape gradients against central finite differences for every
/// element of every parameter. Report-only: never throws on failure.
inline GradCheckReport finite_difference_check(ParamStore& params, const LossBuilder& build,
                                               double tolerance, double step = 1e-5) {
  GradCheckReport report;
  report.tolerance = tolerance;

  Tape tape;
  std::vector<int> ids = params.stage(tape);
  int loss = build(tape, ids);
  GradMap grads = tape.backward(loss);

  for (int p = 0; p < params.size(); ++p) {
    GradCheckEntry entry;
    entry.name = params.name(p);
    Tensor& value = params.value(p);
    const Tensor& analytic = grads[static_cast<size_t>(ids[static_cast<size_t>(p)])];
    for (long i = 0; i < value.size(); ++i) {
      double saved = value.data[i];
      value.data[i] = saved + step;
      double up = gradcheck_forward(params, build);
      value.data[i] = saved - step;
      double down = gradcheck_forward(params, build);
      value.data[i] = saved;
      double fd = (up - down) / (2.0 * step);
      double ad = analytic.data.empty() ? 0.0 : analytic.data[i];
      double rel = std::abs(ad - fd) /
                   std::max({1.0, std::abs(ad), std::abs(fd)});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    entry.pass = entry.max_rel_err < tolerance;
    report.all_pass = report.all_pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace crnn
