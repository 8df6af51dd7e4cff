// Copyright 2026 The kgalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGALIGN_AMSGRAD_HPP
#define KGALIGN_AMSGRAD_HPP

#include <cmath>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

// AMSGrad: Adam with a running maximum of the second-moment estimate.
// Step sizes use the usual Adam bias correction.
class AmsGrad {
 public:
  AmsGrad(double lr, double beta1, double beta2, double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  // Registers a parameter of the given shape; returns its slot.
  std::size_t add_slot(Index rows, Index cols) {
    slots_.push_back({MatrixXr::Zero(rows, cols), MatrixXr::Zero(rows, cols),
                      MatrixXr::Zero(rows, cols)});
    return slots_.size() - 1;
  }

  // Advances the shared step counter; call once per optimizer step before
  // updating that step's parameters.
  void begin_step() {
    ++t_;
    const double t = static_cast<double>(t_);
    step_size_ = lr_ * std::sqrt(1.0 - std::pow(beta2_, t)) / (1.0 - std::pow(beta1_, t));
  }

  void update(std::size_t slot, MatrixXr& param, const MatrixXr& grad) {
    auto& s = slots_.at(slot);
    s.m = beta1_ * s.m + (1.0 - beta1_) * grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * grad.cwiseAbs2();
    s.v_hat = s.v_hat.cwiseMax(s.v);
    param.array() -= step_size_ * s.m.array() / (s.v_hat.array().sqrt() + epsilon_);
  }

  long steps() const { return t_; }

 private:
  struct Slot {
    MatrixXr m, v, v_hat;
  };
  double lr_, beta1_, beta2_, epsilon_;
  double step_size_ = 0;
  long t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace kgalign

#endif  // KGALIGN_AMSGRAD_HPP
