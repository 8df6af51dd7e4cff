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

#ifndef KGALIGN_GCN_HPP
#define KGALIGN_GCN_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

enum class Activation { kRelu, kIdentity, kTanh };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& z, Activation a) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out;
  switch (a) {
    case Activation::kRelu: out = z.cwiseMax(Scalar(0)); break;
    case Activation::kTanh: out = z.array().tanh().matrix(); break;
    case Activation::kIdentity: out = z; break;
  }
  return out;
}

// Elementwise derivative of the activation evaluated at pre-activation `z`.
template <typename Derived>
auto activation_derivative(const Eigen::MatrixBase<Derived>& z, Activation a) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out;
  switch (a) {
    case Activation::kRelu: out = (z.array() > Scalar(0)).template cast<Scalar>().matrix(); break;
    case Activation::kTanh: out = (Scalar(1) - z.array().tanh().square()).matrix(); break;
    case Activation::kIdentity: out = Matrix<Scalar>::Ones(z.rows(), z.cols()); break;
  }
  return out;
}

// Intermediate values of one forward pass, kept for backpropagation.
template <typename Scalar>
struct GcnTape {
  std::vector<Matrix<Scalar>> aggregated;      // Â·E^(l)
  std::vector<Matrix<Scalar>> pre_activation;  // Â·E^(l)·M^(l)
  Matrix<Scalar> output;
};

// Stacked layers E^(l+1) = φ(Â E^(l) M^(l)) over a normalized adjacency Â.
template <typename Scalar>
GcnTape<Scalar> gcn_forward_tape(const SparseMatrix<Scalar>& norm_adjacency,
                                 const Matrix<Scalar>& input,
                                 const std::vector<Matrix<Scalar>>& weights, Activation act) {
  if (norm_adjacency.rows() != input.rows() || norm_adjacency.cols() != input.rows()) {
    throw std::invalid_argument("gcn: adjacency is " + std::to_string(norm_adjacency.rows()) +
                                "x" + std::to_string(norm_adjacency.cols()) + " but input has " +
                                std::to_string(input.rows()) + " rows");
  }
  GcnTape<Scalar> tape;
  Matrix<Scalar> h = input;
  for (const auto& m : weights) {
    if (m.rows() != h.cols()) throw std::invalid_argument("gcn: weight/feature dimension mismatch");
    tape.aggregated.push_back(norm_adjacency * h);
    tape.pre_activation.push_back(tape.aggregated.back() * m);
    h = activate(tape.pre_activation.back(), act);
  }
  tape.output = std::move(h);
  return tape;
}

template <typename Scalar>
Matrix<Scalar> gcn_forward(const SparseMatrix<Scalar>& norm_adjacency, const Matrix<Scalar>& input,
                           const std::vector<Matrix<Scalar>>& weights, Activation act) {
  return gcn_forward_tape(norm_adjacency, input, weights, act).output;
}

template <typename Scalar>
struct GcnGradients {
  Matrix<Scalar> input;
  std::vector<Matrix<Scalar>> weights;
};

// Pulls d(loss)/d(output) back to the raw features and every weight matrix.
// Assumes a symmetric adjacency, which holds for the undirected KG graph.
template <typename Scalar>
GcnGradients<Scalar> gcn_backward(const SparseMatrix<Scalar>& norm_adjacency,
                                  const std::vector<Matrix<Scalar>>& weights,
                                  const GcnTape<Scalar>& tape, Activation act,
                                  Matrix<Scalar> grad_output) {
  const auto layers = weights.size();
  GcnGradients<Scalar> grads;
  grads.weights.resize(layers);
  Matrix<Scalar> g = std::move(grad_output);
  for (std::size_t l = layers; l-- > 0;) {
    Matrix<Scalar> gz = g.cwiseProduct(activation_derivative(tape.pre_activation[l], act));
    grads.weights[l].noalias() = tape.aggregated[l].transpose() * gz;
    Matrix<Scalar> gzm = gz * weights[l].transpose();
    g = norm_adjacency * gzm;  // Â is symmetric
  }
  grads.input = std::move(g);
  return grads;
}

}  // namespace kgalign

#endif  // KGALIGN_GCN_HPP
