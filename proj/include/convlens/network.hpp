/*
 * Copyright 2026 The convlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "convlens/arch.hpp"
#include "convlens/container.hpp"
#include "convlens/kernels.hpp"
#include "convlens/tensor.hpp"

namespace convlens {

/// An architecture with its weights bound. Immutable after construction and
/// safe to share between threads.
class Network {
 public:
  explicit Network(WeightContainer container);

  const ArchSpec& arch() const noexcept { return arch_; }
  const Preprocessing& preprocessing() const noexcept { return preprocessing_; }
  const Shape& input_shape() const noexcept { return arch_.input_shape; }
  std::size_t layer_count() const noexcept { return arch_.layers.size(); }
  const LayerSpec& layer(std::size_t index) const { return arch_.layers.at(index); }

  /// Output shape of layer `index`.
  const Shape& output_shape(std::size_t index) const { return shapes_.at(index); }
  /// Input shape of layer `index` (the network input for index 0).
  const Shape& layer_input_shape(std::size_t index) const {
    return index == 0 ? arch_.input_shape : shapes_.at(index - 1);
  }

  const Tensor& weight(std::size_t index) const;
  const Tensor& bias(std::size_t index) const;

  std::size_t num_classes() const noexcept { return shapes_.back()[0]; }
  /// Index of the dense layer whose output is the logits (just before softmax).
  std::size_t logits_layer() const noexcept { return layer_count() - 2; }
  /// Index of the first flatten or dense layer; everything from here on is the classifier head.
  std::size_t head_start() const noexcept { return head_start_; }

  /// The conv count n.
  std::size_t conv_layer_count() const noexcept { return conv_layers_.size(); }
  const std::vector<std::size_t>& conv_layers() const noexcept { return conv_layers_; }
  /// Arch index of the conv at 1-based `ordinal`. Throws RangeError.
  std::size_t conv_ordinal_to_layer_index(std::size_t ordinal) const;
  /// Layer whose output is the visualized feature map of a conv: the relu
  /// directly after it when present, otherwise the conv itself.
  std::size_t feature_layer_for_ordinal(std::size_t ordinal) const;
  /// 1-based conv ordinal of layer `index`, if it is a conv.
  std::optional<std::size_t> conv_ordinal_of(std::size_t index) const;

 private:
  ArchSpec arch_;
  Preprocessing preprocessing_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> conv_layers_;
  std::size_t head_start_ = 0;
  // Per layer: weight/bias for conv and dense, empty tensors otherwise.
  std::vector<std::pair<Tensor, Tensor>> params_;
};

Network load_network(WeightContainer container);

/// Intermediate values recorded by a forward pass.
struct ActivationTrace {
  std::map<std::size_t, Tensor> entries;
  std::map<std::size_t, ArgmaxRecord> pool_argmax;
  /// Relu inputs, needed for the relu adjoint.
  std::map<std::size_t, Tensor> pre_activation;
};

struct ForwardOptions {
  /// Layer indices whose outputs go into the trace.
  std::set<std::size_t> capture;
  /// Record backward bookkeeping (relu inputs, pool argmax) for every layer after
  /// this one. When unset, bookkeeping starts after the deepest captured layer.
  std::optional<std::size_t> backward_from;
};

struct ForwardResult {
  Tensor logits;
  Tensor probs;
  ActivationTrace trace;
};

ForwardResult forward(const Network& net, const Tensor& input, const ForwardOptions& options = {});

/// Applies layers [begin, end) to `x`, where `x` is the input of layer `begin`.
Tensor forward_segment(const Network& net, Tensor x, std::size_t begin, std::size_t end);

}  // namespace convlens
