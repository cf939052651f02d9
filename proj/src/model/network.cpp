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

#include "convlens/network.hpp"

#include <algorithm>

#include "convlens/error.hpp"

namespace convlens {

Network::Network(WeightContainer container) {
  validate_container(container);
  arch_ = container.arch;
  preprocessing_ = container.preprocessing;
  shapes_ = infer_shapes(arch_);
  params_.resize(arch_.layers.size());
  head_start_ = arch_.layers.size();

  std::map<std::string, std::size_t> uses;
  for (const auto& l : arch_.layers) {
    for (const auto& name : l.weight_names) ++uses[name];
  }
  // Tensors bound once are moved out of the container; shared ones are copied.
  auto take = [&](const std::string& name) {
    auto it = std::find_if(container.tensors.begin(), container.tensors.end(),
                           [&](const NamedTensor& t) { return t.name == name; });
    return --uses[name] == 0 ? std::move(it->tensor) : it->tensor;
  };

  for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
    const LayerSpec& l = arch_.layers[i];
    if (l.kind == LayerKind::Conv) conv_layers_.push_back(i);
    const bool head = l.kind == LayerKind::Flatten || l.kind == LayerKind::Dense;
    if (head && head_start_ == arch_.layers.size()) head_start_ = i;
    if (l.has_weights()) params_[i] = {take(l.weight_names[0]), take(l.weight_names[1])};
  }
}

const Tensor& Network::weight(std::size_t index) const {
  if (!arch_.layers.at(index).has_weights()) {
    throw RangeError("layer " + std::to_string(index) + " has no weights");
  }
  return params_[index].first;
}

const Tensor& Network::bias(std::size_t index) const {
  if (!arch_.layers.at(index).has_weights()) {
    throw RangeError("layer " + std::to_string(index) + " has no bias");
  }
  return params_[index].second;
}

std::size_t Network::conv_ordinal_to_layer_index(std::size_t ordinal) const {
  if (ordinal < 1 || ordinal > conv_layers_.size()) {
    throw RangeError("conv ordinal " + std::to_string(ordinal) + " out of range 1.." +
                     std::to_string(conv_layers_.size()));
  }
  return conv_layers_[ordinal - 1];
}

std::size_t Network::feature_layer_for_ordinal(std::size_t ordinal) const {
  const std::size_t conv = conv_ordinal_to_layer_index(ordinal);
  if (conv + 1 < layer_count() && arch_.layers[conv + 1].kind == LayerKind::Relu) return conv + 1;
  return conv;
}

std::optional<std::size_t> Network::conv_ordinal_of(std::size_t index) const {
  auto it = std::find(conv_layers_.begin(), conv_layers_.end(), index);
  if (it == conv_layers_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - conv_layers_.begin()) + 1;
}

Network load_network(WeightContainer container) { return Network(std::move(container)); }

namespace {

Tensor apply_layer(const Network& net, std::size_t i, const Tensor& x, ActivationTrace* bookkeeping) {
  const LayerSpec& l = net.layer(i);
  switch (l.kind) {
    case LayerKind::Conv:
      return conv2d(x, net.weight(i), net.bias(i), ConvParams{l.stride, l.padding});
    case LayerKind::Relu:
      if (bookkeeping) bookkeeping->pre_activation.insert_or_assign(i, x);
      return relu(x);
    case LayerKind::MaxPool: {
      PoolResult r = maxpool2d(x);
      if (bookkeeping) bookkeeping->pool_argmax.insert_or_assign(i, std::move(r.argmax));
      return std::move(r.output);
    }
    case LayerKind::Flatten:
      return x.reshaped({x.size()});
    case LayerKind::Dense:
      return dense(x, net.weight(i), net.bias(i));
    case LayerKind::Softmax:
      return softmax(x);
  }
  throw ArchError("unknown layer kind");
}

}  // namespace

ForwardResult forward(const Network& net, const Tensor& input, const ForwardOptions& options) {
  if (input.shape() != net.input_shape()) {
    throw ShapeError("network expects input " + shape_to_string(net.input_shape()) + ", got " +
                     shape_to_string(input.shape()));
  }
  for (std::size_t idx : options.capture) {
    if (idx >= net.layer_count()) {
      throw RangeError("capture index " + std::to_string(idx) + " out of range for " +
                       std::to_string(net.layer_count()) + " layers");
    }
  }
  if (options.backward_from && *options.backward_from >= net.layer_count()) {
    throw RangeError("backward_from index " + std::to_string(*options.backward_from) + " out of range");
  }
  std::optional<std::size_t> bookkeeping_after = options.backward_from;
  if (!bookkeeping_after && !options.capture.empty()) bookkeeping_after = *options.capture.rbegin();

  ForwardResult result;
  Tensor x = input;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const bool keep = bookkeeping_after && i > *bookkeeping_after;
    x = apply_layer(net, i, x, keep ? &result.trace : nullptr);
    if (i == net.logits_layer()) result.logits = x;
    if (options.capture.contains(i)) result.trace.entries.emplace(i, x);
  }
  result.probs = std::move(x);
  return result;
}

Tensor forward_segment(const Network& net, Tensor x, std::size_t begin, std::size_t end) {
  if (begin > end || end > net.layer_count()) throw RangeError("invalid layer range");
  if (x.shape() != net.layer_input_shape(begin)) {
    throw ShapeError("layer " + std::to_string(begin) + " expects input " +
                     shape_to_string(net.layer_input_shape(begin)) + ", got " +
                     shape_to_string(x.shape()));
  }
  for (std::size_t i = begin; i < end; ++i) x = apply_layer(net, i, x, nullptr);
  return x;
}

}  // namespace convlens
