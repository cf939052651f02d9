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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convlens/tensor.hpp"

namespace convlens {

enum class LayerKind { Conv, Relu, MaxPool, Flatten, Dense, Softmax };

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  // conv
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // dense
  std::size_t out_features = 0;
  // maxpool (only 2/2 is supported)
  std::size_t window = 2;
  std::size_t pool_stride = 2;
  /// Weight then bias for conv and dense; empty otherwise.
  std::vector<std::string> weight_names;

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                        std::size_t padding, std::string weight, std::string bias);
  static LayerSpec dense(std::size_t out_features, std::string weight, std::string bias);
  static LayerSpec of(LayerKind kind);

  bool has_weights() const { return kind == LayerKind::Conv || kind == LayerKind::Dense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::vector<std::string> class_labels;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Walks the shape chain and returns each layer's output shape.
/// Throws ArchError when the chain breaks or layer ordering rules are violated:
/// at least one conv, exactly one softmax and it is last, preceded by a dense.
std::vector<Shape> infer_shapes(const ArchSpec& arch);

/// Weight and bias shapes a conv/dense layer expects given its input shape.
std::pair<Shape, Shape> required_param_shapes(const LayerSpec& layer, const Shape& input_shape);

/// Canonical VGG16: 3x224x224 input, 13 conv3x3 layers in five pooled blocks,
/// then 4096-4096-num_classes dense head and softmax.
ArchSpec build_vgg16(std::size_t num_classes);

/// Conv ordinals picked by the quarter rule: round-half-up of n/4, n/2 and 3n/4,
/// plus n itself, clamped to [1, n], deduplicated and ascending.
std::vector<std::size_t> select_fraction_layers(std::size_t conv_count);

}  // namespace convlens
