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

#include "convlens/arch.hpp"

#include <algorithm>
#include <array>

#include "convlens/error.hpp"
#include "convlens/kernels.hpp"

namespace convlens {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 6> kKindNames{{
    {LayerKind::Conv, "conv"},
    {LayerKind::Relu, "relu"},
    {LayerKind::MaxPool, "maxpool"},
    {LayerKind::Flatten, "flatten"},
    {LayerKind::Dense, "dense"},
    {LayerKind::Softmax, "softmax"},
}};

std::string where(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(layer_kind_name(layer.kind)) + ")";
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

LayerSpec LayerSpec::conv(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                          std::size_t padding, std::string weight, std::string bias) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.weight_names = {std::move(weight), std::move(bias)};
  return l;
}

LayerSpec LayerSpec::dense(std::size_t out_features, std::string weight, std::string bias) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.out_features = out_features;
  l.weight_names = {std::move(weight), std::move(bias)};
  return l;
}

LayerSpec LayerSpec::of(LayerKind kind) {
  LayerSpec l;
  l.kind = kind;
  return l;
}

std::pair<Shape, Shape> required_param_shapes(const LayerSpec& layer, const Shape& input_shape) {
  if (layer.kind == LayerKind::Conv) {
    return {{layer.out_channels, input_shape.at(0), layer.kernel, layer.kernel}, {layer.out_channels}};
  }
  if (layer.kind == LayerKind::Dense) {
    return {{layer.out_features, input_shape.at(0)}, {layer.out_features}};
  }
  throw ArchError(std::string(layer_kind_name(layer.kind)) + " layers have no parameters");
}

std::vector<Shape> infer_shapes(const ArchSpec& arch) {
  const Shape& in = arch.input_shape;
  if (in.size() != 3 || std::find(in.begin(), in.end(), 0u) != in.end()) {
    throw ArchError("input shape must be a non-empty CxHxW, got " + shape_to_string(in));
  }
  if (arch.layers.empty()) throw ArchError("architecture has no layers");

  std::vector<Shape> shapes;
  shapes.reserve(arch.layers.size());
  Shape current = in;
  std::size_t convs = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& layer = arch.layers[i];
    const std::size_t expected_names = layer.has_weights() ? 2 : 0;
    if (layer.weight_names.size() != expected_names) {
      throw ArchError(where(i, layer) + " must bind " + std::to_string(expected_names) +
                      " tensors, has " + std::to_string(layer.weight_names.size()));
    }
    switch (layer.kind) {
      case LayerKind::Conv: {
        if (current.size() != 3) throw ArchError(where(i, layer) + " needs a CHW input");
        if (layer.out_channels == 0 || layer.kernel == 0 || layer.stride == 0) {
          throw ArchError(where(i, layer) + " has a zero out_channels, kernel or stride");
        }
        const ConvParams p{layer.stride, layer.padding};
        const auto h = conv_output_dim(current[1], layer.kernel, p);
        const auto w = conv_output_dim(current[2], layer.kernel, p);
        if (h < 1 || w < 1) {
          throw ArchError(where(i, layer) + " kernel does not fit input " + shape_to_string(current));
        }
        current = {layer.out_channels, h, w};
        ++convs;
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool:
        if (layer.window != 2 || layer.pool_stride != 2) {
          throw ArchError(where(i, layer) + " supports only window 2, stride 2");
        }
        if (current.size() != 3 || current[1] % 2 != 0 || current[2] % 2 != 0) {
          throw ArchError(where(i, layer) + " needs a CHW input with even H and W, got " +
                          shape_to_string(current));
        }
        current = {current[0], current[1] / 2, current[2] / 2};
        break;
      case LayerKind::Flatten:
        if (current.size() != 3) throw ArchError(where(i, layer) + " needs a CHW input");
        current = {shape_numel(current)};
        break;
      case LayerKind::Dense:
        if (current.size() != 1) {
          throw ArchError(where(i, layer) + " needs a flat input, got " + shape_to_string(current));
        }
        if (layer.out_features == 0) throw ArchError(where(i, layer) + " has zero out_features");
        current = {layer.out_features};
        break;
      case LayerKind::Softmax:
        if (i + 1 != arch.layers.size()) throw ArchError(where(i, layer) + " must be the last layer");
        if (i == 0 || arch.layers[i - 1].kind != LayerKind::Dense) {
          throw ArchError(where(i, layer) + " must directly follow a dense layer");
        }
        break;
    }
    shapes.push_back(current);
  }
  if (convs == 0) throw ArchError("architecture has no conv layer");
  if (arch.layers.back().kind != LayerKind::Softmax) {
    throw ArchError("architecture must end with a softmax layer");
  }
  if (!arch.class_labels.empty() && arch.class_labels.size() != shapes.back()[0]) {
    throw ArchError("class_labels has " + std::to_string(arch.class_labels.size()) +
                    " entries for " + std::to_string(shapes.back()[0]) + " classes");
  }
  return shapes;
}

ArchSpec build_vgg16(std::size_t num_classes) {
  if (num_classes < 2) throw ArchError("VGG16 needs at least 2 classes");
  constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kBlocks{
      {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}}};
  ArchSpec arch;
  arch.input_shape = {3, 224, 224};
  for (std::size_t b = 0; b < kBlocks.size(); ++b) {
    const auto [channels, repeats] = kBlocks[b];
    for (std::size_t r = 0; r < repeats; ++r) {
      const std::string name = "conv" + std::to_string(b + 1) + "_" + std::to_string(r + 1);
      arch.layers.push_back(LayerSpec::conv(channels, 3, 1, 1, name + ".weight", name + ".bias"));
      arch.layers.push_back(LayerSpec::of(LayerKind::Relu));
    }
    arch.layers.push_back(LayerSpec::of(LayerKind::MaxPool));
  }
  arch.layers.push_back(LayerSpec::of(LayerKind::Flatten));
  arch.layers.push_back(LayerSpec::dense(4096, "fc6.weight", "fc6.bias"));
  arch.layers.push_back(LayerSpec::of(LayerKind::Relu));
  arch.layers.push_back(LayerSpec::dense(4096, "fc7.weight", "fc7.bias"));
  arch.layers.push_back(LayerSpec::of(LayerKind::Relu));
  arch.layers.push_back(LayerSpec::dense(num_classes, "fc8.weight", "fc8.bias"));
  arch.layers.push_back(LayerSpec::of(LayerKind::Softmax));
  return arch;
}

std::vector<std::size_t> select_fraction_layers(std::size_t conv_count) {
  if (conv_count == 0) return {};
  std::vector<std::size_t> picks;
  for (std::size_t quarter = 1; quarter <= 4; ++quarter) {
    // round_half_up(n * q / 4) in integers
    std::size_t pick = (2 * conv_count * quarter + 4) / 8;
    picks.push_back(std::clamp<std::size_t>(pick, 1, conv_count));
  }
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  return picks;
}

}  // namespace convlens
