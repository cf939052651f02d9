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

#include "convlens/network.hpp"
#include "convlens/tensor.hpp"

namespace convlens {

struct GradCamResult {
  std::size_t class_index = 0;
  std::size_t conv_ordinal = 0;
  /// Rectified weighted channel sum at feature-map resolution (1 x Hc x Wc).
  Tensor raw_map;
  /// raw_map resized to the network input and divided by its max (1 x H x W, in [0, 1]).
  Tensor heatmap;
  /// Per-channel weights: spatial mean of the gradient.
  Tensor alphas;
  float logit = 0.0f;
  float probability = 0.0f;

  /// True when raw_map has no positive value; the heatmap is then all zero.
  bool degenerate() const;
};

/// Global-average-pooled gradients, one weight per channel of a K x Hc x Wc tensor.
Tensor channel_weights(const Tensor& grads);

/// max(0, sum_k alphas[k] * activations[k]) as a 1 x Hc x Wc map.
Tensor gradcam_map(const Tensor& activations, const Tensor& alphas);

/// Divides by the max; all zeros when the max is not above 1e-12.
Tensor normalize_map(const Tensor& raw);

/// Full pipeline: forward with backward bookkeeping, gradient of the class
/// logit at the conv's feature layer, channel weights, map, resize to the
/// input's H x W, normalize.
///
/// `class_index` defaults to the argmax of the logits, `conv_ordinal` to the
/// last conv layer.
GradCamResult compute_gradcam(const Network& net, const Tensor& input,
                              std::optional<std::size_t> class_index = std::nullopt,
                              std::optional<std::size_t> conv_ordinal = std::nullopt);

}  // namespace convlens
