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

#include "convlens/gradcam.hpp"

#include <algorithm>

#include "convlens/error.hpp"
#include "convlens/gradients.hpp"
#include "convlens/kernels.hpp"

namespace convlens {

namespace {

constexpr float kNormalizeEpsilon = 1e-12f;

}  // namespace

bool GradCamResult::degenerate() const {
  const auto v = raw_map.data();
  return std::none_of(v.begin(), v.end(), [](float x) { return x > 0.0f; });
}

Tensor channel_weights(const Tensor& grads) {
  if (grads.rank() != 3) {
    throw ShapeError("channel_weights expects K x H x W gradients, got " + shape_to_string(grads.shape()));
  }
  const std::size_t k_count = grads.dim(0), plane = grads.dim(1) * grads.dim(2);
  Tensor alphas({k_count});
  for (std::size_t k = 0; k < k_count; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < plane; ++j) sum += grads[k * plane + j];
    alphas[k] = static_cast<float>(sum / static_cast<double>(plane));
  }
  return alphas;
}

Tensor gradcam_map(const Tensor& activations, const Tensor& alphas) {
  if (activations.rank() != 3 || alphas.rank() != 1 || alphas.dim(0) != activations.dim(0)) {
    throw ShapeError("gradcam_map: " + std::to_string(alphas.size()) + " weights for activations " +
                     shape_to_string(activations.shape()));
  }
  const std::size_t h = activations.dim(1), w = activations.dim(2), plane = h * w;
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const double a = alphas[k];
    for (std::size_t j = 0; j < plane; ++j) acc[j] += a * activations[k * plane + j];
  }
  Tensor map({1, h, w});
  for (std::size_t j = 0; j < plane; ++j) map[j] = acc[j] > 0.0 ? static_cast<float>(acc[j]) : 0.0f;
  return map;
}

Tensor normalize_map(const Tensor& raw) {
  Tensor out(raw.shape());
  const auto v = raw.data();
  const float peak = v.empty() ? 0.0f : *std::max_element(v.begin(), v.end());
  if (!(peak > kNormalizeEpsilon)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i] / peak, 0.0f, 1.0f);
  return out;
}

GradCamResult compute_gradcam(const Network& net, const Tensor& input,
                              std::optional<std::size_t> class_index,
                              std::optional<std::size_t> conv_ordinal) {
  GradCamResult r;
  r.conv_ordinal = conv_ordinal.value_or(net.conv_layer_count());
  const std::size_t target = net.feature_layer_for_ordinal(r.conv_ordinal);

  ForwardOptions options;
  options.capture = {target};
  options.backward_from = target;
  const ForwardResult fwd = forward(net, input, options);

  if (class_index) {
    if (*class_index >= net.num_classes()) {
      throw RangeError("class index " + std::to_string(*class_index) + " out of range for " +
                       std::to_string(net.num_classes()) + " classes");
    }
    r.class_index = *class_index;
  } else {
    const auto logits = fwd.logits.data();
    r.class_index = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  r.logit = fwd.logits[r.class_index];
  r.probability = fwd.probs[r.class_index];

  const Tensor& activations = fwd.trace.entries.at(target);
  const Tensor grads = backward_to_layer(net, fwd.trace, r.class_index, target);
  r.alphas = channel_weights(grads);
  r.raw_map = gradcam_map(activations, r.alphas);
  r.heatmap = normalize_map(bilinear_resize(r.raw_map, net.input_shape()[1], net.input_shape()[2]));
  return r;
}

}  // namespace convlens
