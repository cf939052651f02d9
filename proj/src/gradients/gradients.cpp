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

#include "convlens/gradients.hpp"

#include "convlens/error.hpp"
#include "convlens/kernels.hpp"

namespace convlens {

namespace {

[[noreturn]] void missing(const char* what, std::size_t layer) {
  throw BackwardError(std::string("trace has no ") + what + " for layer " + std::to_string(layer) +
                      "; re-run forward with backward intent from the target layer");
}

}  // namespace

Tensor backward_to_layer(const Network& net, const ActivationTrace& trace, std::size_t class_index,
                         std::size_t target_layer) {
  if (class_index >= net.num_classes()) {
    throw RangeError("class index " + std::to_string(class_index) + " out of range for " +
                     std::to_string(net.num_classes()) + " classes");
  }
  if (target_layer >= net.head_start()) {
    throw BackwardError("target layer " + std::to_string(target_layer) +
                        " must precede the classifier head (layer " +
                        std::to_string(net.head_start()) + ")");
  }

  Tensor grad({net.num_classes()});
  grad[class_index] = 1.0f;

  for (std::size_t i = net.logits_layer(); i > target_layer; --i) {
    const LayerSpec& l = net.layer(i);
    switch (l.kind) {
      case LayerKind::Dense:
        grad = dense_input_adjoint(grad, net.weight(i));
        break;
      case LayerKind::Relu: {
        auto it = trace.pre_activation.find(i);
        if (it == trace.pre_activation.end()) missing("relu pre-activation", i);
        grad = relu_adjoint(grad, it->second);
        break;
      }
      case LayerKind::MaxPool: {
        auto it = trace.pool_argmax.find(i);
        if (it == trace.pool_argmax.end()) missing("pool argmax", i);
        if (it->second.input_shape != net.layer_input_shape(i)) {
          throw BackwardError("pool argmax for layer " + std::to_string(i) +
                              " does not match this network");
        }
        grad = maxpool2d_adjoint(grad, it->second);
        break;
      }
      case LayerKind::Conv:
        grad = conv2d_input_adjoint(grad, net.weight(i), net.layer_input_shape(i),
                                    ConvParams{l.stride, l.padding});
        break;
      case LayerKind::Flatten:
        grad = grad.reshaped(net.layer_input_shape(i));
        break;
      case LayerKind::Softmax:
        break;
    }
  }
  return grad;
}

}  // namespace convlens
