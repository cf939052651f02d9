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
#include <vector>

#include "convlens/tensor.hpp"

namespace convlens {

struct ConvParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Per output element of a max pool, the flat input index holding the max.
struct ArgmaxRecord {
  Shape input_shape;
  std::vector<std::size_t> indices;
};

struct PoolResult {
  Tensor output;
  ArgmaxRecord argmax;
};

/// Spatial output size of a convolution, or 0 when the window does not fit.
std::size_t conv_output_dim(std::size_t in, std::size_t kernel, ConvParams params);

// Forward kernels. Each output element is accumulated in a fixed order, so the
// parallel kernels here and the serial ones in convlens::reference return
// identical bits for any thread count.

/// CHW input, OIHW weight, zero padding. Accumulates bias, then i, ky, kx.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvParams params);
Tensor relu(const Tensor& input);
/// 2x2 window, stride 2. Ties go to the first element in row-major window order.
PoolResult maxpool2d(const Tensor& input);
/// out[m] = bias[m] + sum over n ascending of weight[m, n] * in[n].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor softmax(const Tensor& logits);
/// Half-pixel-center bilinear resize of every channel of a CHW tensor.
Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w);

// Adjoint kernels: gradients with respect to a layer's input given the
// gradient with respect to its output.

/// Transposed convolution of `grad_out` (O x Ho x Wo) back to an input of `input_shape`.
Tensor conv2d_input_adjoint(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                            ConvParams params);
/// Weight-transposed matvec.
Tensor dense_input_adjoint(const Tensor& grad_out, const Tensor& weight);
/// Passes gradient where `pre_activation` > 0, zero elsewhere (including exactly 0).
Tensor relu_adjoint(const Tensor& grad_out, const Tensor& pre_activation);
/// Routes each output gradient to its argmax input; collisions accumulate.
Tensor maxpool2d_adjoint(const Tensor& grad_out, const ArgmaxRecord& argmax);

namespace reference {

// Serial, loop-per-formula versions of the kernels above. Kept for tests and
// benchmarks; results match the parallel kernels bit for bit.

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvParams params);
Tensor relu(const Tensor& input);
PoolResult maxpool2d(const Tensor& input);
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor conv2d_input_adjoint(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                            ConvParams params);
Tensor dense_input_adjoint(const Tensor& grad_out, const Tensor& weight);
Tensor maxpool2d_adjoint(const Tensor& grad_out, const ArgmaxRecord& argmax);

}  // namespace reference

}  // namespace convlens
