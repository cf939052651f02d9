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

// Argument validation shared by the parallel and reference kernels.

#include <string>

#include "convlens/error.hpp"
#include "convlens/kernels.hpp"

namespace convlens::detail {

inline std::string dims(const Tensor& t) { return shape_to_string(t.shape()); }

struct ConvGeometry {
  std::size_t in_c, in_h, in_w, out_c, kernel_h, kernel_w, out_h, out_w;
};

inline ConvGeometry conv_geometry(const Shape& input, const Shape& weight, ConvParams params) {
  if (input.size() != 3) throw ShapeError("conv2d input must be CHW, got " + shape_to_string(input));
  if (weight.size() != 4) {
    throw ShapeError("conv2d weight must be OIHW, got " + shape_to_string(weight));
  }
  if (params.stride == 0) throw ShapeError("conv2d stride must be positive");
  if (weight[1] != input[0]) {
    throw ShapeError("conv2d input has " + std::to_string(input[0]) + " channels but weight " +
                     shape_to_string(weight) + " expects " + std::to_string(weight[1]));
  }
  ConvGeometry g{input[0], input[1], input[2], weight[0], weight[2], weight[3], 0, 0};
  g.out_h = conv_output_dim(g.in_h, g.kernel_h, params);
  g.out_w = conv_output_dim(g.in_w, g.kernel_w, params);
  if (g.out_h < 1 || g.out_w < 1) {
    throw ShapeError("conv2d output would be empty for input " + shape_to_string(input) +
                     ", kernel " + std::to_string(g.kernel_h) + "x" + std::to_string(g.kernel_w) +
                     ", padding " + std::to_string(params.padding));
  }
  return g;
}

inline ConvGeometry check_conv(const Tensor& input, const Tensor& weight, const Tensor& bias,
                               ConvParams params) {
  auto g = conv_geometry(input.shape(), weight.shape(), params);
  if (bias.rank() != 1 || bias.dim(0) != g.out_c) {
    throw ShapeError("conv2d bias " + dims(bias) + " does not match " + std::to_string(g.out_c) +
                     " output channels");
  }
  return g;
}

inline void check_dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 1) throw ShapeError("dense input must be rank 1, got " + dims(input));
  if (weight.rank() != 2 || weight.dim(1) != input.dim(0)) {
    throw ShapeError("dense weight " + dims(weight) + " does not accept input " + dims(input));
  }
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("dense bias " + dims(bias) + " does not match weight " + dims(weight));
  }
}

inline void check_pool(const Tensor& input) {
  if (input.rank() != 3) throw ShapeError("maxpool2d input must be CHW, got " + dims(input));
  if (input.dim(1) % 2 != 0 || input.dim(2) % 2 != 0) {
    throw ShapeError("maxpool2d needs even H and W, got " + dims(input));
  }
}

inline ConvGeometry check_conv_adjoint(const Tensor& grad_out, const Tensor& weight,
                                       const Shape& input_shape, ConvParams params) {
  auto g = conv_geometry(input_shape, weight.shape(), params);
  if (grad_out.shape() != Shape{g.out_c, g.out_h, g.out_w}) {
    throw ShapeError("conv2d adjoint gradient " + dims(grad_out) + " does not match output " +
                     shape_to_string({g.out_c, g.out_h, g.out_w}));
  }
  return g;
}

inline void check_dense_adjoint(const Tensor& grad_out, const Tensor& weight) {
  if (weight.rank() != 2 || grad_out.rank() != 1 || grad_out.dim(0) != weight.dim(0)) {
    throw ShapeError("dense adjoint gradient " + dims(grad_out) + " does not match weight " +
                     dims(weight));
  }
}

inline void check_pool_adjoint(const Tensor& grad_out, const ArgmaxRecord& argmax) {
  if (grad_out.size() != argmax.indices.size() || argmax.input_shape.size() != 3) {
    throw ShapeError("maxpool adjoint gradient " + dims(grad_out) +
                     " does not match its argmax record");
  }
}

}  // namespace convlens::detail
