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

// Serial kernels written directly from the per-element formulas.

#include <cstdint>

#include "checks.hpp"
#include "convlens/kernels.hpp"

namespace convlens::reference {

namespace {

// Input coordinate for output coordinate `o` and tap `k`, or -1 in the padding.
std::int64_t tap(std::size_t o, std::size_t k, std::size_t in, ConvParams p) {
  const auto v = static_cast<std::int64_t>(o * p.stride + k) - static_cast<std::int64_t>(p.padding);
  return (v < 0 || v >= static_cast<std::int64_t>(in)) ? -1 : v;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvParams params) {
  const auto g = detail::check_conv(input, weight, bias, params);
  Tensor out({g.out_c, g.out_h, g.out_w});
  for (std::size_t o = 0; o < g.out_c; ++o) {
    for (std::size_t y = 0; y < g.out_h; ++y) {
      for (std::size_t x = 0; x < g.out_w; ++x) {
        float acc = bias[o];
        for (std::size_t i = 0; i < g.in_c; ++i) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const auto iy = tap(y, ky, g.in_h, params);
            if (iy < 0) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const auto ix = tap(x, kx, g.in_w, params);
              if (ix < 0) continue;
              const float wv = weight[((o * g.in_c + i) * g.kernel_h + ky) * g.kernel_w + kx];
              acc += wv * input.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out[(o * g.out_h + y) * g.out_w + x] = acc;
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0f ? input[i] : 0.0f;
  return out;
}

PoolResult maxpool2d(const Tensor& input) {
  detail::check_pool(input);
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  PoolResult r{Tensor({c, h / 2, w / 2}), ArgmaxRecord{input.shape(), {}}};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h / 2; ++y) {
      for (std::size_t x = 0; x < w / 2; ++x) {
        std::size_t best = (ch * h + 2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        r.output[(ch * (h / 2) + y) * (w / 2) + x] = input[best];
        r.argmax.indices.push_back(best);
      }
    }
  }
  return r;
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  detail::check_dense(input, weight, bias);
  const std::size_t rows = weight.dim(0), cols = weight.dim(1);
  Tensor out({rows});
  for (std::size_t m = 0; m < rows; ++m) {
    float acc = bias[m];
    for (std::size_t n = 0; n < cols; ++n) acc += weight[m * cols + n] * input[n];
    out[m] = acc;
  }
  return out;
}

Tensor conv2d_input_adjoint(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                            ConvParams params) {
  const auto g = detail::check_conv_adjoint(grad_out, weight, input_shape, params);
  const auto s = static_cast<std::int64_t>(params.stride);
  const auto pad = static_cast<std::int64_t>(params.padding);
  Tensor grad_in(input_shape);
  for (std::size_t i = 0; i < g.in_c; ++i) {
    for (std::size_t iy = 0; iy < g.in_h; ++iy) {
      for (std::size_t ix = 0; ix < g.in_w; ++ix) {
        float acc = 0.0f;
        for (std::size_t o = 0; o < g.out_c; ++o) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const std::int64_t ny = static_cast<std::int64_t>(iy) + pad - static_cast<std::int64_t>(ky);
            if (ny < 0 || ny % s != 0 || ny / s >= static_cast<std::int64_t>(g.out_h)) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const std::int64_t nx = static_cast<std::int64_t>(ix) + pad - static_cast<std::int64_t>(kx);
              if (nx < 0 || nx % s != 0 || nx / s >= static_cast<std::int64_t>(g.out_w)) continue;
              const float wv = weight[((o * g.in_c + i) * g.kernel_h + ky) * g.kernel_w + kx];
              acc += wv * grad_out.at(o, static_cast<std::size_t>(ny / s), static_cast<std::size_t>(nx / s));
            }
          }
        }
        grad_in[(i * g.in_h + iy) * g.in_w + ix] = acc;
      }
    }
  }
  return grad_in;
}

Tensor dense_input_adjoint(const Tensor& grad_out, const Tensor& weight) {
  detail::check_dense_adjoint(grad_out, weight);
  const std::size_t rows = weight.dim(0), cols = weight.dim(1);
  Tensor grad_in({cols});
  for (std::size_t n = 0; n < cols; ++n) {
    float acc = 0.0f;
    for (std::size_t m = 0; m < rows; ++m) acc += weight[m * cols + n] * grad_out[m];
    grad_in[n] = acc;
  }
  return grad_in;
}

Tensor maxpool2d_adjoint(const Tensor& grad_out, const ArgmaxRecord& argmax) {
  detail::check_pool_adjoint(grad_out, argmax);
  Tensor grad_in(argmax.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[argmax.indices[o]] += grad_out[o];
  return grad_in;
}

}  // namespace convlens::reference
