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

#include "convlens/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "checks.hpp"

namespace convlens {

using detail::ConvGeometry;

std::size_t conv_output_dim(std::size_t in, std::size_t kernel, ConvParams params) {
  if (params.stride == 0) return 0;
  const std::size_t padded = in + 2 * params.padding;
  if (padded < kernel) return 0;
  return (padded - kernel) / params.stride + 1;
}

namespace {

// Output positions x whose tap x*stride + k - pad lands inside [0, in).
struct TapRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

TapRange valid_taps(std::size_t k, std::size_t in, std::size_t out, ConvParams p) {
  const auto s = static_cast<std::int64_t>(p.stride);
  const auto offset = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(p.padding);
  // smallest x with x*s + offset >= 0
  std::int64_t lo = offset >= 0 ? 0 : (-offset + s - 1) / s;
  // largest x with x*s + offset <= in - 1
  std::int64_t hi_num = static_cast<std::int64_t>(in) - 1 - offset;
  if (hi_num < 0) return {};
  std::int64_t hi = std::min<std::int64_t>(hi_num / s, static_cast<std::int64_t>(out) - 1);
  if (hi < lo) return {};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi + 1)};
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvParams params) {
  const ConvGeometry g = detail::check_conv(input, weight, bias, params);
  Tensor out({g.out_c, g.out_h, g.out_w});
  const float* in = input.data().data();
  const float* w = weight.data().data();
  float* dst_all = out.data().data();
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t s = params.stride;

  const auto out_c = static_cast<std::int64_t>(g.out_c);
#pragma omp parallel for schedule(static)
  for (std::int64_t oi = 0; oi < out_c; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    float* dst = dst_all + o * out_plane;
    std::fill(dst, dst + out_plane, bias[o]);
    for (std::size_t i = 0; i < g.in_c; ++i) {
      const float* src = in + i * in_plane;
      const float* wk = w + ((o * g.in_c + i) * g.kernel_h) * g.kernel_w;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const TapRange rows = valid_taps(ky, g.in_h, g.out_h, params);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const TapRange cols = valid_taps(kx, g.in_w, g.out_w, params);
          const float wv = wk[ky * g.kernel_w + kx];
          if (cols.begin >= cols.end) continue;
          const std::size_t count = cols.end - cols.begin;
          const std::size_t first_col = cols.begin * s + kx - params.padding;
          for (std::size_t y = rows.begin; y < rows.end; ++y) {
            const float* row = src + (y * s + ky - params.padding) * g.in_w + first_col;
            float* drow = dst + y * g.out_w + cols.begin;
            if (s == 1) {
              for (std::size_t j = 0; j < count; ++j) drow[j] += wv * row[j];
            } else {
              for (std::size_t j = 0; j < count; ++j) drow[j] += wv * row[j * s];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  const float* src = input.data().data();
  float* dst = out.data().data();
  const auto n = static_cast<std::int64_t>(input.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
  return out;
}

PoolResult maxpool2d(const Tensor& input) {
  detail::check_pool(input);
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult result{Tensor({c, oh, ow}), ArgmaxRecord{input.shape(), {}}};
  result.argmax.indices.resize(c * oh * ow);
  const float* src = input.data().data();
  float* dst = result.output.data().data();
  std::size_t* arg = result.argmax.indices.data();

  const auto channels = static_cast<std::int64_t>(c);
#pragma omp parallel for schedule(static)
  for (std::int64_t ci = 0; ci < channels; ++ci) {
    const auto ch = static_cast<std::size_t>(ci);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = (ch * h + 2 * y) * w + 2 * x;
        const std::size_t taps[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = taps[0];
        for (int t = 1; t < 4; ++t) {
          if (src[taps[t]] > src[best]) best = taps[t];
        }
        const std::size_t o = (ch * oh + y) * ow + x;
        dst[o] = src[best];
        arg[o] = best;
      }
    }
  }
  return result;
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  detail::check_dense(input, weight, bias);
  const std::size_t m_count = weight.dim(0), n_count = weight.dim(1);
  Tensor out({m_count});
  const float* in = input.data().data();
  const float* w = weight.data().data();
  float* dst = out.data().data();
  const auto rows = static_cast<std::int64_t>(m_count);
#pragma omp parallel for schedule(static)
  for (std::int64_t mi = 0; mi < rows; ++mi) {
    const auto m = static_cast<std::size_t>(mi);
    const float* wrow = w + m * n_count;
    float acc = bias[m];
    for (std::size_t n = 0; n < n_count; ++n) acc += wrow[n] * in[n];
    dst[m] = acc;
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw ShapeError("softmax expects rank 1, got " + detail::dims(logits));
  const auto values = logits.data();
  const float peak = *std::max_element(values.begin(), values.end());
  std::vector<double> e(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    e[i] = std::exp(static_cast<double>(values[i]) - static_cast<double>(peak));
    total += e[i];
  }
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(e[i] / total);
  return out;
}

Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  if (input.rank() != 3) {
    throw ShapeError("bilinear_resize expects CHW, got " + detail::dims(input));
  }
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize target must be non-empty");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t out, std::size_t in) {
    std::vector<Tap> t(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return t;
  };
  const auto ys = taps(out_h, h);
  const auto xs = taps(out_w, w);

  Tensor out({c, out_h, out_w});
  const float* src = input.data().data();
  float* dst = out.data().data();
  const auto planes = static_cast<std::int64_t>(c * out_h);
#pragma omp parallel for schedule(static)
  for (std::int64_t pi = 0; pi < planes; ++pi) {
    const auto ch = static_cast<std::size_t>(pi) / out_h;
    const auto y = static_cast<std::size_t>(pi) % out_h;
    const float* plane = src + ch * h * w;
    const Tap& ty = ys[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      const double top = (1.0 - tx.frac) * plane[ty.lo * w + tx.lo] + tx.frac * plane[ty.lo * w + tx.hi];
      const double bottom =
          (1.0 - tx.frac) * plane[ty.hi * w + tx.lo] + tx.frac * plane[ty.hi * w + tx.hi];
      dst[(ch * out_h + y) * out_w + x] = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bottom);
    }
  }
  return out;
}

Tensor conv2d_input_adjoint(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                            ConvParams params) {
  const ConvGeometry g = detail::check_conv_adjoint(grad_out, weight, input_shape, params);
  Tensor grad_in(input_shape);
  const float* go = grad_out.data().data();
  const float* w = weight.data().data();
  float* gi_all = grad_in.data().data();
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t s = params.stride;

  // Each input element receives its terms in (o, ky, kx) order: for a fixed
  // (ky, kx) at most one output position maps onto it.
  const auto in_c = static_cast<std::int64_t>(g.in_c);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < in_c; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    float* gi = gi_all + i * in_plane;
    for (std::size_t o = 0; o < g.out_c; ++o) {
      const float* gplane = go + o * out_plane;
      const float* wk = w + ((o * g.in_c + i) * g.kernel_h) * g.kernel_w;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const TapRange rows = valid_taps(ky, g.in_h, g.out_h, params);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const TapRange cols = valid_taps(kx, g.in_w, g.out_w, params);
          const float wv = wk[ky * g.kernel_w + kx];
          if (cols.begin >= cols.end) continue;
          const std::size_t count = cols.end - cols.begin;
          const std::size_t first_col = cols.begin * s + kx - params.padding;
          for (std::size_t y = rows.begin; y < rows.end; ++y) {
            float* row = gi + (y * s + ky - params.padding) * g.in_w + first_col;
            const float* grow = gplane + y * g.out_w + cols.begin;
            for (std::size_t j = 0; j < count; ++j) row[j * s] += wv * grow[j];
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor dense_input_adjoint(const Tensor& grad_out, const Tensor& weight) {
  detail::check_dense_adjoint(grad_out, weight);
  const std::size_t m_count = weight.dim(0), n_count = weight.dim(1);
  Tensor grad_in({n_count});
  const float* w = weight.data().data();
  const float* go = grad_out.data().data();
  float* gi = grad_in.data().data();

  // Columns are split across threads; each column sums rows in ascending order.
  constexpr std::size_t kBlock = 256;
  const auto blocks = static_cast<std::int64_t>((n_count + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t bi = 0; bi < blocks; ++bi) {
    const std::size_t begin = static_cast<std::size_t>(bi) * kBlock;
    const std::size_t end = std::min(begin + kBlock, n_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      const float gm = go[m];
      const float* wrow = w + m * n_count;
      for (std::size_t n = begin; n < end; ++n) gi[n] += wrow[n] * gm;
    }
  }
  return grad_in;
}

Tensor relu_adjoint(const Tensor& grad_out, const Tensor& pre_activation) {
  if (grad_out.shape() != pre_activation.shape()) {
    throw ShapeError("relu adjoint gradient " + detail::dims(grad_out) +
                     " does not match pre-activation " + detail::dims(pre_activation));
  }
  Tensor grad_in(grad_out.shape());
  const float* go = grad_out.data().data();
  const float* pre = pre_activation.data().data();
  float* gi = grad_in.data().data();
  const auto n = static_cast<std::int64_t>(grad_out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) gi[i] = pre[i] > 0.0f ? go[i] : 0.0f;
  return grad_in;
}

Tensor maxpool2d_adjoint(const Tensor& grad_out, const ArgmaxRecord& argmax) {
  detail::check_pool_adjoint(grad_out, argmax);
  Tensor grad_in(argmax.input_shape);
  const std::size_t channels = argmax.input_shape[0];
  const std::size_t per_channel = grad_out.size() / channels;
  const float* go = grad_out.data().data();
  const std::size_t* arg = argmax.indices.data();
  float* gi = grad_in.data().data();
  const auto c_count = static_cast<std::int64_t>(channels);
  // Argmax indices of channel c always fall inside input channel c.
#pragma omp parallel for schedule(static)
  for (std::int64_t ci = 0; ci < c_count; ++ci) {
    const std::size_t begin = static_cast<std::size_t>(ci) * per_channel;
    for (std::size_t o = begin; o < begin + per_channel; ++o) gi[arg[o]] += go[o];
  }
  return grad_in;
}

}  // namespace convlens
