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

#include "convlens/render.hpp"

#include <algorithm>
#include <cmath>

#include "convlens/error.hpp"

namespace convlens {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

struct Plane {
  const float* data;
  std::size_t h, w;
};

Plane plane_of(const Tensor& t) {
  if (t.rank() == 2) return {t.data().data(), t.dim(0), t.dim(1)};
  if (t.rank() == 3 && t.dim(0) == 1) return {t.data().data(), t.dim(1), t.dim(2)};
  throw ShapeError("expected a single H x W channel, got " + shape_to_string(t.shape()));
}

// Grayscale tile of one plane at integer scale, drawn at (ox, oy).
void draw_gray(RgbImage& img, Plane p, std::size_t scale, std::size_t ox, std::size_t oy) {
  const std::size_t n = p.h * p.w;
  const auto [lo, hi] = std::minmax_element(p.data, p.data + n);
  const double min = *lo, range = static_cast<double>(*hi) - min;
  for (std::size_t y = 0; y < p.h; ++y) {
    for (std::size_t x = 0; x < p.w; ++x) {
      const std::uint8_t g = range > 0.0 ? to_u8((p.data[y * p.w + x] - min) / range * 255.0) : 128;
      for (std::size_t dy = 0; dy < scale; ++dy) {
        for (std::size_t dx = 0; dx < scale; ++dx) {
          img.set(ox + x * scale + dx, oy + y * scale + dy, {g, g, g});
        }
      }
    }
  }
}

void fill_rect(RgbImage& img, std::size_t ox, std::size_t oy, std::size_t w, std::size_t h, Rgb c) {
  for (std::size_t y = oy; y < oy + h; ++y) {
    for (std::size_t x = ox; x < ox + w; ++x) img.set(x, y, c);
  }
}

}  // namespace

std::size_t tile_scale(std::size_t height, std::size_t width) {
  const std::size_t shorter = std::max<std::size_t>(1, std::min(height, width));
  return std::max<std::size_t>(1, (kMinTileSide + shorter - 1) / shorter);
}

RgbImage channel_to_grayscale(const Tensor& channel) {
  const Plane p = plane_of(channel);
  const std::size_t s = tile_scale(p.h, p.w);
  RgbImage img(p.w * s, p.h * s);
  draw_gray(img, p, s, 0, 0);
  return img;
}

bool is_dead_channel(const Tensor& activations, std::size_t channel, double dead_eps) {
  const std::size_t plane = activations.dim(1) * activations.dim(2);
  const auto v = activations.data().subspan(channel * plane, plane);
  return static_cast<double>(*std::max_element(v.begin(), v.end())) <= dead_eps;
}

RgbImage channel_grid(const Tensor& activations, double dead_eps, std::size_t cols) {
  if (activations.rank() != 3) {
    throw ShapeError("channel_grid expects K x H x W, got " + shape_to_string(activations.shape()));
  }
  if (cols < 1) throw RangeError("channel_grid needs at least one column");
  const std::size_t k = activations.dim(0), h = activations.dim(1), w = activations.dim(2);
  const std::size_t s = tile_scale(h, w);
  const std::size_t tw = w * s, th = h * s;
  const std::size_t rows = (k + cols - 1) / cols;
  RgbImage grid(cols * tw + (cols + 1) * kSeparatorWidth, rows * th + (rows + 1) * kSeparatorWidth,
                kSeparator);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t ox = kSeparatorWidth + (c % cols) * (tw + kSeparatorWidth);
    const std::size_t oy = kSeparatorWidth + (c / cols) * (th + kSeparatorWidth);
    if (is_dead_channel(activations, c, dead_eps)) {
      fill_rect(grid, ox, oy, tw, th, kDeadTint);
    } else {
      draw_gray(grid, Plane{activations.data().data() + c * h * w, h, w}, s, ox, oy);
    }
  }
  return grid;
}

Rgb jet_colormap(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto ramp = [v](double center) { return std::clamp(1.5 - std::abs(4.0 * v - center), 0.0, 1.0); };
  return {to_u8(ramp(3.0) * 255.0), to_u8(ramp(2.0) * 255.0), to_u8(ramp(1.0) * 255.0)};
}

RgbImage render_overlay(const RgbImage& image, const Tensor& heatmap, double blend) {
  const Plane p = plane_of(heatmap);
  if (p.h != image.height() || p.w != image.width()) {
    throw ShapeError("heatmap " + shape_to_string(heatmap.shape()) + " does not match image " +
                     std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  if (!(blend >= 0.0 && blend <= 1.0)) throw RangeError("blend must lie in [0, 1]");
  RgbImage out(image.width(), image.height());
  for (std::size_t y = 0; y < p.h; ++y) {
    for (std::size_t x = 0; x < p.w; ++x) {
      const Rgb a = image.at(x, y);
      const Rgb b = jet_colormap(p.data[y * p.w + x]);
      auto mix = [blend](std::uint8_t u, std::uint8_t v) { return to_u8((1.0 - blend) * u + blend * v); };
      out.set(x, y, {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)});
    }
  }
  return out;
}

}  // namespace convlens
