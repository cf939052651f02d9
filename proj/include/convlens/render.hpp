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

#include "convlens/image.hpp"
#include "convlens/tensor.hpp"

namespace convlens {

inline constexpr Rgb kDeadTint{0, 0, 200};
inline constexpr Rgb kSeparator{255, 255, 255};
inline constexpr std::size_t kSeparatorWidth = 2;
inline constexpr std::size_t kMinTileSide = 64;
inline constexpr double kDefaultBlend = 0.5;
inline constexpr double kDefaultDeadEpsilon = 1e-6;

/// Integer nearest-neighbour upscale factor that brings the shorter side to
/// at least kMinTileSide pixels.
std::size_t tile_scale(std::size_t height, std::size_t width);

/// Min-max scaled grayscale rendering of one channel (H x W or 1 x H x W).
/// A constant channel renders as uniform 128.
RgbImage channel_to_grayscale(const Tensor& channel);

/// True when the channel never exceeds `dead_eps`.
bool is_dead_channel(const Tensor& activations, std::size_t channel, double dead_eps);

/// All K channels as tiles in row-major order, `cols` per row, separated and
/// framed by kSeparatorWidth-pixel lines. Dead channels are solid kDeadTint.
RgbImage channel_grid(const Tensor& activations, double dead_eps, std::size_t cols);

/// Jet colormap: blue-cyan at 0, green at 0.5, dark red at 1.
Rgb jet_colormap(double v);

/// Per pixel (1 - blend) * image + blend * jet(heatmap), rounded half up.
RgbImage render_overlay(const RgbImage& image, const Tensor& heatmap, double blend);

}  // namespace convlens
