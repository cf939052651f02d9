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

// Deterministic networks, images and temp files shared by the test suites.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "convlens/arch.hpp"
#include "convlens/container.hpp"
#include "convlens/image.hpp"
#include "convlens/network.hpp"
#include "convlens/tensor.hpp"

namespace convlens::testing {

using Rng = std::mt19937;

Tensor random_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f);

/// Fills every tensor the arch binds, in layer order, by calling `init(name, shape)`.
WeightContainer make_container(const ArchSpec& arch,
                               const std::function<Tensor(const std::string&, const Shape&)>& init,
                               Preprocessing pre = {});

/// Uniform random weights in [lo, hi].
WeightContainer random_container(const ArchSpec& arch, Rng& rng, float lo = -0.5f, float hi = 0.5f);

/// conv(out_channels, 3x3, pad 1) -> relu -> maxpool -> flatten -> dense(classes) -> softmax.
ArchSpec tiny_arch(Shape input, std::size_t out_channels, std::size_t classes);

/// Two-conv fixture: conv -> relu -> conv -> relu -> maxpool -> flatten -> dense -> softmax.
ArchSpec two_conv_arch(Shape input, std::size_t c1, std::size_t c2, std::size_t classes);

/// VGG16 block layout (13 convs in 2-2-3-3-3 blocks) with channel widths
/// divided by `divisor`, dense width `hidden`, and a square input of side `side`.
ArchSpec slim_vgg_arch(std::size_t side, std::size_t divisor, std::size_t hidden, std::size_t classes);

/// Preprocessing that maps 0..255 to 0..1 for an input of side h x w.
Preprocessing unit_preprocessing(std::size_t h, std::size_t w);

/// 3x8x8 net whose class 0 reads only the red channel in the left half of the
/// pooled feature map and class 1 only the green channel in the right half.
WeightContainer left_right_container();
/// 8x8 image: reddish left half, greenish right half.
RgbImage left_right_image();

/// conv 3 -> `channels` (3x3, pad 1) -> relu -> maxpool -> flatten -> dense 2.
/// Channels in `dead` have zero kernels and bias -1; the others have
/// non-negative kernels and bias 0.5, so they fire on any non-negative input.
WeightContainer dead_channel_container(std::size_t side, std::size_t channels,
                                       const std::set<std::size_t>& dead, std::uint32_t seed);

RgbImage random_image(std::size_t width, std::size_t height, Rng& rng);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void save_container(const WeightContainer& c, const std::filesystem::path& path);
/// Binary PPM; exercises the P6 reader.
void save_ppm(const RgbImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path);

}  // namespace convlens::testing
