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

#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>

#include <unistd.h>

namespace convlens::testing {

Tensor random_tensor(Shape shape, Rng& rng, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

WeightContainer make_container(const ArchSpec& arch,
                               const std::function<Tensor(const std::string&, const Shape&)>& init,
                               Preprocessing pre) {
  WeightContainer c;
  c.arch = arch;
  c.preprocessing = pre;
  const auto shapes = infer_shapes(arch);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (!l.has_weights()) continue;
    const auto [ws, bs] = required_param_shapes(l, i == 0 ? arch.input_shape : shapes[i - 1]);
    c.tensors.push_back({l.weight_names[0], init(l.weight_names[0], ws)});
    c.tensors.push_back({l.weight_names[1], init(l.weight_names[1], bs)});
  }
  return c;
}

WeightContainer random_container(const ArchSpec& arch, Rng& rng, float lo, float hi) {
  return make_container(
      arch, [&](const std::string&, const Shape& s) { return random_tensor(s, rng, lo, hi); },
      unit_preprocessing(arch.input_shape[1], arch.input_shape[2]));
}

Preprocessing unit_preprocessing(std::size_t h, std::size_t w) {
  Preprocessing p;
  p.resize_h = h;
  p.resize_w = w;
  p.mean = {0.0, 0.0, 0.0};
  p.scale = {1.0 / 255.0, 1.0 / 255.0, 1.0 / 255.0};
  return p;
}

ArchSpec tiny_arch(Shape input, std::size_t out_channels, std::size_t classes) {
  ArchSpec a;
  a.input_shape = std::move(input);
  a.layers = {LayerSpec::conv(out_channels, 3, 1, 1, "c1.w", "c1.b"), LayerSpec::of(LayerKind::Relu),
              LayerSpec::of(LayerKind::MaxPool), LayerSpec::of(LayerKind::Flatten),
              LayerSpec::dense(classes, "fc.w", "fc.b"), LayerSpec::of(LayerKind::Softmax)};
  return a;
}

ArchSpec two_conv_arch(Shape input, std::size_t c1, std::size_t c2, std::size_t classes) {
  ArchSpec a;
  a.input_shape = std::move(input);
  a.layers = {LayerSpec::conv(c1, 3, 1, 1, "c1.w", "c1.b"), LayerSpec::of(LayerKind::Relu),
              LayerSpec::conv(c2, 3, 1, 1, "c2.w", "c2.b"), LayerSpec::of(LayerKind::Relu),
              LayerSpec::of(LayerKind::MaxPool), LayerSpec::of(LayerKind::Flatten),
              LayerSpec::dense(classes, "fc.w", "fc.b"), LayerSpec::of(LayerKind::Softmax)};
  return a;
}

ArchSpec slim_vgg_arch(std::size_t side, std::size_t divisor, std::size_t hidden, std::size_t classes) {
  const std::size_t widths[5] = {64, 128, 256, 512, 512};
  const std::size_t repeats[5] = {2, 2, 3, 3, 3};
  ArchSpec a;
  a.input_shape = {3, side, side};
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t r = 0; r < repeats[b]; ++r) {
      const std::string n = "conv" + std::to_string(b + 1) + "_" + std::to_string(r + 1);
      a.layers.push_back(LayerSpec::conv(widths[b] / divisor, 3, 1, 1, n + ".w", n + ".b"));
      a.layers.push_back(LayerSpec::of(LayerKind::Relu));
    }
    a.layers.push_back(LayerSpec::of(LayerKind::MaxPool));
  }
  a.layers.push_back(LayerSpec::of(LayerKind::Flatten));
  a.layers.push_back(LayerSpec::dense(hidden, "fc6.w", "fc6.b"));
  a.layers.push_back(LayerSpec::of(LayerKind::Relu));
  a.layers.push_back(LayerSpec::dense(hidden, "fc7.w", "fc7.b"));
  a.layers.push_back(LayerSpec::of(LayerKind::Relu));
  a.layers.push_back(LayerSpec::dense(classes, "fc8.w", "fc8.b"));
  a.layers.push_back(LayerSpec::of(LayerKind::Softmax));
  return a;
}

WeightContainer left_right_container() {
  ArchSpec a;
  a.input_shape = {3, 8, 8};
  a.layers = {LayerSpec::conv(2, 1, 1, 0, "c1.w", "c1.b"), LayerSpec::of(LayerKind::Relu),
              LayerSpec::of(LayerKind::MaxPool), LayerSpec::of(LayerKind::Flatten),
              LayerSpec::dense(2, "fc.w", "fc.b"), LayerSpec::of(LayerKind::Softmax)};
  a.class_labels = {"left", "right"};
  return make_container(
      a,
      [](const std::string& name, const Shape& s) {
        Tensor t(s);
        if (name == "c1.w") {
          t[0 * 3 + 0] = 1.0f;  // channel 0 <- red
          t[1 * 3 + 1] = 1.0f;  // channel 1 <- green
        } else if (name == "fc.w") {
          // pooled map is 2x4x4, flattened CHW
          for (std::size_t y = 0; y < 4; ++y) {
            for (std::size_t x = 0; x < 4; ++x) {
              if (x < 2) t[0 * 32 + 0 * 16 + y * 4 + x] = 1.0f;
              if (x >= 2) t[1 * 32 + 1 * 16 + y * 4 + x] = 1.0f;
            }
          }
        }
        return t;
      },
      unit_preprocessing(8, 8));
}

RgbImage left_right_image() {
  RgbImage img(8, 8);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      const auto jitter = static_cast<std::uint8_t>((x * 7 + y * 13) % 40);
      if (x < 4) {
        img.set(x, y, {static_cast<std::uint8_t>(180 + jitter), 10, 10});
      } else {
        img.set(x, y, {10, static_cast<std::uint8_t>(160 + jitter), 10});
      }
    }
  }
  return img;
}

WeightContainer dead_channel_container(std::size_t side, std::size_t channels,
                                       const std::set<std::size_t>& dead, std::uint32_t seed) {
  Rng rng(seed);
  ArchSpec a = tiny_arch({3, side, side}, channels, 2);
  return make_container(
      a,
      [&](const std::string& name, const Shape& s) {
        if (name == "c1.w") {
          Tensor t = random_tensor(s, rng, 0.0f, 0.1f);
          const std::size_t per = s[1] * s[2] * s[3];
          for (std::size_t k : dead) {
            for (std::size_t j = 0; j < per; ++j) t[k * per + j] = 0.0f;
          }
          return t;
        }
        if (name == "c1.b") {
          Tensor t(s, 0.5f);
          for (std::size_t k : dead) t[k] = -1.0f;
          return t;
        }
        return random_tensor(s, rng, -0.1f, 0.1f);
      },
      unit_preprocessing(side, side));
}

RgbImage random_image(std::size_t width, std::size_t height, Rng& rng) {
  std::uniform_int_distribution<int> dist(0, 255);
  std::vector<std::uint8_t> px(width * height * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(dist(rng));
  return RgbImage(width, height, std::move(px));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("convlens_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void save_container(const WeightContainer& c, const std::filesystem::path& path) {
  write_file(path, write_container(c));
}

void save_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.pixels().size()));
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) { return read_file(path); }

}  // namespace convlens::testing
