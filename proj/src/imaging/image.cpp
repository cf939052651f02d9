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

#include "convlens/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "convlens/error.hpp"
#include "convlens/kernels.hpp"

namespace convlens {

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), pixels_(3 * width * height) {
  if (width == 0 || height == 0) throw ImageError("image dimensions must be positive");
  for (std::size_t i = 0; i < width * height; ++i) {
    pixels_[3 * i] = fill.r;
    pixels_[3 * i + 1] = fill.g;
    pixels_[3 * i + 2] = fill.b;
  }
}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) throw ImageError("image dimensions must be positive");
  if (pixels_.size() != 3 * width * height) {
    throw ImageError("pixel buffer holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                     std::to_string(3 * width * height));
  }
}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

// libpng reports errors through longjmp; the message is stashed here first.
struct PngState {
  std::span<const std::uint8_t> input;
  std::size_t offset = 0;
  std::vector<std::uint8_t>* output = nullptr;
  std::string error;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngState*>(png_get_error_ptr(png));
  state->error = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngState*>(png_get_io_ptr(png));
  if (state->input.size() - state->offset < length) png_error(png, "truncated PNG data");
  std::memcpy(data, state->input.data() + state->offset, length);
  state->offset += length;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngState*>(png_get_io_ptr(png));
  state->output->insert(state->output->end(), data, data + length);
}

void png_flush_fn(png_structp) {}

std::string color_type_name(int type) {
  switch (type) {
    case PNG_COLOR_TYPE_GRAY: return "grayscale";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    default: return "unknown";
  }
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  PngState state{bytes, 0, nullptr, {}};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_fn, png_warning_fn);
  if (!png) throw ImageError("PNG: cannot allocate decoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("PNG: cannot allocate decoder");
  }
  // Everything that can longjmp runs before any C++ object with a destructor
  // is created below the setjmp.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  std::size_t width = 0, height = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("PNG: " + state.error);
  }
  png_set_read_fn(png, &state, png_read_fn);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("PNG: unsupported format " + std::to_string(bit_depth) + "-bit " +
                     color_type_name(color_type) + " (need 8-bit RGB or RGBA)");
  }
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 4;
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  raw.resize(width * height * channels);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = raw.data() + y * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels == 3) return RgbImage(width, height, std::move(raw));
  std::vector<std::uint8_t> rgb(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) std::memcpy(&rgb[3 * i], &raw[4 * i], 3);
  return RgbImage(width, height, std::move(rgb));
}

// Minimal P6 reader: header tokens separated by whitespace, '#' comments.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto next_token = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw ImageError("PPM: truncated or malformed header");
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (value > (1u << 24)) throw ImageError("PPM: header value too large");
      ++pos;
    }
    return value;
  };
  const std::size_t width = next_token();
  const std::size_t height = next_token();
  const std::size_t maxval = next_token();
  if (width == 0 || height == 0) throw ImageError("PPM: zero dimension");
  if (maxval != 255) throw ImageError("PPM: unsupported maxval " + std::to_string(maxval) + " (need 255)");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageError("PPM: truncated header");
  ++pos;
  const std::size_t need = width * height * 3;
  if (bytes.size() - pos < need) {
    throw ImageError("PPM: truncated pixel data (" + std::to_string(bytes.size() - pos) + " of " +
                     std::to_string(need) + " bytes)");
  }
  return RgbImage(width, height, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                           bytes.begin() + static_cast<std::ptrdiff_t>(pos + need)));
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '5') {
    throw ImageError("unsupported image format: PNM P" + std::string(1, static_cast<char>(bytes[1])) +
                     " (only binary P6 is supported)");
  }
  throw ImageError("unsupported image format (expected PNG or PPM P6)");
}

RgbImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> out;
  PngState state{{}, 0, &out, {}};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, png_error_fn, png_warning_fn);
  if (!png) throw ImageError("PNG: cannot allocate encoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("PNG: cannot allocate encoder");
  }
  std::vector<png_bytep> rows(image.height());
  for (std::size_t y = 0; y < image.height(); ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels().data() + 3 * y * image.width());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("PNG: " + state.error);
  }
  png_set_write_fn(png, &state, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  write_file(path, encode_png(image));
}

Tensor image_to_tensor(const RgbImage& image) {
  const std::size_t h = image.height(), w = image.width(), plane = h * w;
  Tensor t({3, h, w});
  const auto px = image.pixels();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) t[c * plane + i] = static_cast<float>(px[3 * i + c]);
  }
  return t;
}

RgbImage resize_image(const RgbImage& image, std::size_t height, std::size_t width) {
  const Tensor resized = bilinear_resize(image_to_tensor(image), height, width);
  const std::size_t plane = height * width;
  std::vector<std::uint8_t> px(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) px[3 * i + c] = to_u8(resized[c * plane + i]);
  }
  return RgbImage(width, height, std::move(px));
}

Tensor preprocess(const RgbImage& image, const Preprocessing& p) {
  Tensor resized = bilinear_resize(image_to_tensor(image), p.resize_h, p.resize_w);
  const std::size_t plane = p.resize_h * p.resize_w;
  Tensor out({3, p.resize_h, p.resize_w});
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t src = p.channel_order == ChannelOrder::RGB ? c : 2 - c;
    const float mean = static_cast<float>(p.mean[c]);
    const float scale = static_cast<float>(p.scale[c]);
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = (resized[src * plane + i] - mean) * scale;
    }
  }
  return out;
}

}  // namespace convlens
