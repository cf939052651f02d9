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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "convlens/arch.hpp"
#include "convlens/tensor.hpp"

namespace convlens {

enum class ChannelOrder { RGB, BGR };

/// How raw 8-bit pixels become network input: resize, reorder, then
/// (pixel - mean[c]) * scale[c] with mean/scale given in output channel order.
struct Preprocessing {
  std::size_t resize_h = 224;
  std::size_t resize_w = 224;
  ChannelOrder channel_order = ChannelOrder::RGB;
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};

  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// In-memory form of a CVW file.
///
/// Layout on disk:
///   bytes 0-3   magic "CVW1"
///   bytes 4-7   u32 LE version (1)
///   bytes 8-11  u32 LE metadata length L
///   L bytes     UTF-8 JSON metadata
///   tensor blobs in metadata order, raw LE float32, row-major, unpadded
struct WeightContainer {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  ArchSpec arch;
  Preprocessing preprocessing;
  /// Kept in metadata (and blob) order.
  std::vector<NamedTensor> tensors;

  const Tensor* find(std::string_view name) const;

  friend bool operator==(const WeightContainer&, const WeightContainer&) = default;
};

/// Parses and validates a container. Throws ContainerError.
WeightContainer parse_container(std::span<const std::uint8_t> bytes);

/// Canonical serialization. Validates first; throws ContainerError for
/// containers that parse_container would reject.
std::vector<std::uint8_t> write_container(const WeightContainer& container);

/// Checks the container invariants (arch chain, tensor binding and shapes).
void validate_container(const WeightContainer& container);

std::string metadata_json(const WeightContainer& container);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

WeightContainer load_container_file(const std::filesystem::path& path);

}  // namespace convlens
