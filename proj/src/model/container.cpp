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

#include "convlens/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"

#include "convlens/error.hpp"

namespace convlens {

namespace {

using json = nlohmann::ordered_json;
using Kind = ContainerError::Kind;

constexpr std::array<std::uint8_t, 4> kMagic{'C', 'V', 'W', '1'};
constexpr std::size_t kHeaderSize = 12;

[[noreturn]] void fail(Kind kind, const std::string& what) { throw ContainerError(kind, what); }

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

json layer_params(const LayerSpec& l) {
  json p = json::object();
  switch (l.kind) {
    case LayerKind::Conv:
      p["out_channels"] = l.out_channels;
      p["kernel"] = l.kernel;
      p["stride"] = l.stride;
      p["padding"] = l.padding;
      break;
    case LayerKind::Dense:
      p["out_features"] = l.out_features;
      break;
    case LayerKind::MaxPool:
      p["window"] = l.window;
      p["stride"] = l.pool_stride;
      break;
    default:
      break;
  }
  return p;
}

json to_json(const WeightContainer& c) {
  json meta;
  meta["input_shape"] = c.arch.input_shape;
  json layers = json::array();
  for (const auto& l : c.arch.layers) {
    json entry;
    entry["kind"] = std::string(layer_kind_name(l.kind));
    entry["params"] = layer_params(l);
    entry["weight_names"] = l.weight_names;
    layers.push_back(std::move(entry));
  }
  meta["layers"] = std::move(layers);
  const auto& p = c.preprocessing;
  json pre;
  pre["resize"] = {p.resize_h, p.resize_w};
  pre["channel_order"] = p.channel_order == ChannelOrder::RGB ? "RGB" : "BGR";
  pre["mean"] = p.mean;
  pre["scale"] = p.scale;
  meta["preprocessing"] = std::move(pre);
  if (!c.arch.class_labels.empty()) meta["class_labels"] = c.arch.class_labels;
  json tensors = json::array();
  for (const auto& t : c.tensors) {
    json entry;
    entry["name"] = t.name;
    entry["shape"] = t.tensor.shape();
    tensors.push_back(std::move(entry));
  }
  meta["tensors"] = std::move(tensors);
  return meta;
}

// Schema readers. Any missing key or wrong type is a schema error.
const json& field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) fail(Kind::Schema, ctx + ": missing \"" + key + "\"");
  return obj.at(key);
}

std::size_t as_size(const json& v, const std::string& ctx) {
  if (!v.is_number_unsigned()) fail(Kind::Schema, ctx + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

Shape as_shape(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail(Kind::Schema, ctx + ": expected an array of dims");
  Shape s;
  for (const auto& d : v) s.push_back(as_size(d, ctx));
  return s;
}

std::string as_string(const json& v, const std::string& ctx) {
  if (!v.is_string()) fail(Kind::Schema, ctx + ": expected a string");
  return v.get<std::string>();
}

std::array<double, 3> as_triple(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 3) fail(Kind::Schema, ctx + ": expected 3 numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) fail(Kind::Schema, ctx + ": expected 3 numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

LayerSpec parse_layer(const json& j, std::size_t index) {
  const std::string ctx = "layers[" + std::to_string(index) + "]";
  const std::string kind_name = as_string(field(j, "kind", ctx), ctx + ".kind");
  auto kind = parse_layer_kind(kind_name);
  if (!kind) fail(Kind::Schema, ctx + ": unknown layer kind \"" + kind_name + "\"");
  LayerSpec l = LayerSpec::of(*kind);
  const json& params = field(j, "params", ctx);
  if (!params.is_object()) fail(Kind::Schema, ctx + ".params: expected an object");
  const std::string pctx = ctx + ".params";
  switch (*kind) {
    case LayerKind::Conv:
      l.out_channels = as_size(field(params, "out_channels", pctx), pctx + ".out_channels");
      l.kernel = as_size(field(params, "kernel", pctx), pctx + ".kernel");
      l.stride = as_size(field(params, "stride", pctx), pctx + ".stride");
      l.padding = as_size(field(params, "padding", pctx), pctx + ".padding");
      break;
    case LayerKind::Dense:
      l.out_features = as_size(field(params, "out_features", pctx), pctx + ".out_features");
      break;
    case LayerKind::MaxPool:
      if (params.contains("window")) l.window = as_size(params["window"], pctx + ".window");
      if (params.contains("stride")) l.pool_stride = as_size(params["stride"], pctx + ".stride");
      break;
    default:
      break;
  }
  const json& names = field(j, "weight_names", ctx);
  if (!names.is_array()) fail(Kind::Schema, ctx + ".weight_names: expected an array");
  for (const auto& n : names) l.weight_names.push_back(as_string(n, ctx + ".weight_names"));
  return l;
}

struct ParsedMeta {
  WeightContainer container;  // tensors carry shapes only, data filled later
  std::vector<std::pair<std::string, Shape>> tensor_shapes;
};

ParsedMeta parse_metadata(std::string_view text) {
  json meta = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded()) fail(Kind::Corrupt, "metadata is not valid JSON");
  if (!meta.is_object()) fail(Kind::Schema, "metadata must be a JSON object");

  ParsedMeta out;
  ArchSpec& arch = out.container.arch;
  arch.input_shape = as_shape(field(meta, "input_shape", "metadata"), "input_shape");
  const json& layers = field(meta, "layers", "metadata");
  if (!layers.is_array()) fail(Kind::Schema, "layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) arch.layers.push_back(parse_layer(layers[i], i));

  const json& pre = field(meta, "preprocessing", "metadata");
  Preprocessing& p = out.container.preprocessing;
  const Shape resize = as_shape(field(pre, "resize", "preprocessing"), "preprocessing.resize");
  if (resize.size() != 2 || resize[0] == 0 || resize[1] == 0) {
    fail(Kind::Schema, "preprocessing.resize: expected [H, W] with positive entries");
  }
  p.resize_h = resize[0];
  p.resize_w = resize[1];
  const std::string order = as_string(field(pre, "channel_order", "preprocessing"),
                                      "preprocessing.channel_order");
  if (order == "RGB") {
    p.channel_order = ChannelOrder::RGB;
  } else if (order == "BGR") {
    p.channel_order = ChannelOrder::BGR;
  } else {
    fail(Kind::Schema, "preprocessing.channel_order: expected RGB or BGR, got " + order);
  }
  p.mean = as_triple(field(pre, "mean", "preprocessing"), "preprocessing.mean");
  p.scale = as_triple(field(pre, "scale", "preprocessing"), "preprocessing.scale");

  if (meta.contains("class_labels")) {
    const json& labels = meta["class_labels"];
    if (!labels.is_array()) fail(Kind::Schema, "class_labels: expected an array");
    for (const auto& l : labels) arch.class_labels.push_back(as_string(l, "class_labels"));
  }

  const json& tensors = field(meta, "tensors", "metadata");
  if (!tensors.is_array()) fail(Kind::Schema, "tensors: expected an array");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string ctx = "tensors[" + std::to_string(i) + "]";
    std::string name = as_string(field(tensors[i], "name", ctx), ctx + ".name");
    Shape shape = as_shape(field(tensors[i], "shape", ctx), ctx + ".shape");
    if (shape.empty() || shape.size() > 4 || std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
      fail(Kind::Schema, ctx + ": invalid shape " + shape_to_string(shape));
    }
    out.tensor_shapes.emplace_back(std::move(name), std::move(shape));
  }
  return out;
}

// Arch chain, name uniqueness, binding and per-layer shapes.
void validate_schema(const ArchSpec& arch, const Preprocessing& pre,
                     const std::vector<std::pair<std::string, Shape>>& tensors) {
  std::vector<Shape> shapes;
  try {
    shapes = infer_shapes(arch);
  } catch (const ArchError& e) {
    fail(Kind::Schema, std::string("invalid architecture: ") + e.what());
  }
  if (arch.input_shape[0] != 3 || pre.resize_h != arch.input_shape[1] ||
      pre.resize_w != arch.input_shape[2]) {
    fail(Kind::Schema, "preprocessing resize " + std::to_string(pre.resize_h) + "x" +
                           std::to_string(pre.resize_w) + " does not produce input " +
                           shape_to_string(arch.input_shape));
  }
  std::set<std::string> seen;
  for (const auto& [name, shape] : tensors) {
    if (!seen.insert(name).second) fail(Kind::Schema, "duplicate tensor name \"" + name + "\"");
  }
  auto lookup = [&](const std::string& name) -> const Shape* {
    for (const auto& [n, s] : tensors) {
      if (n == name) return &s;
    }
    return nullptr;
  };
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& layer = arch.layers[i];
    if (!layer.has_weights()) continue;
    const Shape& in = i == 0 ? arch.input_shape : shapes[i - 1];
    const auto [weight_shape, bias_shape] = required_param_shapes(layer, in);
    const Shape* expected[2] = {&weight_shape, &bias_shape};
    for (std::size_t k = 0; k < 2; ++k) {
      const std::string& name = layer.weight_names[k];
      const Shape* found = lookup(name);
      if (found == nullptr) {
        fail(Kind::Schema, "layer " + std::to_string(i) + " binds unresolved tensor \"" + name + "\"");
      }
      if (*found != *expected[k]) {
        fail(Kind::Schema, "tensor \"" + name + "\" has shape " + shape_to_string(*found) +
                               " but layer " + std::to_string(i) + " needs " +
                               shape_to_string(*expected[k]));
      }
    }
  }
}

float load_f32(const std::uint8_t* p) { return std::bit_cast<float>(load_u32(p)); }

}  // namespace

const Tensor* WeightContainer::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

void validate_container(const WeightContainer& container) {
  if (container.version != WeightContainer::kVersion) {
    fail(Kind::UnsupportedVersion, "unsupported CVW version " + std::to_string(container.version));
  }
  std::vector<std::pair<std::string, Shape>> shapes;
  for (const auto& t : container.tensors) shapes.emplace_back(t.name, t.tensor.shape());
  validate_schema(container.arch, container.preprocessing, shapes);
}

std::string metadata_json(const WeightContainer& container) { return to_json(container).dump(); }

WeightContainer parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    fail(Kind::BadMagic, "not a CVW file");
  }
  if (bytes.size() < kHeaderSize) fail(Kind::Corrupt, "CVW header is truncated");
  const std::uint32_t version = load_u32(bytes.data() + 4);
  if (version != WeightContainer::kVersion) {
    fail(Kind::UnsupportedVersion, "unsupported CVW version " + std::to_string(version) +
                                       " (expected " + std::to_string(WeightContainer::kVersion) + ")");
  }
  const std::uint64_t meta_len = load_u32(bytes.data() + 8);
  if (meta_len > bytes.size() - kHeaderSize) {
    fail(Kind::Corrupt, "metadata length " + std::to_string(meta_len) + " exceeds file size");
  }
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + kHeaderSize), meta_len);
  ParsedMeta parsed = parse_metadata(text);
  validate_schema(parsed.container.arch, parsed.container.preprocessing, parsed.tensor_shapes);

  std::uint64_t blob_bytes = 0;
  for (const auto& [name, shape] : parsed.tensor_shapes) blob_bytes += shape_numel(shape) * 4;
  const std::uint64_t available = bytes.size() - kHeaderSize - meta_len;
  if (available != blob_bytes) {
    fail(Kind::Corrupt, "tensor data is " + std::to_string(available) + " bytes, metadata declares " +
                            std::to_string(blob_bytes));
  }

  WeightContainer& c = parsed.container;
  c.version = version;
  const std::uint8_t* cursor = bytes.data() + kHeaderSize + meta_len;
  for (auto& [name, shape] : parsed.tensor_shapes) {
    std::vector<float> data(shape_numel(shape));
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(data.data(), cursor, data.size() * 4);
    } else {
      for (std::size_t i = 0; i < data.size(); ++i) data[i] = load_f32(cursor + 4 * i);
    }
    cursor += data.size() * 4;
    c.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return std::move(parsed.container);
}

std::vector<std::uint8_t> write_container(const WeightContainer& container) {
  validate_container(container);
  const std::string meta = metadata_json(container);
  std::size_t total = kHeaderSize + meta.size();
  for (const auto& t : container.tensors) total += t.tensor.size() * 4;

  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.assign(kMagic.begin(), kMagic.end());
  store_u32(out, container.version);
  store_u32(out, static_cast<std::uint32_t>(meta.size()));
  std::size_t cursor = out.size();
  out.resize(total);
  std::memcpy(out.data() + cursor, meta.data(), meta.size());
  cursor += meta.size();
  for (const auto& t : container.tensors) {
    for (float v : t.tensor.data()) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      for (int shift = 0; shift < 32; shift += 8) out[cursor++] = static_cast<std::uint8_t>(bits >> shift);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("cannot read " + path.string() + ": no such file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw IoError("cannot read " + path.string());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw IoError("short read from " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to " + path.string() + " failed");
}

WeightContainer load_container_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_container(bytes);
}

}  // namespace convlens
