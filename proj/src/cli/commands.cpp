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

#include "convlens/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "convlens/container.hpp"
#include "convlens/error.hpp"
#include "convlens/gradcam.hpp"
#include "convlens/image.hpp"
#include "convlens/network.hpp"
#include "convlens/parallel.hpp"
#include "convlens/render.hpp"

namespace convlens::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return std::strtod(buf, nullptr);
}

namespace {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct Inputs {
  std::string model;
  std::string image;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Network open_network(const std::string& path) { return load_network(load_container_file(path)); }

std::string layer_params_text(const LayerSpec& l) {
  std::ostringstream os;
  switch (l.kind) {
    case LayerKind::Conv:
      os << "out=" << l.out_channels << " k=" << l.kernel << " s=" << l.stride << " p=" << l.padding;
      break;
    case LayerKind::Dense:
      os << "out=" << l.out_features;
      break;
    case LayerKind::MaxPool:
      os << "window=" << l.window << " stride=" << l.pool_stride;
      break;
    default:
      os << "-";
  }
  return os.str();
}

std::string join(const std::vector<std::size_t>& values, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(values[i]);
  }
  return s;
}

int cmd_inspect(const Inputs& in, const Io& io) {
  const Network net = open_network(in.model);
  io.out << std::left << std::setw(6) << "index" << std::setw(9) << "kind" << std::setw(24) << "params"
         << std::setw(14) << "output" << "conv" << "\n";
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const LayerSpec& l = net.layer(i);
    const auto ordinal = net.conv_ordinal_of(i);
    io.out << std::left << std::setw(6) << i << std::setw(9) << layer_kind_name(l.kind) << std::setw(24)
           << layer_params_text(l) << std::setw(14) << shape_to_string(net.output_shape(i))
           << (ordinal ? std::to_string(*ordinal) : "-") << "\n";
  }
  io.out << "conv layers: " << net.conv_layer_count()
         << "; fraction picks: " << join(select_fraction_layers(net.conv_layer_count()), ",") << "\n";
  return kExitOk;
}

int cmd_classify(const Inputs& in, std::size_t top, const Io& io) {
  if (top < 1) throw RangeError("--top must be at least 1");
  const Network net = open_network(in.model);
  const Tensor input = preprocess(load_image(in.image), net.preprocessing());
  const ForwardResult fwd = forward(net, input);
  const std::size_t n = net.num_classes();
  if (top > n) {
    io.err << "warning: --top " << top << " exceeds " << n << " classes; showing " << n << "\n";
    top = n;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fwd.probs[a] > fwd.probs[b]; });
  json entries = json::array();
  for (std::size_t i = 0; i < top; ++i) {
    json e;
    e["class_index"] = order[i];
    if (!net.arch().class_labels.empty()) e["label"] = net.arch().class_labels[order[i]];
    e["probability"] = round_sig6(fwd.probs[order[i]]);
    entries.push_back(std::move(e));
  }
  json doc;
  doc["top"] = std::move(entries);
  io.out << dump(doc);
  return kExitOk;
}

std::vector<std::size_t> parse_ordinals(const std::string& choice, const Network& net) {
  if (choice == "auto") return select_fraction_layers(net.conv_layer_count());
  std::vector<std::size_t> ordinals;
  std::stringstream ss(choice);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) throw RangeError("invalid conv ordinal \"" + item + "\" in --layers");
    net.conv_ordinal_to_layer_index(v);
    ordinals.push_back(v);
  }
  if (ordinals.empty()) throw RangeError("--layers lists no conv ordinals");
  std::sort(ordinals.begin(), ordinals.end());
  ordinals.erase(std::unique(ordinals.begin(), ordinals.end()), ordinals.end());
  return ordinals;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

int cmd_activations(const Inputs& in, const std::string& layers, std::optional<std::size_t> channel,
                    double dead_eps, std::size_t cols, const std::string& out_dir, const Io& io) {
  const Network net = open_network(in.model);
  const std::vector<std::size_t> ordinals = parse_ordinals(layers, net);
  ForwardOptions options;
  for (std::size_t ord : ordinals) {
    const std::size_t layer = net.feature_layer_for_ordinal(ord);
    const std::size_t channels = net.output_shape(layer)[0];
    if (channel && *channel >= channels) {
      throw RangeError("channel " + std::to_string(*channel) + " out of range for conv " +
                       std::to_string(ord) + " with " + std::to_string(channels) + " channels");
    }
    options.capture.insert(layer);
  }
  const RgbImage image = load_image(in.image);
  const Tensor input = preprocess(image, net.preprocessing());
  ensure_dir(out_dir);
  const ForwardResult fwd = forward(net, input, options);

  for (std::size_t ord : ordinals) {
    const Tensor& act = fwd.trace.entries.at(net.feature_layer_for_ordinal(ord));
    const std::size_t k = act.dim(0);
    const std::size_t grid_cols =
        cols > 0 ? cols : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
    const fs::path grid_path = fs::path(out_dir) / ("act_L" + std::to_string(ord) + "_grid.png");
    write_png(channel_grid(act, dead_eps, grid_cols), grid_path);
    io.out << grid_path.string() << "\n";
    if (channel) {
      const fs::path tile_path =
          fs::path(out_dir) / ("act_L" + std::to_string(ord) + "_c" + std::to_string(*channel) + ".png");
      write_png(channel_to_grayscale(act.channel(*channel)), tile_path);
      io.out << tile_path.string() << "\n";
    }
  }
  return kExitOk;
}

std::optional<std::size_t> parse_choice(const std::string& value, const char* automatic, const char* flag) {
  if (value == automatic) return std::nullopt;
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || value.front() == '-') {
    throw RangeError(std::string("invalid ") + flag + " value \"" + value + "\"");
  }
  return v;
}

int cmd_gradcam(const Inputs& in, const std::string& class_opt, const std::string& layer_opt, double blend,
                const std::string& out_file, const Io& io) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw RangeError("--blend must lie in [0, 1]");
  const Network net = open_network(in.model);
  const auto class_index = parse_choice(class_opt, "auto", "--class");
  const auto ordinal = parse_choice(layer_opt, "last", "--layer");
  if (ordinal) net.conv_ordinal_to_layer_index(*ordinal);
  if (class_index && *class_index >= net.num_classes()) {
    throw RangeError("class " + std::to_string(*class_index) + " out of range for " +
                     std::to_string(net.num_classes()) + " classes");
  }

  const RgbImage image = load_image(in.image);
  const Tensor input = preprocess(image, net.preprocessing());
  const GradCamResult cam = compute_gradcam(net, input, class_index, ordinal);

  const std::size_t h = net.input_shape()[1], w = net.input_shape()[2];
  const RgbImage overlay = render_overlay(resize_image(image, h, w), cam.heatmap, blend);

  const auto heat = cam.heatmap.data();
  const auto peak = static_cast<std::size_t>(std::max_element(heat.begin(), heat.end()) - heat.begin());

  json side;
  side["class_index"] = cam.class_index;
  side["chosen_by"] = class_index ? "user" : "auto";
  side["conv_ordinal"] = cam.conv_ordinal;
  side["logit"] = round_sig6(cam.logit);
  side["probability"] = round_sig6(cam.probability);
  side["heatmap_max_location"] = {peak / w, peak % w};
  side["degenerate"] = cam.degenerate();

  if (cam.degenerate()) {
    io.err << "warning: class " << cam.class_index << " has no positive attribution at conv "
           << cam.conv_ordinal << "; heatmap is all zero\n";
  }
  const fs::path png_path(out_file);
  if (png_path.has_parent_path()) ensure_dir(png_path.parent_path());
  write_png(overlay, png_path);
  fs::path json_path = png_path;
  json_path.replace_extension(".json");
  const std::string text = dump(side);
  write_file(json_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  io.out << text;
  return kExitOk;
}

int cmd_deadmaps(const Inputs& in, double eps, const std::string& json_path, const Io& io) {
  const Network net = open_network(in.model);
  ForwardOptions options;
  for (std::size_t ord = 1; ord <= net.conv_layer_count(); ++ord) {
    options.capture.insert(net.feature_layer_for_ordinal(ord));
  }
  const Tensor input = preprocess(load_image(in.image), net.preprocessing());
  const ForwardResult fwd = forward(net, input, options);

  json layers = json::array();
  std::ostringstream table;
  table << std::left << std::setw(6) << "conv" << std::setw(10) << "channels" << std::setw(8) << "dead"
        << "fraction" << "\n";
  for (std::size_t ord = 1; ord <= net.conv_layer_count(); ++ord) {
    const Tensor& act = fwd.trace.entries.at(net.feature_layer_for_ordinal(ord));
    const std::size_t k = act.dim(0);
    std::vector<std::size_t> dead;
    for (std::size_t c = 0; c < k; ++c) {
      if (is_dead_channel(act, c, eps)) dead.push_back(c);
    }
    const double fraction = static_cast<double>(dead.size()) / static_cast<double>(k);
    json entry;
    entry["layer"] = ord;
    entry["channels"] = k;
    entry["dead"] = dead.size();
    entry["dead_indices"] = dead;
    entry["dead_fraction"] = round_sig6(fraction);
    layers.push_back(std::move(entry));
    table << std::left << std::setw(6) << ord << std::setw(10) << k << std::setw(8) << dead.size()
          << round_sig6(fraction) << "\n";
  }
  json report;
  report["model"] = in.model;
  report["input"] = in.image;
  report["epsilon"] = round_sig6(eps);
  report["layers"] = std::move(layers);
  const std::string text = dump(report);
  if (json_path.empty()) {
    io.err << table.str();
    io.out << text;
  } else {
    write_file(json_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    io.out << table.str();
  }
  return kExitOk;
}

// Model and image are accepted as flags or as the first two positionals.
void add_inputs(CLI::App* cmd, Inputs& in, bool with_image) {
  cmd->add_option("--model,model", in.model, "CVW model container")->required();
  if (with_image) cmd->add_option("--image,image", in.image, "Input image (PNG or PPM P6)")->required();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Io io{out, err};
  if (!apply_thread_limit_from_env()) {
    err << "error: CONVLENS_THREADS must be a positive integer\n";
    return kExitUsage;
  }

  CLI::App app{"convlens: activation, dead-map and Grad-CAM inspection for VGG-style CNNs"};
  app.require_subcommand(1);

  Inputs in;

  auto* inspect = app.add_subcommand("inspect", "Print the layer table and conv fraction picks");
  add_inputs(inspect, in, false);

  std::size_t top = 5;
  auto* classify = app.add_subcommand("classify", "Top-k class probabilities as JSON");
  add_inputs(classify, in, true);
  classify->add_option("--top", top, "Number of classes to report");

  std::string layers = "auto";
  std::optional<std::size_t> channel;
  double dead_eps = kDefaultDeadEpsilon;
  std::size_t cols = 0;
  std::string out_dir = ".";
  auto* activations = app.add_subcommand("activations", "Render channel grids of conv feature maps");
  add_inputs(activations, in, true);
  activations->add_option("--layers", layers, "auto or comma-separated conv ordinals (1-based)");
  activations->add_option("--channel", channel, "Also render this channel (0-based) as a single tile");
  activations->add_option("--dead-eps", dead_eps, "Channels with max activation <= eps are tinted blue");
  activations->add_option("--cols", cols, "Grid columns (default: ceil(sqrt(channels)))");
  activations->add_option("--out", out_dir, "Output directory");

  std::string class_opt = "auto";
  std::string layer_opt = "last";
  double blend = kDefaultBlend;
  std::string out_file = "gradcam.png";
  auto* gradcam = app.add_subcommand("gradcam", "Grad-CAM heatmap overlay plus JSON sidecar");
  add_inputs(gradcam, in, true);
  gradcam->add_option("--class", class_opt, "auto or a class index");
  gradcam->add_option("--layer", layer_opt, "last or a conv ordinal (1-based)");
  gradcam->add_option("--blend", blend, "Heatmap opacity in [0, 1]");
  gradcam->add_option("--out", out_file, "Overlay PNG path; the sidecar gets a .json extension");

  double eps = kDefaultDeadEpsilon;
  std::string json_path;
  auto* deadmaps = app.add_subcommand("deadmaps", "Count dead feature maps in every conv layer");
  add_inputs(deadmaps, in, true);
  deadmaps->add_option("--eps", eps, "Channels with max activation <= eps are dead");
  deadmaps->add_option("--json", json_path, "Write the JSON report here (default: stdout)");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (inspect->parsed()) return cmd_inspect(in, io);
    if (classify->parsed()) return cmd_classify(in, top, io);
    if (activations->parsed()) return cmd_activations(in, layers, channel, dead_eps, cols, out_dir, io);
    if (gradcam->parsed()) return cmd_gradcam(in, class_opt, layer_opt, blend, out_file, io);
    if (deadmaps->parsed()) return cmd_deadmaps(in, eps, json_path, io);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace convlens::cli
