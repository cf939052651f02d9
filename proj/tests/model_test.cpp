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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "json.hpp"

#include "convlens/error.hpp"
#include "convlens/network.hpp"
#include "support/fixtures.hpp"

namespace convlens {
namespace {

using testing::Rng;

std::size_t count_convs(const ArchSpec& a) {
  return static_cast<std::size_t>(std::count_if(a.layers.begin(), a.layers.end(),
                                                [](const LayerSpec& l) { return l.kind == LayerKind::Conv; }));
}

TEST(Vgg16Test, HasThirteenConvLayers) {
  const ArchSpec a = build_vgg16(1000);
  EXPECT_EQ(count_convs(a), 13u);
  for (const auto& l : a.layers) {
    if (l.kind != LayerKind::Conv) continue;
    EXPECT_EQ(l.kernel, 3u);
    EXPECT_EQ(l.stride, 1u);
    EXPECT_EQ(l.padding, 1u);
  }
}

TEST(Vgg16Test, HeadEndsInNumClassesAndSoftmax) {
  const ArchSpec a = build_vgg16(4);
  ASSERT_GE(a.layers.size(), 2u);
  EXPECT_EQ(a.layers.back().kind, LayerKind::Softmax);
  EXPECT_EQ(a.layers[a.layers.size() - 2].kind, LayerKind::Dense);
  EXPECT_EQ(a.layers[a.layers.size() - 2].out_features, 4u);
}

TEST(Vgg16Test, ConvStackEndsAt512x7x7) {
  const ArchSpec a = build_vgg16(10);
  const auto shapes = infer_shapes(a);
  const auto flatten = std::find_if(a.layers.begin(), a.layers.end(),
                                    [](const LayerSpec& l) { return l.kind == LayerKind::Flatten; });
  const auto idx = static_cast<std::size_t>(flatten - a.layers.begin());
  // 224 -> 112 -> 56 -> 28 -> 14 -> 7 through the five pools
  EXPECT_EQ(shapes[idx - 1], (Shape{512, 7, 7}));
  EXPECT_EQ(shapes[idx], (Shape{512 * 7 * 7}));
  EXPECT_EQ(shapes.back(), (Shape{10}));
}

TEST(Vgg16Test, RejectsFewerThanTwoClasses) {
  EXPECT_THROW(build_vgg16(1), ArchError);
  EXPECT_THROW(build_vgg16(0), ArchError);
}

TEST(ArchPropertyTest, Vgg16ValidatesForAnyClassCount) {
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> classes(2, 5000);
  for (int i = 0; i < 50; ++i) EXPECT_NO_THROW(infer_shapes(build_vgg16(classes(rng))));
}

// Each mutation breaks the chain or an ordering rule; validation must reject all.
TEST(ArchPropertyTest, BrokenChainsAreRejected) {
  Rng rng(2);
  std::uniform_int_distribution<int> pick(0, 9);
  for (int trial = 0; trial < 300; ++trial) {
    ArchSpec a = build_vgg16(2 + static_cast<std::size_t>(trial));
    auto find_kind = [&](LayerKind k) {
      return static_cast<std::size_t>(
          std::find_if(a.layers.begin(), a.layers.end(), [k](const LayerSpec& l) { return l.kind == k; }) -
          a.layers.begin());
    };
    const std::size_t flatten = find_kind(LayerKind::Flatten);
    std::uniform_int_distribution<std::size_t> before_flatten(0, flatten);
    std::uniform_int_distribution<std::size_t> before_end(0, a.layers.size() - 2);
    const int mutation = pick(rng);
    switch (mutation) {
      case 0:
        a.layers.erase(a.layers.begin() + static_cast<std::ptrdiff_t>(flatten));
        break;
      case 1:
        a.layers.pop_back();
        break;
      case 2:
        a.layers.insert(a.layers.begin() + static_cast<std::ptrdiff_t>(before_end(rng)),
                        LayerSpec::of(LayerKind::Softmax));
        break;
      case 3:  // 7x7 is odd
        a.layers.insert(a.layers.begin() + static_cast<std::ptrdiff_t>(flatten), LayerSpec::of(LayerKind::MaxPool));
        break;
      case 4:
        a.layers.insert(a.layers.begin() + static_cast<std::ptrdiff_t>(flatten + 1),
                        LayerSpec::conv(8, 3, 1, 1, "x.w", "x.b"));
        break;
      case 5:
        for (auto& l : a.layers) {
          if (l.kind == LayerKind::Conv) l = LayerSpec::of(LayerKind::Relu);
        }
        break;
      case 6:
        a.layers.insert(a.layers.begin() + static_cast<std::ptrdiff_t>(before_flatten(rng)),
                        LayerSpec::dense(8, "x.w", "x.b"));
        break;
      case 7:
        // kernel wider than the 7x7 input
        a.layers.insert(a.layers.begin() + static_cast<std::ptrdiff_t>(flatten),
                        LayerSpec::conv(512, 9, 1, 0, "x.w", "x.b"));
        break;
      case 8:
        a.layers.insert(a.layers.end() - 1, LayerSpec::of(LayerKind::Relu));
        break;
      case 9:
        a.input_shape = {3, 224};
        break;
    }
    EXPECT_THROW(infer_shapes(a), ArchError) << "mutation " << mutation;
  }
}

TEST(ArchTest, WeightNameCountMustMatchKind) {
  ArchSpec a = testing::tiny_arch({3, 4, 4}, 2, 3);
  a.layers[0].weight_names.pop_back();
  EXPECT_THROW(infer_shapes(a), ArchError);
  a = testing::tiny_arch({3, 4, 4}, 2, 3);
  a.layers[1].weight_names = {"oops"};
  EXPECT_THROW(infer_shapes(a), ArchError);
}

TEST(FractionLayersTest, ReproducesVgg16Picks) {
  EXPECT_EQ(select_fraction_layers(13), (std::vector<std::size_t>{3, 7, 10, 13}));
}

TEST(FractionLayersTest, SmallCounts) {
  EXPECT_EQ(select_fraction_layers(4), (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(select_fraction_layers(1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(select_fraction_layers(2), (std::vector<std::size_t>{1, 2}));
}

TEST(FractionLayersTest, AscendingInRangeContainsN) {
  for (std::size_t n = 1; n <= 300; ++n) {
    const auto picks = select_fraction_layers(n);
    ASSERT_FALSE(picks.empty());
    EXPECT_TRUE(std::is_sorted(picks.begin(), picks.end()));
    EXPECT_EQ(std::adjacent_find(picks.begin(), picks.end()), picks.end());
    EXPECT_GE(picks.front(), 1u);
    EXPECT_EQ(picks.back(), n);
    // floating-point round-half-up of n*q/4
    std::vector<std::size_t> expected;
    for (int q = 1; q <= 4; ++q) {
      const auto v = static_cast<std::size_t>(std::floor(static_cast<double>(n) * q / 4.0 + 0.5));
      expected.push_back(std::clamp<std::size_t>(v, 1, n));
    }
    expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
    EXPECT_EQ(picks, expected) << n;
  }
}

class SlimVggTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(5);
    net_ = new Network(testing::random_container(testing::slim_vgg_arch(32, 16, 8, 3), rng, -0.2f, 0.2f));
  }
  static void TearDownTestSuite() { delete net_; }
  static Network* net_;
};
Network* SlimVggTest::net_ = nullptr;

TEST_F(SlimVggTest, LayoutMatchesVgg16Kinds) {
  const ArchSpec full = build_vgg16(3);
  ASSERT_EQ(net_->layer_count(), full.layers.size());
  for (std::size_t i = 0; i < full.layers.size(); ++i) EXPECT_EQ(net_->layer(i).kind, full.layers[i].kind);
  EXPECT_EQ(net_->conv_layer_count(), 13u);
}

TEST_F(SlimVggTest, ConvOrdinalsMapToArchIndices) {
  EXPECT_EQ(net_->conv_ordinal_to_layer_index(1), 0u);
  // Count convs in the canonical layout to locate the 13th.
  const ArchSpec full = build_vgg16(3);
  std::size_t seen = 0, thirteenth = 0;
  for (std::size_t i = 0; i < full.layers.size(); ++i) {
    if (full.layers[i].kind == LayerKind::Conv && ++seen == 13) thirteenth = i;
  }
  EXPECT_EQ(thirteenth, 28u);
  EXPECT_EQ(net_->conv_ordinal_to_layer_index(13), thirteenth);
  EXPECT_EQ(net_->layer(thirteenth + 1).kind, LayerKind::Relu);
  EXPECT_EQ(net_->feature_layer_for_ordinal(13), thirteenth + 1);
  EXPECT_THROW(net_->conv_ordinal_to_layer_index(14), RangeError);
  EXPECT_THROW(net_->conv_ordinal_to_layer_index(0), RangeError);
  EXPECT_EQ(net_->conv_ordinal_of(28), 13u);
  EXPECT_FALSE(net_->conv_ordinal_of(29).has_value());
}

// ---- container ----

WeightContainer two_layer_container() {
  ArchSpec a;
  a.input_shape = {3, 2, 2};
  a.layers = {LayerSpec::conv(2, 1, 1, 0, "conv.w", "conv.b"), LayerSpec::of(LayerKind::Flatten),
              LayerSpec::dense(2, "fc.w", "fc.b"), LayerSpec::of(LayerKind::Softmax)};
  a.class_labels = {"car", "airplane"};
  float next = 0.0f;
  Preprocessing p = testing::unit_preprocessing(2, 2);
  p.channel_order = ChannelOrder::BGR;
  p.mean = {103.939, 116.779, 123.68};
  return testing::make_container(
      a,
      [&](const std::string&, const Shape& s) {
        Tensor t(s);
        for (auto& v : t.data()) v = (next += 0.5f);
        return t;
      },
      p);
}

std::vector<std::uint8_t> with_metadata(const std::vector<std::uint8_t>& bytes, const std::string& meta,
                                        std::size_t blob_trim = 0) {
  std::uint32_t old_len = 0;
  for (int i = 0; i < 4; ++i) old_len |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  const auto len = static_cast<std::uint32_t>(meta.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), meta.begin(), meta.end());
  out.insert(out.end(), bytes.begin() + 12 + old_len, bytes.end() - static_cast<std::ptrdiff_t>(blob_trim));
  return out;
}

ContainerError::Kind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_container(bytes);
  } catch (const ContainerError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "container was accepted";
  return ContainerError::Kind::Corrupt;
}

TEST(ContainerTest, BadMagic) {
  std::vector<std::uint8_t> bytes = write_container(two_layer_container());
  std::memcpy(bytes.data(), "XXXX", 4);
  try {
    parse_container(bytes);
    FAIL();
  } catch (const ContainerError& e) {
    EXPECT_EQ(e.kind(), ContainerError::Kind::BadMagic);
    EXPECT_STREQ(e.what(), "not a CVW file");
  }
  EXPECT_EQ(error_kind({}), ContainerError::Kind::BadMagic);
}

TEST(ContainerTest, UnsupportedVersion) {
  std::vector<std::uint8_t> bytes = write_container(two_layer_container());
  bytes[4] = 2;
  EXPECT_EQ(error_kind(bytes), ContainerError::Kind::UnsupportedVersion);
}

TEST(ContainerTest, RoundTripIsByteIdentical) {
  const WeightContainer c = two_layer_container();
  const auto bytes = write_container(c);
  const WeightContainer parsed = parse_container(bytes);
  EXPECT_EQ(parsed, c);
  EXPECT_EQ(write_container(parsed), bytes);
  EXPECT_EQ(write_container(c), bytes);
}

TEST(ContainerTest, LayoutIsHeaderMetadataThenBlobsInOrder) {
  const WeightContainer c = two_layer_container();
  const auto bytes = write_container(c);
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CVW1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  const std::uint32_t len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
  const auto meta = nlohmann::json::parse(std::string(bytes.begin() + 12, bytes.begin() + 12 + len));
  ASSERT_EQ(meta["tensors"].size(), 4u);
  const char* names[] = {"conv.w", "conv.b", "fc.w", "fc.b"};
  // conv.w 2x3x1x1, conv.b 2, fc.w 2x8, fc.b 2
  const std::size_t counts[] = {6, 2, 16, 2};
  std::size_t offset = 12 + len;
  float expected = 0.0f;
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(meta["tensors"][t]["name"], names[t]);
    for (std::size_t i = 0; i < counts[t]; ++i) {
      float v;
      std::memcpy(&v, bytes.data() + offset, 4);
      EXPECT_EQ(v, expected += 0.5f);
      offset += 4;
    }
  }
  EXPECT_EQ(offset, bytes.size());
  EXPECT_EQ(meta["preprocessing"]["channel_order"], "BGR");
  EXPECT_EQ(meta["class_labels"][1], "airplane");
}

TEST(ContainerTest, CorruptionsMapToErrorKinds) {
  const auto bytes = write_container(two_layer_container());
  const std::string meta = metadata_json(two_layer_container());
  using Kind = ContainerError::Kind;

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  EXPECT_EQ(error_kind(truncated), Kind::Corrupt);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(error_kind(trailing), Kind::Corrupt);
  EXPECT_EQ(error_kind(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)), Kind::Corrupt);
  EXPECT_EQ(error_kind(with_metadata(bytes, "{not json")), Kind::Corrupt);

  auto j = nlohmann::ordered_json::parse(meta);
  j["tensors"][2]["shape"] = {8, 2};
  EXPECT_EQ(error_kind(with_metadata(bytes, j.dump())), Kind::Schema);

  j = nlohmann::ordered_json::parse(meta);
  j["tensors"].erase(3);
  EXPECT_EQ(error_kind(with_metadata(bytes, j.dump(), 2 * 4)), Kind::Schema);

  j = nlohmann::ordered_json::parse(meta);
  j["layers"][0]["kind"] = "deconv";
  EXPECT_EQ(error_kind(with_metadata(bytes, j.dump())), Kind::Schema);

  j = nlohmann::ordered_json::parse(meta);
  j["preprocessing"].erase("mean");
  EXPECT_EQ(error_kind(with_metadata(bytes, j.dump())), Kind::Schema);

  j = nlohmann::ordered_json::parse(meta);
  j["tensors"][1]["name"] = "conv.w";
  EXPECT_EQ(error_kind(with_metadata(bytes, j.dump())), Kind::Schema);
}

TEST(ContainerTest, WriteRejectsInvalidContainer) {
  WeightContainer c = two_layer_container();
  c.tensors.pop_back();
  EXPECT_THROW(write_container(c), ContainerError);
}

TEST(ContainerTest, MissingFileIsIoError) {
  EXPECT_THROW(load_container_file("/nonexistent/model.cvw"), IoError);
}

// ---- network and forward ----

TEST(NetworkTest, LoadsFixtureAndCountsConvs) {
  Rng rng(3);
  const Network net = load_network(testing::random_container(testing::two_conv_arch({3, 4, 4}, 2, 3, 4), rng));
  EXPECT_EQ(net.conv_layer_count(), 2u);
  EXPECT_EQ(net.num_classes(), 4u);
  EXPECT_EQ(net.logits_layer(), 6u);
  EXPECT_EQ(net.head_start(), 5u);
}

TEST(NetworkTest, MissingBiasIsSchemaError) {
  Rng rng(4);
  WeightContainer c = testing::random_container(testing::tiny_arch({3, 4, 4}, 2, 3), rng);
  c.tensors.erase(c.tensors.begin() + 1);
  try {
    load_network(std::move(c));
    FAIL();
  } catch (const ContainerError& e) {
    EXPECT_EQ(e.kind(), ContainerError::Kind::Schema);
  }
}

class ForwardTest : public ::testing::Test {
 protected:
  ForwardTest()
      : rng_(8),
        net_(testing::random_container(testing::two_conv_arch({3, 6, 6}, 4, 3, 5), rng_)),
        input_(testing::random_tensor({3, 6, 6}, rng_)) {}
  Rng rng_;
  Network net_;
  Tensor input_;
};

TEST_F(ForwardTest, EmptyCaptureGivesOnlyLogits) {
  const ForwardResult r = forward(net_, input_);
  EXPECT_TRUE(r.trace.entries.empty());
  EXPECT_TRUE(r.trace.pre_activation.empty());
  EXPECT_TRUE(r.trace.pool_argmax.empty());
  EXPECT_EQ(r.logits.size(), 5u);
  EXPECT_EQ(r.probs.size(), 5u);
}

TEST_F(ForwardTest, CaptureAllMatchesDeclaredShapes) {
  ForwardOptions o;
  for (std::size_t i = 0; i < net_.layer_count(); ++i) o.capture.insert(i);
  const ForwardResult r = forward(net_, input_, o);
  ASSERT_EQ(r.trace.entries.size(), net_.layer_count());
  for (const auto& [i, t] : r.trace.entries) EXPECT_EQ(t.shape(), net_.output_shape(i));
  EXPECT_EQ(r.trace.entries.at(net_.layer_count() - 1), r.probs);
}

TEST_F(ForwardTest, LogitsMatchManualComposition) {
  const Tensor c1 = conv2d(input_, net_.weight(0), net_.bias(0), {1, 1});
  const Tensor c2 = conv2d(relu(c1), net_.weight(2), net_.bias(2), {1, 1});
  const Tensor pooled = maxpool2d(relu(c2)).output;
  const Tensor logits = dense(pooled.reshaped({pooled.size()}), net_.weight(6), net_.bias(6));
  const ForwardResult r = forward(net_, input_);
  for (std::size_t i = 0; i < logits.size(); ++i) EXPECT_NEAR(r.logits[i], logits[i], 1e-5);
}

TEST_F(ForwardTest, Deterministic) {
  EXPECT_EQ(forward(net_, input_).logits, forward(net_, input_).logits);
}

TEST_F(ForwardTest, CaptureNeverPerturbsComputation) {
  ForwardOptions all;
  for (std::size_t i = 0; i < net_.layer_count(); ++i) all.capture.insert(i);
  const ForwardResult full = forward(net_, input_, all);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    ForwardOptions sub;
    for (std::size_t i = 0; i < net_.layer_count(); ++i) {
      if (coin(rng_)) sub.capture.insert(i);
    }
    const ForwardResult r = forward(net_, input_, sub);
    EXPECT_EQ(r.logits, full.logits);
    EXPECT_EQ(r.trace.entries.size(), sub.capture.size());
    for (const auto& [i, t] : r.trace.entries) EXPECT_EQ(t, full.trace.entries.at(i));
  }
}

TEST_F(ForwardTest, BookkeepingFollowsBackwardIntent) {
  ForwardOptions o;
  o.backward_from = 1;
  const ForwardResult r = forward(net_, input_, o);
  EXPECT_EQ(r.trace.pre_activation.size(), 1u);
  EXPECT_TRUE(r.trace.pre_activation.contains(3));
  EXPECT_TRUE(r.trace.pool_argmax.contains(4));

  ForwardOptions d;
  d.capture = {0, 3};
  const ForwardResult rd = forward(net_, input_, d);
  EXPECT_TRUE(rd.trace.pre_activation.empty());
  EXPECT_TRUE(rd.trace.pool_argmax.contains(4));

  ForwardOptions e;
  e.backward_from = 0;
  const ForwardResult re = forward(net_, input_, e);
  EXPECT_EQ(re.trace.pre_activation.size(), 2u);
  EXPECT_EQ(re.trace.pre_activation.at(1),
            conv2d(input_, net_.weight(0), net_.bias(0), {1, 1}));
}

TEST_F(ForwardTest, Errors) {
  EXPECT_THROW(forward(net_, Tensor({3, 6, 5})), ShapeError);
  ForwardOptions o;
  o.capture = {net_.layer_count()};
  EXPECT_THROW(forward(net_, input_, o), RangeError);
}

TEST_F(ForwardTest, SegmentComposesToFullForward) {
  const Tensor mid = forward_segment(net_, input_, 0, 4);
  const Tensor logits = forward_segment(net_, mid, 4, net_.logits_layer() + 1);
  EXPECT_EQ(logits, forward(net_, input_).logits);
  EXPECT_THROW(forward_segment(net_, input_, 2, 4), ShapeError);
}

}  // namespace
}  // namespace convlens
