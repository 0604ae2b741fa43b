/* Copyright 2026 The ynano Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include "test_support.hpp"

using namespace ynano;
using ytest::Rng;

TEST_CASE("conv2d identity and hand sums") {
  ConvWeights w;
  w.kernel = Tensor({1, 1, 1, 1}, 1.0f);
  w.bias = {0.0f};
  const Tensor y = conv2d(Tensor({1, 1, 1, 1}, 5.0f), w);
  CHECK(y.at(0, 0, 0, 0) == 5.0f);

  ConvWeights w3;
  w3.kernel = Tensor({1, 1, 3, 3}, 1.0f);
  w3.bias = {0.0f};
  w3.padding = 1;
  const Tensor z = conv2d(Tensor({1, 1, 3, 3}, 1.0f), w3);
  CHECK(z.at(0, 0, 1, 1) == 9.0f);
  CHECK(z.at(0, 0, 0, 0) == 4.0f);
  CHECK(z.at(0, 0, 2, 2) == 4.0f);
  CHECK(z.at(0, 0, 0, 1) == 6.0f);
}

TEST_CASE("conv2d matches the direct oracle on a fixed instance") {
  Rng rng(11);
  const Tensor x = ytest::random_tensor(rng, {1, 4, 8, 8});
  const ConvWeights w = ytest::random_conv(rng, 6, 4, 3, 1, 1, 1);
  CHECK(ytest::max_rel_error(conv2d(x, w), ytest::naive_conv2d(x, w)) <= 1e-5);
}

TEST_CASE("conv2d shape property over strides, kernels and padding") {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const int s = rng.range(1, 2), k = rng.coin() ? 1 : 3, p = rng.range(0, 1);
    const int64_t h = rng.range(3, 12), wd = rng.range(3, 12);
    const Tensor x = ytest::random_tensor(rng, {rng.range(1, 2), rng.range(1, 4), h, wd});
    const ConvWeights w = ytest::random_conv(rng, rng.range(1, 5), x.c(), k, s, p, 1);
    const Tensor y = conv2d(x, w);
    CHECK(y.h() == (h + 2 * p - k) / s + 1);
    CHECK(y.w() == (wd + 2 * p - k) / s + 1);
    CHECK(y.c() == w.kernel.n());
    CHECK(y.n() == x.n());
    CHECK(ytest::max_rel_error(y, ytest::naive_conv2d(x, w)) <= 1e-5);
  }
}

TEST_CASE("conv2d grouped and error cases") {
  Rng rng(13);
  const Tensor x = ytest::random_tensor(rng, {1, 4, 6, 6});
  const ConvWeights g2 = ytest::random_conv(rng, 6, 2, 3, 1, 1, 2);
  CHECK(ytest::max_rel_error(conv2d(x, g2), ytest::naive_conv2d(x, g2)) <= 1e-5);

  const ConvWeights bad = ytest::random_conv(rng, 2, 3, 3, 1, 1, 1);
  CHECK_THROWS_AS(conv2d(x, bad), ConfigError);
  const ConvWeights huge = ytest::random_conv(rng, 2, 4, 9, 1, 0, 1);
  CHECK_THROWS_AS(conv2d(x, huge), ConfigError);
}

TEST_CASE("conv2d is deterministic") {
  Rng rng(14);
  const Tensor x = ytest::random_tensor(rng, {2, 5, 9, 7});
  const ConvWeights w = ytest::random_conv(rng, 4, 5, 3, 2, 1, 1);
  CHECK(conv2d(x, w) == conv2d(x, w));
}

TEST_CASE("depthwise examples") {
  ConvWeights w;
  w.kernel = Tensor({2, 1, 3, 3}, 1.0f);
  for (int i = 0; i < 9; ++i) w.kernel.values()[static_cast<size_t>(i)] = 0.0f;
  w.bias = {0.25f, 0.0f};
  w.padding = 1;
  w.groups = 2;
  Rng rng(21);
  const Tensor x = ytest::random_tensor(rng, {1, 2, 5, 5});
  const Tensor y = depthwise_conv2d(x, w);
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 5; ++j) CHECK(y.at(0, 0, i, j) == 0.25f);

  ConvWeights s2 = ytest::random_conv(rng, 8, 1, 3, 2, 1, 8);
  const Tensor big = depthwise_conv2d(ytest::random_tensor(rng, {1, 8, 16, 16}), s2);
  CHECK(big.h() == 8);
  CHECK(big.w() == 8);

  ConvWeights wrong = ytest::random_conv(rng, 4, 1, 3, 1, 1, 4);
  CHECK_THROWS_AS(depthwise_conv2d(x, wrong), ConfigError);
}

TEST_CASE("depthwise equals block-diagonal conv2d") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t c = rng.range(1, 8);
    const Tensor x = ytest::random_tensor(rng, {rng.range(1, 2), c, rng.range(3, 12), rng.range(3, 12)});
    const ConvWeights w = ytest::random_conv(rng, c, 1, 3, rng.range(1, 2), 1, static_cast<int>(c));
    CHECK(ytest::max_abs_error(depthwise_conv2d(x, w), conv2d(x, ytest::block_diagonal(w))) <= 1e-6);
  }
}

TEST_CASE("depthwise channel isolation") {
  Rng rng(23);
  Tensor x = ytest::random_tensor(rng, {1, 3, 6, 6});
  const ConvWeights w = ytest::random_conv(rng, 3, 1, 3, 1, 1, 3);
  const Tensor a = depthwise_conv2d(x, w);
  for (int64_t i = 0; i < 6; ++i) x.at(0, 2, i, i) += 3.0f;
  const Tensor b = depthwise_conv2d(x, w);
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 0; i < 6; ++i)
      for (int64_t j = 0; j < 6; ++j) CHECK(a.at(0, c, i, j) == b.at(0, c, i, j));
}

TEST_CASE("leaky relu and sigmoid") {
  const Tensor t({1, 3, 1, 1}, std::vector<float>{3.0f, -2.0f, -5.0f});
  const Tensor y = leaky_relu(t, 0.1f);
  CHECK(y.values()[0] == 3.0f);
  CHECK(y.values()[1] == doctest::Approx(-0.2f).epsilon(1e-7));
  CHECK(leaky_relu(t, 0.0f).values()[2] == 0.0f);

  CHECK(sigmoid(0.0f) == 0.5f);
  CHECK(std::fabs(sigmoid(100.0f) - 1.0f) <= 1e-6f);
  for (float x : {0.1f, 1.0f, 3.5f, 20.0f, 90.0f}) CHECK(std::fabs(sigmoid(x) + sigmoid(-x) - 1.0f) <= 1e-6f);
  const Tensor s = sigmoid(Tensor({1, 4, 1, 1}, std::vector<float>{-30.0f, -1.0f, 1.0f, 30.0f}));
  for (size_t i = 0; i + 1 < s.size(); ++i) CHECK(s.values()[i] <= s.values()[i + 1]);
  CHECK(sigmoid(-1000.0f) >= 0.0f);
  CHECK(std::isfinite(sigmoid(-1000.0f)));
}

TEST_CASE("global average pool") {
  CHECK(global_avg_pool(Tensor({1, 1, 3, 3}, 7.0f)).values()[0] == 7.0f);
  const Tensor t({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(global_avg_pool(t).values()[0] == 2.5f);
  const Tensor p({1, 1, 2, 2}, std::vector<float>{4, 1, 3, 2});
  CHECK(global_avg_pool(p).values()[0] == 2.5f);
  CHECK_THROWS_AS(global_avg_pool(Tensor({1, 2, 0, 3})), ConfigError);
  const Tensor g = global_avg_pool(Tensor({2, 3, 4, 4}, 1.0f));
  CHECK(g.shape() == Shape4{2, 3, 1, 1});
}

TEST_CASE("dense") {
  DenseWeights id{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}};
  const std::vector<float> x{0.5f, -1.0f, 2.0f};
  CHECK(dense(x, id) == x);
  DenseWeights zero{3, 2, std::vector<float>(6, 0.0f), {1.5f, -2.0f}};
  CHECK(dense(x, zero) == std::vector<float>{1.5f, -2.0f});

  Rng rng(31);
  const DenseWeights d = ytest::random_dense(rng, 4, 3);
  const std::vector<float> v{0.3f, -0.7f, 1.1f, 0.05f};
  const auto y = dense(v, d);
  for (int o = 0; o < 3; ++o) {
    double acc = d.bias[o];
    for (int i = 0; i < 4; ++i) acc += double(d.weights[o * 4 + i]) * v[i];
    CHECK(std::fabs(y[o] - acc) <= 1e-6);
  }
  CHECK_THROWS_AS(dense(std::vector<float>{1, 2}, d), ConfigError);
}

TEST_CASE("upsample, concat, slice") {
  Rng rng(41);
  const Tensor x = ytest::random_tensor(rng, {1, 2, 3, 4});
  CHECK(upsample_nearest(x, 1) == x);
  const Tensor u = upsample_nearest(Tensor({1, 1, 1, 1}, 3.0f), 2);
  CHECK(u == Tensor({1, 1, 2, 2}, 3.0f));
  const Tensor u3 = upsample_nearest(x, 3);
  double s_in = 0, s_out = 0;
  for (float v : x.values()) s_in += v;
  for (float v : u3.values()) s_out += v;
  CHECK(s_out == doctest::Approx(9.0 * s_in).epsilon(1e-9));

  const Tensor a = ytest::random_tensor(rng, {1, 2, 4, 4});
  const Tensor b = ytest::random_tensor(rng, {1, 3, 4, 4});
  const Tensor ab = concat_channels(a, b);
  CHECK(ab.shape() == Shape4{1, 5, 4, 4});
  CHECK(slice_channels(ab, 0, 2) == a);
  CHECK(slice_channels(ab, 2, 3) == b);
  CHECK(concat_channels(a, Tensor({1, 0, 4, 4})) == a);
  CHECK_THROWS_AS(concat_channels(a, Tensor({1, 1, 3, 4})), ConfigError);
}

TEST_CASE("add and channel scale") {
  Rng rng(51);
  const Tensor a = ytest::random_tensor(rng, {1, 2, 3, 3});
  const Tensor b = ytest::random_tensor(rng, {1, 2, 3, 3});
  CHECK(add(a, Tensor(a.shape())) == a);
  Tensor neg = a;
  for (auto& v : neg.values()) v = -v;
  CHECK(add(a, neg) == Tensor(a.shape()));
  CHECK(add(a, b) == add(b, a));
  CHECK_THROWS_AS(add(a, Tensor({1, 3, 3, 3})), ConfigError);

  CHECK(channel_scale(a, std::vector<float>{1, 1}) == a);
  CHECK(channel_scale(a, std::vector<float>{0, 0}) == Tensor(a.shape()));
  const Tensor s = channel_scale(Tensor({1, 2, 2, 2}, 1.0f), std::vector<float>{2.0f, 0.5f});
  CHECK(s.at(0, 0, 1, 1) == 2.0f);
  CHECK(s.at(0, 1, 0, 1) == 0.5f);
  CHECK_THROWS_AS(channel_scale(a, std::vector<float>{1, 1, 1}), ConfigError);
}

TEST_CASE("max pool uses darknet padding") {
  const Tensor x({1, 1, 4, 4}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  const Tensor y = max_pool2d(x, 2, 2);
  CHECK(y.shape() == Shape4{1, 1, 2, 2});
  CHECK(y.values()[0] == 6.0f);
  CHECK(y.values()[3] == 16.0f);
  const Tensor z = max_pool2d(x, 2, 1);
  CHECK(z.shape() == Shape4{1, 1, 4, 4});
  CHECK(z.at(0, 0, 3, 3) == 16.0f);
  CHECK(z.at(0, 0, 0, 0) == 6.0f);
  const Tensor neg({1, 1, 1, 1}, -3.0f);
  CHECK(max_pool2d(neg, 2, 1).values()[0] == -3.0f);
}
