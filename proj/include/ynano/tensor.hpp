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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ynano/errors.hpp"

namespace ynano {

/// Default negative slope for leaky ReLU (YOLO-family convention).
inline constexpr float kLeakySlope = 0.1f;

struct Shape4 {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  bool operator==(const Shape4&) const = default;
};

/// Dense (n, c, h, w) float tensor, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape, float fill = 0.0f);
  Tensor(Shape4 shape, std::vector<float> data);

  const Shape4& shape() const { return shape_; }
  int64_t n() const { return shape_.n; }
  int64_t c() const { return shape_.c; }
  int64_t h() const { return shape_.h; }
  int64_t w() const { return shape_.w; }
  size_t size() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  float& at(int64_t n, int64_t c, int64_t y, int64_t x) {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + y) * shape_.w + x)];
  }
  float at(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data_[static_cast<size_t>(((n * shape_.c + c) * shape_.h + y) * shape_.w + x)];
  }

  /// Pointer to the start of one (h, w) plane.
  float* plane(int64_t n, int64_t c) { return data_.data() + (n * shape_.c + c) * shape_.h * shape_.w; }
  const float* plane(int64_t n, int64_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.h * shape_.w;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape4 shape_;
  std::vector<float> data_;
};

/// Grouped 2-D convolution parameters. The kernel is stored as a tensor of
/// shape (c_out, c_in / groups, k, k).
struct ConvWeights {
  Tensor kernel;
  std::vector<float> bias;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int64_t out_channels() const { return kernel.n(); }
  int64_t in_per_group() const { return kernel.c(); }
  int64_t kernel_size() const { return kernel.h(); }
  bool operator==(const ConvWeights&) const = default;
};

/// Fully-connected layer; `weights` is (out, in) row-major.
struct DenseWeights {
  int64_t in = 0;
  int64_t out = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  bool operator==(const DenseWeights&) const = default;
};

// Each output element accumulates in a fixed order (input channel, kernel
// row, kernel column) starting from zero; the bias is added last.
Tensor conv2d(const Tensor& input, const ConvWeights& w);
Tensor depthwise_conv2d(const Tensor& input, const ConvWeights& w);

Tensor leaky_relu(const Tensor& input, float slope = kLeakySlope);
void leaky_relu_inplace(Tensor& t, float slope = kLeakySlope);
Tensor sigmoid(const Tensor& input);
float sigmoid(float x);

Tensor global_avg_pool(const Tensor& input);
std::vector<float> dense(std::span<const float> input, const DenseWeights& w);

/// Max pooling with darknet padding: size - 1 zero-cost padding cells on the
/// bottom/right, so output = (h - 1) / stride + 1.
Tensor max_pool2d(const Tensor& input, int size, int stride);
Tensor upsample_nearest(const Tensor& input, int factor);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& t, int64_t begin, int64_t count);
Tensor add(const Tensor& a, const Tensor& b);

/// Multiplies channel i by scales[i]. `scales` has length c (shared across
/// the batch) or n * c (one vector per sample).
Tensor channel_scale(const Tensor& input, std::span<const float> scales);

}  // namespace ynano
