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

#include "ynano/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ynano {

namespace {

std::string shape_str(const Shape4& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
}

Tensor conv_core(const Tensor& input, const ConvWeights& w) {
  const int64_t k = w.kernel_size();
  const int64_t c_out = w.out_channels();
  const int64_t cin_g = w.in_per_group();
  const int64_t groups = w.groups;
  if (groups < 1 || w.stride < 1 || w.padding < 0) {
    throw ConfigError("conv2d: stride and groups must be positive, padding non-negative");
  }
  if (w.kernel.w() != k || k < 1 || k % 2 == 0) {
    throw ConfigError("conv2d: kernel must be square with odd size");
  }
  if (c_out % groups != 0) throw ConfigError("conv2d: c_out not divisible by groups");
  if (input.c() != groups * cin_g) {
    throw ConfigError("conv2d: input has " + std::to_string(input.c()) + " channels, kernel expects " +
                      std::to_string(groups * cin_g));
  }
  if (static_cast<int64_t>(w.bias.size()) != c_out) throw ConfigError("conv2d: bias length != c_out");

  const int64_t s = w.stride;
  const int64_t p = w.padding;
  const int64_t oh = (input.h() + 2 * p - k) / s + 1;
  const int64_t ow = (input.w() + 2 * p - k) / s + 1;
  if (input.h() + 2 * p - k < 0 || input.w() + 2 * p - k < 0 || oh <= 0 || ow <= 0) {
    throw ConfigError("conv2d: non-positive output spatial size");
  }

  Tensor out({input.n(), c_out, oh, ow});
  const int64_t cout_g = c_out / groups;
  const int64_t ih = input.h();
  const int64_t iw = input.w();

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t co = 0; co < c_out; ++co) {
      const int64_t g = co / cout_g;
      float* dst = out.plane(n, co);
      for (int64_t ci = 0; ci < cin_g; ++ci) {
        const float* src = input.plane(n, g * cin_g + ci);
        for (int64_t ky = 0; ky < k; ++ky) {
          for (int64_t kx = 0; kx < k; ++kx) {
            const float wv = w.kernel.at(co, ci, ky, kx);
            // ox range with 0 <= ox*s - p + kx < iw
            const int64_t ox_lo = std::max<int64_t>(0, (p - kx + s - 1) / s);
            const int64_t last = iw - 1 + p - kx;
            const int64_t ox_hi = last < 0 ? 0 : std::min<int64_t>(ow, last / s + 1);
            for (int64_t oy = 0; oy < oh; ++oy) {
              const int64_t iy = oy * s - p + ky;
              if (iy < 0 || iy >= ih) continue;
              const float* row = src + iy * iw;
              float* orow = dst + oy * ow;
              if (s == 1) {
                const float* r = row - p + kx;
                for (int64_t ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * r[ox];
              } else {
                for (int64_t ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * row[ox * s - p + kx];
              }
            }
          }
        }
      }
      const float b = w.bias[static_cast<size_t>(co)];
      for (int64_t i = 0; i < oh * ow; ++i) dst[i] += b;
    }
  }
  return out;
}

}  // namespace

Tensor::Tensor(Shape4 shape, float fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ConfigError("tensor: negative dimension in " + shape_str(shape));
  }
  data_.assign(static_cast<size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape4 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0 ||
      static_cast<int64_t>(data_.size()) != shape.numel()) {
    throw ConfigError("tensor: data length does not match shape " + shape_str(shape));
  }
}

Tensor conv2d(const Tensor& input, const ConvWeights& w) { return conv_core(input, w); }

Tensor depthwise_conv2d(const Tensor& input, const ConvWeights& w) {
  if (w.groups != input.c()) {
    throw ConfigError("depthwise_conv2d: groups (" + std::to_string(w.groups) + ") != input channels (" +
                      std::to_string(input.c()) + ")");
  }
  if (w.in_per_group() != 1 || w.out_channels() != input.c()) {
    throw ConfigError("depthwise_conv2d: kernel must be (c, 1, k, k)");
  }
  return conv_core(input, w);
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void leaky_relu_inplace(Tensor& t, float slope) {
  for (float& v : t.values()) v = v >= 0.0f ? v : slope * v;
}

Tensor leaky_relu(const Tensor& input, float slope) {
  if (!(slope >= 0.0f && slope < 1.0f)) throw ConfigError("leaky_relu: slope must be in [0, 1)");
  Tensor out = input;
  leaky_relu_inplace(out, slope);
  return out;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const int64_t hw = input.h() * input.w();
  if (hw < 1) throw ConfigError("global_avg_pool: empty spatial extent");
  Tensor out({input.n(), input.c(), 1, 1});
  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      const float* p = input.plane(n, c);
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += p[i];
      out.at(n, c, 0, 0) = static_cast<float>(acc / static_cast<double>(hw));
    }
  }
  return out;
}

std::vector<float> dense(std::span<const float> input, const DenseWeights& w) {
  if (static_cast<int64_t>(input.size()) != w.in) {
    throw ConfigError("dense: input length " + std::to_string(input.size()) + " != " + std::to_string(w.in));
  }
  if (static_cast<int64_t>(w.weights.size()) != w.in * w.out || static_cast<int64_t>(w.bias.size()) != w.out) {
    throw ConfigError("dense: weight/bias size mismatch");
  }
  std::vector<float> out(static_cast<size_t>(w.out));
  for (int64_t o = 0; o < w.out; ++o) {
    const float* row = w.weights.data() + o * w.in;
    float acc = 0.0f;
    for (int64_t i = 0; i < w.in; ++i) acc += row[i] * input[static_cast<size_t>(i)];
    out[static_cast<size_t>(o)] = acc + w.bias[static_cast<size_t>(o)];
  }
  return out;
}

Tensor max_pool2d(const Tensor& input, int size, int stride) {
  if (size < 1 || stride < 1) throw ConfigError("max_pool2d: size and stride must be positive");
  const int64_t oh = (input.h() - 1) / stride + 1;
  const int64_t ow = (input.w() - 1) / stride + 1;
  if (input.h() < 1 || input.w() < 1) throw ConfigError("max_pool2d: empty spatial extent");
  Tensor out({input.n(), input.c(), oh, ow});
  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          float m = -INFINITY;
          for (int64_t ky = 0; ky < size; ++ky) {
            const int64_t iy = oy * stride + ky;
            if (iy >= input.h()) break;
            for (int64_t kx = 0; kx < size; ++kx) {
              const int64_t ix = ox * stride + kx;
              if (ix >= input.w()) break;
              m = std::max(m, src[iy * input.w() + ix]);
            }
          }
          dst[oy * ow + ox] = m;
        }
      }
    }
  }
  return out;
}

Tensor upsample_nearest(const Tensor& input, int factor) {
  if (factor < 1) throw ConfigError("upsample_nearest: factor must be >= 1");
  const int64_t f = factor;
  Tensor out({input.n(), input.c(), input.h() * f, input.w() * f});
  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (int64_t y = 0; y < out.h(); ++y) {
        const float* srow = src + (y / f) * input.w();
        float* drow = dst + y * out.w();
        for (int64_t x = 0; x < out.w(); ++x) drow[x] = srow[x / f];
      }
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ConfigError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
  const int64_t hw = a.h() * a.w();
  for (int64_t n = 0; n < a.n(); ++n) {
    if (a.c() > 0) std::copy_n(a.plane(n, 0), a.c() * hw, out.plane(n, 0));
    if (b.c() > 0) std::copy_n(b.plane(n, 0), b.c() * hw, out.plane(n, a.c()));
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int64_t begin, int64_t count) {
  if (begin < 0 || count < 0 || begin + count > t.c()) throw ConfigError("slice_channels: range out of bounds");
  Tensor out({t.n(), count, t.h(), t.w()});
  const int64_t hw = t.h() * t.w();
  for (int64_t n = 0; n < t.n(); ++n) {
    if (count > 0) std::copy_n(t.plane(n, begin), count * hw, out.plane(n, 0));
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  auto dst = out.values();
  auto src = b.values();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Tensor channel_scale(const Tensor& input, std::span<const float> scales) {
  const auto len = static_cast<int64_t>(scales.size());
  if (len != input.c() && len != input.n() * input.c()) {
    throw ConfigError("channel_scale: " + std::to_string(len) + " scales for " + std::to_string(input.c()) +
                      " channels");
  }
  const bool per_sample = len != input.c();
  Tensor out = input;
  const int64_t hw = input.h() * input.w();
  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      const float s = scales[static_cast<size_t>(per_sample ? n * input.c() + c : c)];
      float* p = out.plane(n, c);
      for (int64_t i = 0; i < hw; ++i) p[i] *= s;
    }
  }
  return out;
}

}  // namespace ynano
