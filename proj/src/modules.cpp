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

#include "ynano/modules.hpp"

#include <string>

namespace ynano {

namespace {

ConvWeights conv_layout(int64_t c_in, int64_t c_out, int k, int stride, int groups) {
  ConvWeights w;
  w.kernel = Tensor({c_out, c_in / groups, k, k});
  w.bias.assign(static_cast<size_t>(c_out), 0.0f);
  w.stride = stride;
  w.padding = k / 2;
  w.groups = groups;
  return w;
}

DenseWeights dense_layout(int64_t in, int64_t out) {
  DenseWeights d;
  d.in = in;
  d.out = out;
  d.weights.assign(static_cast<size_t>(in * out), 0.0f);
  d.bias.assign(static_cast<size_t>(out), 0.0f);
  return d;
}

void check_stride(int stride, const char* what) {
  if (stride != 1 && stride != 2) throw ConfigError(std::string(what) + ": stride must be 1 or 2");
}

Tensor conv_act(const Tensor& x, const ConvWeights& w, float slope) {
  Tensor y = w.groups > 1 ? depthwise_conv2d(x, w) : conv2d(x, w);
  leaky_relu_inplace(y, slope);
  return y;
}

}  // namespace

void validate(const PepConfig& cfg) {
  if (cfg.proj1_channels < 1 || cfg.expansion_channels < 1 || cfg.out_channels < 1) {
    throw ConfigError("pep: channel counts must be positive");
  }
  if (cfg.proj1_channels > cfg.expansion_channels) {
    throw ConfigError("pep: projection width " + std::to_string(cfg.proj1_channels) +
                      " exceeds expansion width " + std::to_string(cfg.expansion_channels));
  }
  check_stride(cfg.stride, "pep");
}

void validate(const EpConfig& cfg) {
  if (cfg.expansion_channels < 1 || cfg.out_channels < 1) throw ConfigError("ep: channel counts must be positive");
  check_stride(cfg.stride, "ep");
}

void validate(const FcaConfig& cfg) {
  if (cfg.reduction_ratio < 1) throw ConfigError("fca: reduction ratio must be positive");
}

ModuleParams pep_param_layout(const PepConfig& cfg, int64_t in_channels) {
  validate(cfg);
  const int e = cfg.expansion_channels;
  ModuleParams p;
  p.convs.push_back(conv_layout(in_channels, cfg.proj1_channels, 1, 1, 1));
  p.convs.push_back(conv_layout(cfg.proj1_channels, e, 1, 1, 1));
  p.convs.push_back(conv_layout(e, e, kDepthwiseKernel, cfg.stride, e));
  p.convs.push_back(conv_layout(e, cfg.out_channels, 1, 1, 1));
  return p;
}

ModuleParams ep_param_layout(const EpConfig& cfg, int64_t in_channels) {
  validate(cfg);
  const int e = cfg.expansion_channels;
  ModuleParams p;
  p.convs.push_back(conv_layout(in_channels, e, 1, 1, 1));
  p.convs.push_back(conv_layout(e, e, kDepthwiseKernel, cfg.stride, e));
  p.convs.push_back(conv_layout(e, cfg.out_channels, 1, 1, 1));
  return p;
}

ModuleParams fca_param_layout(const FcaConfig& cfg, int64_t channels) {
  validate(cfg);
  const int64_t b = fca_bottleneck(channels, cfg.reduction_ratio);
  ModuleParams p;
  p.dense.push_back(dense_layout(channels, b));
  p.dense.push_back(dense_layout(b, channels));
  return p;
}

void check_params(const ModuleParams& expected, const ModuleParams& p, const char* what) {
  const std::string name(what);
  if (expected.convs.size() != p.convs.size() || expected.dense.size() != p.dense.size()) {
    throw ConfigError(name + ": wrong number of sub-layers");
  }
  for (size_t i = 0; i < p.convs.size(); ++i) {
    const auto& e = expected.convs[i];
    const auto& a = p.convs[i];
    if (e.kernel.shape() != a.kernel.shape() || e.bias.size() != a.bias.size() || e.stride != a.stride ||
        e.padding != a.padding || e.groups != a.groups) {
      throw ConfigError(name + ": convolution " + std::to_string(i) + " does not match the configuration");
    }
  }
  for (size_t i = 0; i < p.dense.size(); ++i) {
    const auto& e = expected.dense[i];
    const auto& a = p.dense[i];
    if (e.in != a.in || e.out != a.out || a.weights.size() != e.weights.size() || a.bias.size() != e.bias.size()) {
      throw ConfigError(name + ": dense layer " + std::to_string(i) + " does not match the configuration");
    }
  }
}

Tensor pep_forward(const Tensor& x, const PepConfig& cfg, const ModuleParams& p, float slope) {
  check_params(pep_param_layout(cfg, x.c()), p, "pep");
  Tensor y = conv_act(x, p.convs[0], slope);
  y = conv_act(y, p.convs[1], slope);
  y = conv_act(y, p.convs[2], slope);
  y = conv2d(y, p.convs[3]);
  if (residual_eligible(x.c(), cfg.out_channels, cfg.stride)) y = add(y, x);
  return y;
}

Tensor ep_forward(const Tensor& x, const EpConfig& cfg, const ModuleParams& p, float slope) {
  check_params(ep_param_layout(cfg, x.c()), p, "ep");
  Tensor y = conv_act(x, p.convs[0], slope);
  y = conv_act(y, p.convs[1], slope);
  y = conv2d(y, p.convs[2]);
  if (residual_eligible(x.c(), cfg.out_channels, cfg.stride)) y = add(y, x);
  return y;
}

Tensor fca_forward(const Tensor& x, const FcaConfig& cfg, const ModuleParams& p, float slope) {
  check_params(fca_param_layout(cfg, x.c()), p, "fca");
  const Tensor pooled = global_avg_pool(x);
  std::vector<float> scales;
  scales.reserve(static_cast<size_t>(x.n() * x.c()));
  for (int64_t n = 0; n < x.n(); ++n) {
    std::span<const float> v(pooled.plane(n, 0), static_cast<size_t>(x.c()));
    std::vector<float> hidden = dense(v, p.dense[0]);
    for (float& h : hidden) h = h >= 0.0f ? h : slope * h;
    const std::vector<float> logits = dense(hidden, p.dense[1]);
    for (float l : logits) scales.push_back(sigmoid(l));
  }
  return channel_scale(x, scales);
}

}  // namespace ynano
