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

#include <cstdint>
#include <vector>

#include "ynano/tensor.hpp"

namespace ynano {

/// Residual projection-expansion-projection block:
/// 1x1 project -> 1x1 expand -> 3x3 depthwise -> 1x1 project (linear).
struct PepConfig {
  int proj1_channels = 1;  // the x of PEP(x)
  int expansion_channels = 1;
  int out_channels = 1;
  int stride = 1;
  bool operator==(const PepConfig&) const = default;
};

/// Expansion-projection block: 1x1 expand -> 3x3 depthwise -> 1x1 project.
struct EpConfig {
  int expansion_channels = 1;
  int out_channels = 1;
  int stride = 1;
  bool operator==(const EpConfig&) const = default;
};

/// Fully-connected attention (squeeze-excitation style) with reduction ratio.
struct FcaConfig {
  int reduction_ratio = 1;
  bool operator==(const FcaConfig&) const = default;
};

/// Weights of one module instance. Convolutions and dense layers are stored
/// in forward order.
struct ModuleParams {
  std::vector<ConvWeights> convs;
  std::vector<DenseWeights> dense;
  bool operator==(const ModuleParams&) const = default;
};

inline constexpr int kDepthwiseKernel = 3;

/// Residual add is structural: stride 1 and matching channel counts.
inline bool residual_eligible(int64_t in_channels, int out_channels, int stride) {
  return stride == 1 && in_channels == out_channels;
}

inline int64_t fca_bottleneck(int64_t channels, int reduction) {
  const int64_t b = channels / reduction;
  return b < 1 ? 1 : b;
}

void validate(const PepConfig& cfg);
void validate(const EpConfig& cfg);
void validate(const FcaConfig& cfg);

/// Expected parameter layout for a module with `in_channels` inputs: one
/// ConvWeights / DenseWeights per sub-layer, zero-filled, with stride,
/// padding and groups set.
ModuleParams pep_param_layout(const PepConfig& cfg, int64_t in_channels);
ModuleParams ep_param_layout(const EpConfig& cfg, int64_t in_channels);
ModuleParams fca_param_layout(const FcaConfig& cfg, int64_t channels);

/// Throws ConfigError when `p` does not match the layout for (cfg, in_channels).
void check_params(const ModuleParams& expected, const ModuleParams& p, const char* what);

Tensor pep_forward(const Tensor& x, const PepConfig& cfg, const ModuleParams& p, float slope = kLeakySlope);
Tensor ep_forward(const Tensor& x, const EpConfig& cfg, const ModuleParams& p, float slope = kLeakySlope);
Tensor fca_forward(const Tensor& x, const FcaConfig& cfg, const ModuleParams& p, float slope = kLeakySlope);

}  // namespace ynano
