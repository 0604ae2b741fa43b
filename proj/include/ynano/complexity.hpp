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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ynano/graph.hpp"

namespace ynano {

/// Cost of one sub-layer. Linear layers (convolution, dense) have
/// ops = 2 * macs; elementwise layers have macs = 0 and one op per output
/// element.
struct LayerCost {
  std::string name;
  int64_t macs = 0;
  int64_t ops = 0;
  int64_t params = 0;
  bool linear = false;
};

struct NodeCost {
  int64_t macs = 0;
  int64_t ops = 0;
  int64_t params = 0;
  std::vector<LayerCost> layers;
};

struct OpsReport {
  std::vector<NodeCost> nodes;
  int64_t total_macs = 0;
  int64_t total_ops = 0;
  int64_t total_params = 0;
  /// Decode cost (one op per raw prediction element); not part of total_ops.
  int64_t postprocess_ops = 0;
};

NodeCost count_node(const NodeSpec& node, const Shape3& in, const Shape3& out);
OpsReport count_network(const NetworkSpec& spec);
OpsReport count_network(const NetworkSpec& spec, const ShapeTable& shapes);

/// Tab-separated `node_id kind macs ops params` rows followed by TOTAL.
std::string format_ops_report(const NetworkSpec& spec, const OpsReport& report);

struct ParamBreakdown {
  int64_t weight_params = 0;   // kernels and dense matrices
  int64_t bias_params = 0;
  int64_t weight_tensors = 0;  // tensors that get a scale/zero-point in 8-bit mode
  int64_t total() const { return weight_params + bias_params; }
};

ParamBreakdown param_breakdown(const NetworkSpec& spec);

/// Serialized weight payload in bytes. 32-bit: 4 bytes per parameter.
/// 8-bit: 1 byte per parameter plus overhead; the overhead is an 8-byte
/// scale/zero-point per weight tensor and 3 extra bytes per bias (biases stay f32).
int64_t model_size_bytes(const NetworkSpec& spec, int bits_per_weight);

/// Per-tensor asymmetric 8-bit weights.
struct QuantizedWeights {
  std::vector<uint8_t> values;
  float scale = 1.0f;
  int32_t zero_point = 0;
};

/// The quantization range is widened to contain zero so the zero point
/// stays in [0, 255]; an all-zero tensor gets scale 1. Rounds half to even.
QuantizedWeights quantize_tensor(std::span<const float> w);
std::vector<float> dequantize(const QuantizedWeights& q);

/// Quantize-dequantize on a grid of 2^bits - 1 steps (2 <= bits <= 16).
std::vector<float> fake_quantize(std::span<const float> w, int bits);

/// Replaces every kernel/dense matrix with its `bits`-bit fake-quantized copy.
WeightStore fake_quantize_weights(const WeightStore& weights, int bits);

/// The constraint indicator. Unset fields are not checked.
struct ConstraintSet {
  std::optional<int64_t> max_ops;
  std::optional<double> min_score;
  std::optional<int> weight_bits;
};

/// True iff every enabled constraint holds for a model stored at `deployed_bits`.
bool check_constraints(const OpsReport& report, double map_proxy, const ConstraintSet& constraints,
                       int deployed_bits = 8);

}  // namespace ynano
