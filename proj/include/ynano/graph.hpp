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

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ynano/modules.hpp"
#include "ynano/tensor.hpp"

namespace ynano {

/// Detection scales, ordered coarse to fine (13x13, 26x26, 52x52 at 416).
enum class ScaleTag { large = 0, medium = 1, small = 2 };
inline constexpr int kNumScales = 3;

std::string_view to_string(ScaleTag tag);

struct ConvNode {
  int kernel = 1;
  int out_channels = 1;
  int stride = 1;
  bool operator==(const ConvNode&) const = default;
};
struct UpsampleNode {
  int factor = 2;
  bool operator==(const UpsampleNode&) const = default;
};
/// Concatenates the node's input (first) with `with_node` (second).
struct ConcatNode {
  int with_node = 0;
  bool operator==(const ConcatNode&) const = default;
};
/// Darknet-style max pooling; needed by the Tiny YOLOv3 baseline config.
struct MaxPoolNode {
  int size = 2;
  int stride = 2;
  bool operator==(const MaxPoolNode&) const = default;
};
/// Linear 1x1 head producing anchors * (5 + classes) channels.
struct DetectNode {
  ScaleTag tag = ScaleTag::large;
  bool operator==(const DetectNode&) const = default;
};

using NodeOp = std::variant<ConvNode, PepConfig, EpConfig, FcaConfig, UpsampleNode, ConcatNode, MaxPoolNode, DetectNode>;

std::string_view kind_name(const NodeOp& op);

inline constexpr int kNetworkInput = -1;

struct NodeSpec {
  int id = 0;
  NodeOp op;
  int input = kNetworkInput;  // previous node unless rebound with `from`
  bool operator==(const NodeSpec&) const = default;
};

/// Anchor prior in input-image pixels.
struct AnchorSize {
  float w = 0.0f;
  float h = 0.0f;
  bool operator==(const AnchorSize&) const = default;
};

struct Shape3 {
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;
  bool operator==(const Shape3&) const = default;
};

struct NetworkSpec {
  Shape3 input{3, 416, 416};
  int num_classes = 20;
  int anchors_per_scale = 3;
  std::array<std::vector<AnchorSize>, kNumScales> anchors;
  std::vector<NodeSpec> nodes;

  int detect_channels() const { return anchors_per_scale * (5 + num_classes); }
  bool operator==(const NetworkSpec&) const = default;
};

/// YOLOv3 anchor priors at 416x416, used when a document has no `anchors` lines.
std::array<std::vector<AnchorSize>, kNumScales> default_anchors();

struct ShapeTable {
  Shape3 input;
  std::vector<Shape3> out;  // per node

  Shape3 input_of(const NodeSpec& node) const { return node.input == kNetworkInput ? input : out[node.input]; }
  bool operator==(const ShapeTable&) const = default;
};

/// Parses the line-oriented network document. Throws ParseError with the
/// offending line number.
NetworkSpec parse_network_spec(std::string_view text);
NetworkSpec load_network_spec(const std::string& path);
std::string serialize_network_spec(const NetworkSpec& spec);

/// Throws ShapeError naming the first node whose shape cannot be inferred.
ShapeTable infer_shapes(const NetworkSpec& spec);

/// Node ids of detect nodes ordered coarse to fine.
std::vector<int> detect_nodes(const NetworkSpec& spec);

/// True when the network has exactly one detect node for each of the three scales.
bool is_complete_detector(const NetworkSpec& spec);

/// Transcription of the YOLO Nano architecture for 416x416 VOC input.
NetworkSpec yolo_nano_reference();

/// Per-node weights. Parameter-free nodes hold an empty ModuleParams.
struct WeightStore {
  std::vector<ModuleParams> nodes;
  bool operator==(const WeightStore&) const = default;
};

/// Zero-initialised weights with the exact layout `execute` expects.
WeightStore weight_layout(const NetworkSpec& spec, const ShapeTable& shapes);
WeightStore weight_layout(const NetworkSpec& spec);

/// Throws ConfigError on the first node whose parameters do not match.
void validate_weights(const NetworkSpec& spec, const ShapeTable& shapes, const WeightStore& weights);

struct DetectOutput {
  ScaleTag tag;
  int node = 0;
  Tensor raw;
};

/// Receives each node's output right after it is computed.
using NodeObserver = std::function<void(int node, const Tensor& out)>;

/// Runs one forward pass over the node list and returns the detect outputs
/// ordered coarse to fine. Weights are validated before any compute.
std::vector<DetectOutput> execute(const NetworkSpec& spec, const WeightStore& weights, const Tensor& input,
                                  const NodeObserver& observer = {});

/// Forward pass of a single node given its (already computed) inputs.
Tensor forward_node(const NodeSpec& node, const ModuleParams& params, const Tensor& x, const Tensor* concat_with,
                    float slope = kLeakySlope);

}  // namespace ynano
