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

#include "ynano/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ynano {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class CostBuilder {
 public:
  void conv(const char* name, int64_t c_in_per_group, int64_t c_out, int64_t k, int64_t oh, int64_t ow) {
    LayerCost l;
    l.name = name;
    l.macs = k * k * c_in_per_group * c_out * oh * ow;
    l.ops = 2 * l.macs;
    l.params = k * k * c_in_per_group * c_out + c_out;
    l.linear = true;
    push(std::move(l));
  }
  void dense(const char* name, int64_t in, int64_t out) {
    LayerCost l;
    l.name = name;
    l.macs = in * out;
    l.ops = 2 * l.macs;
    l.params = in * out + out;
    l.linear = true;
    push(std::move(l));
  }
  void elementwise(const char* name, int64_t elements) {
    LayerCost l;
    l.name = name;
    l.ops = elements;
    push(std::move(l));
  }
  NodeCost take() { return std::move(cost_); }

 private:
  void push(LayerCost l) {
    cost_.macs += l.macs;
    cost_.ops += l.ops;
    cost_.params += l.params;
    cost_.layers.push_back(std::move(l));
  }
  NodeCost cost_;
};

std::string fmt_count(int64_t v) { return std::to_string(v); }

}  // namespace

NodeCost count_node(const NodeSpec& node, const Shape3& in, const Shape3& out) {
  CostBuilder b;
  const int64_t out_elems = out.c * out.h * out.w;
  std::visit(overloaded{
                 [&](const ConvNode& c) {
                   b.conv("conv", in.c, out.c, c.kernel, out.h, out.w);
                   b.elementwise("leaky", out_elems);
                 },
                 [&](const PepConfig& c) {
                   const int64_t x = c.proj1_channels;
                   const int64_t e = c.expansion_channels;
                   b.conv("project", in.c, x, 1, in.h, in.w);
                   b.elementwise("leaky", x * in.h * in.w);
                   b.conv("expand", x, e, 1, in.h, in.w);
                   b.elementwise("leaky", e * in.h * in.w);
                   b.conv("depthwise", 1, e, kDepthwiseKernel, out.h, out.w);
                   b.elementwise("leaky", e * out.h * out.w);
                   b.conv("project", e, out.c, 1, out.h, out.w);
                   if (residual_eligible(in.c, c.out_channels, c.stride)) b.elementwise("residual", out_elems);
                 },
                 [&](const EpConfig& c) {
                   const int64_t e = c.expansion_channels;
                   b.conv("expand", in.c, e, 1, in.h, in.w);
                   b.elementwise("leaky", e * in.h * in.w);
                   b.conv("depthwise", 1, e, kDepthwiseKernel, out.h, out.w);
                   b.elementwise("leaky", e * out.h * out.w);
                   b.conv("project", e, out.c, 1, out.h, out.w);
                   if (residual_eligible(in.c, c.out_channels, c.stride)) b.elementwise("residual", out_elems);
                 },
                 [&](const FcaConfig& c) {
                   const int64_t r = fca_bottleneck(in.c, c.reduction_ratio);
                   b.elementwise("pool", in.c);
                   b.dense("fc1", in.c, r);
                   b.elementwise("leaky", r);
                   b.dense("fc2", r, in.c);
                   b.elementwise("sigmoid", in.c);
                   b.elementwise("scale", out_elems);
                 },
                 [&](const UpsampleNode&) { b.elementwise("upsample", out_elems); },
                 [&](const ConcatNode&) {},
                 [&](const MaxPoolNode&) { b.elementwise("maxpool", out_elems); },
                 [&](const DetectNode&) { b.conv("head", in.c, out.c, 1, out.h, out.w); },
             },
             node.op);
  return b.take();
}

OpsReport count_network(const NetworkSpec& spec, const ShapeTable& shapes) {
  OpsReport report;
  for (const auto& node : spec.nodes) {
    NodeCost cost = count_node(node, shapes.input_of(node), shapes.out[node.id]);
    report.total_macs += cost.macs;
    report.total_ops += cost.ops;
    report.total_params += cost.params;
    if (std::holds_alternative<DetectNode>(node.op)) {
      const Shape3& o = shapes.out[node.id];
      report.postprocess_ops += o.c * o.h * o.w;
    }
    report.nodes.push_back(std::move(cost));
  }
  return report;
}

OpsReport count_network(const NetworkSpec& spec) { return count_network(spec, infer_shapes(spec)); }

std::string format_ops_report(const NetworkSpec& spec, const OpsReport& report) {
  std::ostringstream os;
  os << "node_id\tkind\tmacs\tops\tparams\n";
  for (size_t i = 0; i < report.nodes.size(); ++i) {
    const auto& c = report.nodes[i];
    os << i << '\t' << kind_name(spec.nodes[i].op) << '\t' << fmt_count(c.macs) << '\t' << fmt_count(c.ops) << '\t'
       << fmt_count(c.params) << '\n';
  }
  os << "TOTAL\t-\t" << report.total_macs << '\t' << report.total_ops << '\t' << report.total_params << '\n';
  return os.str();
}

ParamBreakdown param_breakdown(const NetworkSpec& spec) {
  const WeightStore layout = weight_layout(spec);
  ParamBreakdown b;
  for (const auto& node : layout.nodes) {
    for (const auto& c : node.convs) {
      b.weight_params += static_cast<int64_t>(c.kernel.size());
      b.bias_params += static_cast<int64_t>(c.bias.size());
      ++b.weight_tensors;
    }
    for (const auto& d : node.dense) {
      b.weight_params += static_cast<int64_t>(d.weights.size());
      b.bias_params += static_cast<int64_t>(d.bias.size());
      ++b.weight_tensors;
    }
  }
  return b;
}

int64_t model_size_bytes(const NetworkSpec& spec, int bits_per_weight) {
  const ParamBreakdown b = param_breakdown(spec);
  switch (bits_per_weight) {
    case 32: return 4 * b.total();
    case 8: return b.total() + 3 * b.bias_params + 8 * b.weight_tensors;
    default: throw ConfigError("unsupported weight precision " + std::to_string(bits_per_weight) + " (use 8 or 32)");
  }
}

namespace {

struct Grid {
  double scale;
  int64_t zero_point;
  int64_t levels;
};

Grid make_grid(std::span<const float> w, int bits) {
  if (w.empty()) throw ConfigError("quantize: empty tensor");
  double lo = 0.0;
  double hi = 0.0;
  for (float v : w) {
    if (!std::isfinite(v)) throw ConfigError("quantize: non-finite value");
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  const int64_t levels = (int64_t{1} << bits) - 1;
  if (std::all_of(w.begin(), w.end(), [&](float v) { return v == w.front(); }) && w.front() != 0.0f) {
    // A constant tensor is one grid step from zero, so it round-trips exactly.
    const float c = w.front();
    return {std::fabs(static_cast<double>(c)), c > 0.0f ? 0 : 1, levels};
  }
  float scale = static_cast<float>((hi - lo) / static_cast<double>(levels));
  // Round the stored scale up so the grid always spans [lo, hi].
  while (static_cast<double>(scale) * static_cast<double>(levels) < hi - lo) {
    scale = std::nextafter(scale, INFINITY);
  }
  if (!(scale > 0.0f)) scale = 1.0f;
  // Keep at most 24 - bits significant bits so (q - zp) * scale is exact in float.
  int e = 0;
  const double m = std::frexp(static_cast<double>(scale), &e);
  const double unit = std::ldexp(1.0, 24 - bits);
  const double s = std::ldexp(std::ceil(m * unit) / unit, e);
  const int64_t zp = std::clamp<int64_t>(static_cast<int64_t>(std::nearbyint(-lo / s)), 0, levels);
  return {s, zp, levels};
}

int64_t quantize_value(float v, const Grid& g) {
  return std::clamp<int64_t>(static_cast<int64_t>(std::nearbyint(static_cast<double>(v) / g.scale)) + g.zero_point,
                             0, g.levels);
}

}  // namespace

QuantizedWeights quantize_tensor(std::span<const float> w) {
  const Grid g = make_grid(w, 8);
  QuantizedWeights q;
  q.scale = static_cast<float>(g.scale);
  q.zero_point = static_cast<int32_t>(g.zero_point);
  q.values.reserve(w.size());
  for (float v : w) q.values.push_back(static_cast<uint8_t>(quantize_value(v, g)));
  return q;
}

std::vector<float> dequantize(const QuantizedWeights& q) {
  std::vector<float> out;
  out.reserve(q.values.size());
  const double s = q.scale;
  for (uint8_t v : q.values) out.push_back(static_cast<float>((static_cast<int64_t>(v) - q.zero_point) * s));
  return out;
}

std::vector<float> fake_quantize(std::span<const float> w, int bits) {
  if (bits < 2 || bits > 16) throw ConfigError("fake_quantize: bits must be in [2, 16]");
  const Grid g = make_grid(w, bits);
  std::vector<float> out;
  out.reserve(w.size());
  for (float v : w) out.push_back(static_cast<float>((quantize_value(v, g) - g.zero_point) * g.scale));
  return out;
}

WeightStore fake_quantize_weights(const WeightStore& weights, int bits) {
  WeightStore out = weights;
  for (auto& node : out.nodes) {
    for (auto& c : node.convs) {
      auto q = fake_quantize(c.kernel.values(), bits);
      std::copy(q.begin(), q.end(), c.kernel.values().begin());
    }
    for (auto& d : node.dense) d.weights = fake_quantize(d.weights, bits);
  }
  return out;
}

bool check_constraints(const OpsReport& report, double map_proxy, const ConstraintSet& constraints,
                       int deployed_bits) {
  if (constraints.max_ops && report.total_ops > *constraints.max_ops) return false;
  if (constraints.min_score && !(map_proxy >= *constraints.min_score)) return false;
  if (constraints.weight_bits && deployed_bits > *constraints.weight_bits) return false;
  return true;
}

}  // namespace ynano
