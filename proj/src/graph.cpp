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

#include "ynano/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace ynano {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> toks;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

int parse_int(std::string_view tok, int line) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError(line, "malformed integer '" + std::string(tok) + "'");
  }
  return v;
}

float parse_float(std::string_view tok, int line) {
  // from_chars for float is not available in every libstdc++ we target.
  std::string s(tok);
  size_t used = 0;
  float v = 0.0f;
  try {
    v = std::stof(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(line, "malformed number '" + s + "'");
  return v;
}

int parse_positive(std::string_view tok, int line, const char* what) {
  const int v = parse_int(tok, line);
  if (v < 1) throw ParseError(line, std::string(what) + " must be positive");
  return v;
}

std::optional<ScaleTag> parse_tag(std::string_view s) {
  if (s == "large") return ScaleTag::large;
  if (s == "medium") return ScaleTag::medium;
  if (s == "small") return ScaleTag::small;
  return std::nullopt;
}

void expect_args(const std::vector<std::string_view>& toks, size_t n, int line) {
  if (toks.size() != n + 1) {
    throw ParseError(line, "'" + std::string(toks[0]) + "' expects " + std::to_string(n) + " argument(s)");
  }
}

std::string format_float(float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

std::string_view to_string(ScaleTag tag) {
  switch (tag) {
    case ScaleTag::large: return "large";
    case ScaleTag::medium: return "medium";
    case ScaleTag::small: return "small";
  }
  return "?";
}

std::string_view kind_name(const NodeOp& op) {
  return std::visit(overloaded{
                        [](const ConvNode&) { return std::string_view("conv"); },
                        [](const PepConfig&) { return std::string_view("pep"); },
                        [](const EpConfig&) { return std::string_view("ep"); },
                        [](const FcaConfig&) { return std::string_view("fca"); },
                        [](const UpsampleNode&) { return std::string_view("upsample"); },
                        [](const ConcatNode&) { return std::string_view("concat"); },
                        [](const MaxPoolNode&) { return std::string_view("maxpool"); },
                        [](const DetectNode&) { return std::string_view("detect"); },
                    },
                    op);
}

std::array<std::vector<AnchorSize>, kNumScales> default_anchors() {
  return {{
      {{116, 90}, {156, 198}, {373, 326}},
      {{30, 61}, {62, 45}, {59, 119}},
      {{10, 13}, {16, 30}, {33, 23}},
  }};
}

NetworkSpec parse_network_spec(std::string_view text) {
  NetworkSpec spec;
  bool have_input = false;
  std::array<bool, kNumScales> have_anchors{};
  std::optional<int> pending_from;
  int pending_from_line = 0;
  int line_no = 0;

  auto push = [&](NodeOp op, int line) {
    NodeSpec node;
    node.id = static_cast<int>(spec.nodes.size());
    node.op = std::move(op);
    if (pending_from) {
      node.input = *pending_from;
      pending_from.reset();
    } else {
      node.input = node.id == 0 ? kNetworkInput : node.id - 1;
    }
    if (const auto* c = std::get_if<ConcatNode>(&node.op); c && (c->with_node < 0 || c->with_node >= node.id)) {
      throw ParseError(line, "concat references node " + std::to_string(c->with_node) +
                                 " which does not precede node " + std::to_string(node.id));
    }
    spec.nodes.push_back(std::move(node));
  };

  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = tokenize(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string_view kw = toks[0];

    if (kw == "input") {
      expect_args(toks, 3, line_no);
      spec.input = {parse_positive(toks[1], line_no, "input channels"), parse_positive(toks[2], line_no, "input height"),
                    parse_positive(toks[3], line_no, "input width")};
      have_input = true;
    } else if (kw == "classes") {
      expect_args(toks, 1, line_no);
      spec.num_classes = parse_positive(toks[1], line_no, "class count");
    } else if (kw == "anchors") {
      if (toks.size() < 3) throw ParseError(line_no, "'anchors' expects a scale tag and at least one w,h pair");
      const auto tag = parse_tag(toks[1]);
      if (!tag) throw ParseError(line_no, "unknown scale tag '" + std::string(toks[1]) + "'");
      std::vector<AnchorSize> list;
      for (size_t i = 2; i < toks.size(); ++i) {
        const auto comma = toks[i].find(',');
        if (comma == std::string_view::npos) {
          throw ParseError(line_no, "anchor '" + std::string(toks[i]) + "' is not a w,h pair");
        }
        AnchorSize a{parse_float(toks[i].substr(0, comma), line_no), parse_float(toks[i].substr(comma + 1), line_no)};
        if (!(a.w > 0.0f && a.h > 0.0f)) throw ParseError(line_no, "anchor sizes must be positive");
        list.push_back(a);
      }
      spec.anchors[static_cast<size_t>(*tag)] = std::move(list);
      have_anchors[static_cast<size_t>(*tag)] = true;
    } else if (kw == "from") {
      expect_args(toks, 1, line_no);
      const int ref = parse_int(toks[1], line_no);
      if (ref < 0 || ref >= static_cast<int>(spec.nodes.size())) {
        throw ParseError(line_no, "from references node " + std::to_string(ref) + " which does not precede node " +
                                      std::to_string(spec.nodes.size()));
      }
      pending_from = ref;
      pending_from_line = line_no;
    } else if (kw == "conv") {
      expect_args(toks, 3, line_no);
      ConvNode c{parse_positive(toks[1], line_no, "kernel size"), parse_positive(toks[2], line_no, "channel count"),
                 parse_positive(toks[3], line_no, "stride")};
      if (c.kernel % 2 == 0) throw ParseError(line_no, "conv kernel size must be odd");
      push(c, line_no);
    } else if (kw == "pep") {
      expect_args(toks, 4, line_no);
      PepConfig c{parse_positive(toks[1], line_no, "projection width"),
                  parse_positive(toks[2], line_no, "expansion width"), parse_positive(toks[3], line_no, "channel count"),
                  parse_positive(toks[4], line_no, "stride")};
      try {
        validate(c);
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
      push(c, line_no);
    } else if (kw == "ep") {
      expect_args(toks, 3, line_no);
      EpConfig c{parse_positive(toks[1], line_no, "expansion width"), parse_positive(toks[2], line_no, "channel count"),
                 parse_positive(toks[3], line_no, "stride")};
      try {
        validate(c);
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
      push(c, line_no);
    } else if (kw == "fca") {
      expect_args(toks, 1, line_no);
      push(FcaConfig{parse_positive(toks[1], line_no, "reduction ratio")}, line_no);
    } else if (kw == "upsample") {
      expect_args(toks, 1, line_no);
      push(UpsampleNode{parse_positive(toks[1], line_no, "upsample factor")}, line_no);
    } else if (kw == "concat") {
      expect_args(toks, 1, line_no);
      push(ConcatNode{parse_int(toks[1], line_no)}, line_no);
    } else if (kw == "maxpool") {
      expect_args(toks, 2, line_no);
      push(MaxPoolNode{parse_positive(toks[1], line_no, "pool size"), parse_positive(toks[2], line_no, "stride")},
           line_no);
    } else if (kw == "detect") {
      expect_args(toks, 1, line_no);
      const auto tag = parse_tag(toks[1]);
      if (!tag) throw ParseError(line_no, "unknown scale tag '" + std::string(toks[1]) + "'");
      push(DetectNode{*tag}, line_no);
    } else {
      throw ParseError(line_no, "unknown node kind '" + std::string(kw) + "'");
    }
    if (end == text.size()) break;
  }

  if (pending_from) throw ParseError(pending_from_line, "'from' is not followed by a node");
  if (!have_input) throw ParseError(line_no, "missing 'input' line");
  if (spec.nodes.empty()) throw ParseError(line_no, "no nodes");

  const auto defaults = default_anchors();
  size_t per_scale = 0;
  for (size_t s = 0; s < kNumScales; ++s) {
    if (!have_anchors[s]) spec.anchors[s] = defaults[s];
    if (s == 0) per_scale = spec.anchors[s].size();
    if (spec.anchors[s].size() != per_scale) {
      throw ParseError(line_no, "every scale must declare the same number of anchors");
    }
  }
  spec.anchors_per_scale = static_cast<int>(per_scale);
  return spec;
}

NetworkSpec load_network_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_spec(ss.str());
}

std::string serialize_network_spec(const NetworkSpec& spec) {
  std::ostringstream os;
  os << "input " << spec.input.c << ' ' << spec.input.h << ' ' << spec.input.w << '\n';
  os << "classes " << spec.num_classes << '\n';
  for (size_t s = 0; s < kNumScales; ++s) {
    os << "anchors " << to_string(static_cast<ScaleTag>(s));
    for (const auto& a : spec.anchors[s]) os << ' ' << format_float(a.w) << ',' << format_float(a.h);
    os << '\n';
  }
  for (const auto& node : spec.nodes) {
    const int default_input = node.id == 0 ? kNetworkInput : node.id - 1;
    if (node.input != default_input) os << "from " << node.input << '\n';
    std::visit(overloaded{
                   [&](const ConvNode& c) { os << "conv " << c.kernel << ' ' << c.out_channels << ' ' << c.stride; },
                   [&](const PepConfig& c) {
                     os << "pep " << c.proj1_channels << ' ' << c.expansion_channels << ' ' << c.out_channels << ' '
                        << c.stride;
                   },
                   [&](const EpConfig& c) {
                     os << "ep " << c.expansion_channels << ' ' << c.out_channels << ' ' << c.stride;
                   },
                   [&](const FcaConfig& c) { os << "fca " << c.reduction_ratio; },
                   [&](const UpsampleNode& c) { os << "upsample " << c.factor; },
                   [&](const ConcatNode& c) { os << "concat " << c.with_node; },
                   [&](const MaxPoolNode& c) { os << "maxpool " << c.size << ' ' << c.stride; },
                   [&](const DetectNode& c) { os << "detect " << to_string(c.tag); },
               },
               node.op);
    os << '\n';
  }
  return os.str();
}

ShapeTable infer_shapes(const NetworkSpec& spec) {
  ShapeTable table;
  table.input = spec.input;
  table.out.reserve(spec.nodes.size());
  std::array<bool, kNumScales> seen_tag{};

  for (const auto& node : spec.nodes) {
    const int id = node.id;
    if (id != static_cast<int>(table.out.size())) throw ShapeError(id, "node ids must be 0-based and sequential");
    if (node.input != kNetworkInput && (node.input < 0 || node.input >= id)) {
      throw ShapeError(id, "input references node " + std::to_string(node.input) + " which does not precede it");
    }
    if (node.input == kNetworkInput && id != 0) throw ShapeError(id, "only node 0 may read the network input");
    const Shape3 in = table.input_of(node);

    auto spatial = [&](int64_t h, int64_t w) {
      if (h < 1 || w < 1) {
        throw ShapeError(id, "non-positive spatial size " + std::to_string(h) + "x" + std::to_string(w));
      }
    };
    // 3x3 depthwise with padding 1
    auto dw_out = [](int64_t v, int stride) { return (v + 2 - kDepthwiseKernel) / stride + 1; };

    Shape3 out;
    try {
      out = std::visit(
          overloaded{
              [&](const ConvNode& c) {
                const int64_t p = c.kernel / 2;
                const int64_t h = in.h + 2 * p - c.kernel;
                const int64_t w = in.w + 2 * p - c.kernel;
                if (h < 0 || w < 0) spatial(0, 0);
                return Shape3{c.out_channels, h / c.stride + 1, w / c.stride + 1};
              },
              [&](const PepConfig& c) {
                validate(c);
                return Shape3{c.out_channels, dw_out(in.h, c.stride), dw_out(in.w, c.stride)};
              },
              [&](const EpConfig& c) {
                validate(c);
                return Shape3{c.out_channels, dw_out(in.h, c.stride), dw_out(in.w, c.stride)};
              },
              [&](const FcaConfig& c) {
                validate(c);
                return in;
              },
              [&](const UpsampleNode& c) { return Shape3{in.c, in.h * c.factor, in.w * c.factor}; },
              [&](const ConcatNode& c) {
                if (c.with_node < 0 || c.with_node >= id) {
                  throw ShapeError(id, "concat references node " + std::to_string(c.with_node) +
                                           " which does not precede it");
                }
                const Shape3 other = table.out[c.with_node];
                if (other.h != in.h || other.w != in.w) {
                  throw ShapeError(id, "concat spatial mismatch " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                                           " vs node " + std::to_string(c.with_node) + " " + std::to_string(other.h) +
                                           "x" + std::to_string(other.w));
                }
                return Shape3{in.c + other.c, in.h, in.w};
              },
              [&](const MaxPoolNode& c) {
                if (c.size < 1 || c.stride < 1) throw ShapeError(id, "maxpool size and stride must be positive");
                return Shape3{in.c, (in.h - 1) / c.stride + 1, (in.w - 1) / c.stride + 1};
              },
              [&](const DetectNode& c) {
                auto& seen = seen_tag[static_cast<size_t>(c.tag)];
                if (seen) throw ShapeError(id, "duplicate detect scale '" + std::string(to_string(c.tag)) + "'");
                seen = true;
                return Shape3{spec.detect_channels(), in.h, in.w};
              },
          },
          node.op);
    } catch (const ShapeError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ShapeError(id, e.what());
    }
    spatial(out.h, out.w);
    if (out.c < 1) throw ShapeError(id, "non-positive channel count");
    table.out.push_back(out);
  }
  return table;
}

std::vector<int> detect_nodes(const NetworkSpec& spec) {
  std::vector<std::pair<int, int>> tagged;
  for (const auto& node : spec.nodes) {
    if (const auto* d = std::get_if<DetectNode>(&node.op)) tagged.emplace_back(static_cast<int>(d->tag), node.id);
  }
  std::sort(tagged.begin(), tagged.end());
  std::vector<int> ids;
  for (const auto& [tag, id] : tagged) ids.push_back(id);
  return ids;
}

bool is_complete_detector(const NetworkSpec& spec) {
  std::array<int, kNumScales> count{};
  for (const auto& node : spec.nodes) {
    if (const auto* d = std::get_if<DetectNode>(&node.op)) ++count[static_cast<size_t>(d->tag)];
  }
  return std::all_of(count.begin(), count.end(), [](int c) { return c == 1; });
}

NetworkSpec yolo_nano_reference() {
  NetworkSpec spec;
  spec.input = {3, 416, 416};
  spec.num_classes = 20;
  spec.anchors_per_scale = 3;
  spec.anchors = default_anchors();

  auto add = [&](NodeOp op, std::optional<int> from = std::nullopt) {
    const int id = static_cast<int>(spec.nodes.size());
    spec.nodes.push_back({id, std::move(op), from ? *from : (id == 0 ? kNetworkInput : id - 1)});
    return id;
  };
  auto pep = [](int x, int out) { return PepConfig{x, x, out, 1}; };

  add(ConvNode{3, 12, 1});
  add(ConvNode{3, 24, 2});
  add(pep(7, 24));
  add(EpConfig{24, 70, 2});
  add(pep(25, 70));
  add(pep(24, 70));
  add(EpConfig{70, 150, 2});
  add(pep(56, 150));
  add(ConvNode{1, 150, 1});
  add(FcaConfig{8});
  add(pep(73, 150));
  add(pep(71, 150));
  const int tap52 = add(pep(75, 150));
  add(EpConfig{150, 325, 2});
  for (int x : {132, 124, 141, 140, 137, 135, 133}) add(pep(x, 325));
  const int tap26 = add(pep(140, 325));
  add(EpConfig{812, 545, 2});
  add(pep(276, 545));
  add(ConvNode{1, 230, 1});
  add(EpConfig{575, 489, 1});
  add(pep(213, 469));
  const int branch13 = add(ConvNode{1, 189, 1});
  add(ConvNode{1, 105, 1});
  add(UpsampleNode{2});
  add(ConcatNode{tap26});
  add(pep(113, 325));
  add(pep(99, 207));
  const int branch26 = add(ConvNode{1, 98, 1});
  add(ConvNode{1, 47, 1});
  add(UpsampleNode{2});
  add(ConcatNode{tap52});
  add(pep(58, 122));
  add(pep(52, 87));
  add(pep(47, 93));
  add(DetectNode{ScaleTag::small});
  add(EpConfig{245, 183, 1}, branch26);
  add(DetectNode{ScaleTag::medium});
  add(EpConfig{472, 462, 1}, branch13);
  add(DetectNode{ScaleTag::large});
  return spec;
}

namespace {

ModuleParams node_layout(const NodeSpec& node, const Shape3& in) {
  auto conv = [](int64_t c_in, int64_t c_out, int k, int stride) {
    ConvWeights w;
    w.kernel = Tensor({c_out, c_in, k, k});
    w.bias.assign(static_cast<size_t>(c_out), 0.0f);
    w.stride = stride;
    w.padding = k / 2;
    w.groups = 1;
    ModuleParams p;
    p.convs.push_back(std::move(w));
    return p;
  };
  return std::visit(overloaded{
                        [&](const ConvNode& c) { return conv(in.c, c.out_channels, c.kernel, c.stride); },
                        [&](const PepConfig& c) { return pep_param_layout(c, in.c); },
                        [&](const EpConfig& c) { return ep_param_layout(c, in.c); },
                        [&](const FcaConfig& c) { return fca_param_layout(c, in.c); },
                        [&](const UpsampleNode&) { return ModuleParams{}; },
                        [&](const ConcatNode&) { return ModuleParams{}; },
                        [&](const MaxPoolNode&) { return ModuleParams{}; },
                        [&](const DetectNode&) { return ModuleParams{}; },
                    },
                    node.op);
}

}  // namespace

WeightStore weight_layout(const NetworkSpec& spec, const ShapeTable& shapes) {
  WeightStore store;
  store.nodes.reserve(spec.nodes.size());
  for (const auto& node : spec.nodes) {
    const Shape3 in = shapes.input_of(node);
    if (std::holds_alternative<DetectNode>(node.op)) {
      ModuleParams p;
      ConvWeights w;
      w.kernel = Tensor({spec.detect_channels(), in.c, 1, 1});
      w.bias.assign(static_cast<size_t>(spec.detect_channels()), 0.0f);
      p.convs.push_back(std::move(w));
      store.nodes.push_back(std::move(p));
    } else {
      store.nodes.push_back(node_layout(node, in));
    }
  }
  return store;
}

WeightStore weight_layout(const NetworkSpec& spec) { return weight_layout(spec, infer_shapes(spec)); }

void validate_weights(const NetworkSpec& spec, const ShapeTable& shapes, const WeightStore& weights) {
  if (weights.nodes.size() != spec.nodes.size()) {
    throw ConfigError("weights cover " + std::to_string(weights.nodes.size()) + " nodes, network has " +
                      std::to_string(spec.nodes.size()));
  }
  const WeightStore expected = weight_layout(spec, shapes);
  for (size_t i = 0; i < spec.nodes.size(); ++i) {
    const std::string what = "node " + std::to_string(i) + " (" + std::string(kind_name(spec.nodes[i].op)) + ")";
    check_params(expected.nodes[i], weights.nodes[i], what.c_str());
  }
}

Tensor forward_node(const NodeSpec& node, const ModuleParams& params, const Tensor& x, const Tensor* concat_with,
                    float slope) {
  return std::visit(overloaded{
                        [&](const ConvNode&) {
                          Tensor y = conv2d(x, params.convs.at(0));
                          leaky_relu_inplace(y, slope);
                          return y;
                        },
                        [&](const PepConfig& c) { return pep_forward(x, c, params, slope); },
                        [&](const EpConfig& c) { return ep_forward(x, c, params, slope); },
                        [&](const FcaConfig& c) { return fca_forward(x, c, params, slope); },
                        [&](const UpsampleNode& c) { return upsample_nearest(x, c.factor); },
                        [&](const ConcatNode&) {
                          if (!concat_with) throw ConfigError("concat: missing second operand");
                          return concat_channels(x, *concat_with);
                        },
                        [&](const MaxPoolNode& c) { return max_pool2d(x, c.size, c.stride); },
                        [&](const DetectNode&) { return conv2d(x, params.convs.at(0)); },
                    },
                    node.op);
}

std::vector<DetectOutput> execute(const NetworkSpec& spec, const WeightStore& weights, const Tensor& input,
                                  const NodeObserver& observer) {
  const ShapeTable shapes = infer_shapes(spec);
  validate_weights(spec, shapes, weights);
  if (input.c() != spec.input.c || input.h() != spec.input.h || input.w() != spec.input.w || input.n() < 1) {
    throw ConfigError("input tensor does not match the network input " + std::to_string(spec.input.c) + "x" +
                      std::to_string(spec.input.h) + "x" + std::to_string(spec.input.w));
  }

  // Last consumer of each node so activations can be released early.
  const size_t count = spec.nodes.size();
  std::vector<int> last_use(count, -1);
  for (const auto& node : spec.nodes) {
    if (node.input != kNetworkInput) last_use[node.input] = std::max(last_use[node.input], node.id);
    if (const auto* c = std::get_if<ConcatNode>(&node.op)) last_use[c->with_node] = node.id;
  }

  std::vector<Tensor> acts(count);
  std::map<int, Tensor> detects;
  for (const auto& node : spec.nodes) {
    const Tensor& x = node.input == kNetworkInput ? input : acts[node.input];
    const Tensor* other = nullptr;
    if (const auto* c = std::get_if<ConcatNode>(&node.op)) other = &acts[c->with_node];
    Tensor y = forward_node(node, weights.nodes[node.id], x, other);
    if (observer) observer(node.id, y);
    if (std::holds_alternative<DetectNode>(node.op)) detects[node.id] = y;
    acts[node.id] = std::move(y);
    if (node.input != kNetworkInput && last_use[node.input] == node.id) acts[node.input] = Tensor();
    if (other && last_use[std::get<ConcatNode>(node.op).with_node] == node.id) {
      acts[std::get<ConcatNode>(node.op).with_node] = Tensor();
    }
  }

  std::vector<DetectOutput> outputs;
  for (int id : detect_nodes(spec)) {
    outputs.push_back({std::get<DetectNode>(spec.nodes[id].op).tag, id, std::move(detects[id])});
  }
  return outputs;
}

}  // namespace ynano
