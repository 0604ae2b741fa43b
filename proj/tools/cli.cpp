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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ynano/complexity.hpp"
#include "ynano/detection.hpp"
#include "ynano/errors.hpp"
#include "ynano/explorer.hpp"
#include "ynano/graph.hpp"
#include "ynano/image.hpp"
#include "ynano/weights.hpp"

namespace ynano {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;

struct Options {
  std::string config;
  std::string weights;
  std::string image;
  std::string out;
  std::string space;
  std::string log;
  std::string annotate;
  float conf = kDefaultConfThreshold;
  float nms_iou = kDefaultNmsIou;
  int budget = 256;
  uint64_t seed = 0;
  int bits = 8;
  int init_bits = 32;
  int iterations = 10;
  int size = 0;
  double max_ops_b = 0.0;
  double min_score = 0.0;
  float scale = 1.0f;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  f << text;
  if (!f) throw FormatError("write to '" + path + "' failed");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string megabytes(int64_t bytes) { return fmt("%.3f", static_cast<double>(bytes) / 1e6); }

int64_t file_size(const std::string& path) {
  std::error_code ec;
  const auto n = std::filesystem::file_size(path, ec);
  if (ec) throw FormatError("cannot stat '" + path + "'");
  return static_cast<int64_t>(n);
}

NetworkSpec with_input_size(NetworkSpec spec, int size) {
  if (size > 0) {
    spec.input.h = size;
    spec.input.w = size;
  }
  return spec;
}

int cmd_describe(const Options& o, std::ostream& out) {
  const NetworkSpec spec = load_network_spec(o.config);
  const ShapeTable shapes = infer_shapes(spec);
  const OpsReport report = count_network(spec, shapes);

  out << "# describe config=" << o.config << '\n';
  out << "# input " << spec.input.c << ' ' << spec.input.h << ' ' << spec.input.w << " classes " << spec.num_classes
      << " anchors_per_scale " << spec.anchors_per_scale << '\n';
  out << "node_id\tkind\tin_c\tin_h\tin_w\tout_c\tout_h\tout_w\n";
  for (const auto& n : spec.nodes) {
    const Shape3 in = shapes.input_of(n);
    const Shape3& s = shapes.out[static_cast<size_t>(n.id)];
    out << n.id << '\t' << kind_name(n.op) << '\t' << in.c << '\t' << in.h << '\t' << in.w << '\t' << s.c << '\t'
        << s.h << '\t' << s.w << '\n';
  }
  out << '\n' << format_ops_report(spec, report);
  out << "POSTPROCESS\t" << report.postprocess_ops << '\n';
  out << "OPS_B\t" << fmt("%.4f", static_cast<double>(report.total_ops) / 1e9) << '\n';
  const int64_t s8 = model_size_bytes(spec, 8);
  const int64_t s32 = model_size_bytes(spec, 32);
  out << "SIZE_8BIT\t" << s8 << "\t" << megabytes(s8) << "MB\n";
  out << "SIZE_32BIT\t" << s32 << "\t" << megabytes(s32) << "MB\n";
  return kExitOk;
}

int cmd_detect(const Options& o, std::ostream& out) {
  const NetworkSpec spec = load_network_spec(o.config);
  const ShapeTable shapes = infer_shapes(spec);
  const WeightFile wf = load_weights(o.weights, spec);
  validate_weights(spec, shapes, wf.weights);
  Image img = read_ppm(o.image);

  const Letterbox lb = Letterbox::fit(img.width, img.height, spec.input.w, spec.input.h);
  const Tensor x = letterbox_image(img, lb);
  std::vector<Detection> dets = detect(x, spec, wf.weights, o.conf, o.nms_iou);
  for (auto& d : dets) d.bbox = lb.to_source(d.bbox);

  std::ostringstream doc;
  doc << "# detect config=" << o.config << " weights=" << o.weights << " image=" << o.image
      << " conf=" << fmt("%.6f", o.conf) << " nms_iou=" << fmt("%.6f", o.nms_iou) << " bits=" << wf.bits << '\n';
  write_detections(doc, std::filesystem::path(o.image).stem().string(), dets);
  if (o.out.empty()) {
    out << doc.str();
  } else {
    write_text(o.out, doc.str());
    out << dets.size() << " detections written to " << o.out << '\n';
  }
  if (!o.annotate.empty()) {
    for (const auto& d : dets) draw_box(img, d.bbox, 255, 0, 0);
    write_ppm(o.annotate, img);
  }
  return kExitOk;
}

int cmd_quantize(const Options& o, std::ostream& out) {
  const NetworkSpec spec = load_network_spec(o.config);
  const WeightFile wf = load_weights(o.weights, spec);
  if (wf.bits == 8) throw ConfigError("'" + o.weights + "' is already 8-bit; refusing to quantize again");
  std::vector<TensorQuantStat> stats;
  save_weights(o.out, spec, wf.weights, 8, &stats);

  const int64_t before = file_size(o.weights);
  const int64_t after = file_size(o.out);
  double worst = 0.0;
  const TensorQuantStat* worst_t = nullptr;
  for (const auto& s : stats) {
    if (!worst_t || s.max_error > worst) {
      worst = s.max_error;
      worst_t = &s;
    }
  }
  out << "# quantize config=" << o.config << " weights=" << o.weights << " out=" << o.out << '\n';
  out << "SIZE_BEFORE\t" << before << '\n';
  out << "SIZE_AFTER\t" << after << '\n';
  out << "RATIO\t" << fmt("%.4f", static_cast<double>(after) / static_cast<double>(before)) << '\n';
  out << "TENSORS\t" << stats.size() << '\n';
  if (worst_t) {
    out << "MAX_ERROR\t" << fmt("%.9g", worst) << "\tnode " << worst_t->node << ' ' << worst_t->name << '\n';
  }
  return kExitOk;
}

int cmd_explore(const Options& o, std::ostream& out, std::ostream& err) {
  const PrototypeSpec proto = PrototypeSpec::parse(read_text(o.config));
  const DesignSpace space = DesignSpace::parse(read_text(o.space));
  check_design_space(proto, space);

  ConstraintSet constraints;
  if (o.max_ops_b > 0.0) constraints.max_ops = static_cast<int64_t>(std::llround(o.max_ops_b * 1e9));
  if (o.min_score > 0.0) constraints.min_score = o.min_score;
  constraints.weight_bits = o.bits;

  const ExploreResult r = explore(proto, space, constraints, proxy_score, o.budget, o.seed);

  std::ostringstream log;
  log << "# explore config=" << o.config << " space=" << o.space << " budget=" << o.budget << " seed=" << o.seed
      << " bits=" << o.bits << " max_ops_b=" << fmt("%.6f", o.max_ops_b) << " min_score=" << fmt("%.6f", o.min_score)
      << '\n';
  log << "# gen seed feasible ops params score u slots\n";
  for (const auto& h : r.history) log << format_history_line(space, h) << '\n';
  for (size_t g = 0; g < r.best_u_by_generation.size(); ++g) {
    const double u = r.best_u_by_generation[g];
    log << "# best_u " << g << ' ' << (std::isinf(u) ? std::string("-inf") : fmt("%.6f", u)) << '\n';
  }
  const std::string log_path = o.log.empty() ? o.out + ".log" : o.log;
  write_text(log_path, log.str());

  if (!r.best) {
    err << "error: no feasible candidate among " << r.evaluations << " evaluations\n";
    if (r.best_infeasible) {
      const Candidate& c = *r.best_infeasible;
      err << "best infeasible: " << describe_point(space, c.point) << " ops=" << c.ops << " params=" << c.params
          << " score=" << fmt("%.6f", c.score);
      if (!c.error.empty()) err << " error=" << c.error;
      err << '\n';
    }
    return kExitInfeasible;
  }
  const Candidate& best = *r.best;
  std::ostringstream cfg;
  cfg << "# explore best: " << describe_point(space, best.point) << '\n';
  cfg << "# ops " << best.ops << " params " << best.params << " score " << fmt("%.6f", best.score) << " u "
      << fmt("%.6f", best.u_value) << '\n';
  cfg << serialize_network_spec(best.spec);
  write_text(o.out, cfg.str());

  out << "# explore config=" << o.config << " space=" << o.space << " budget=" << o.budget << " seed=" << o.seed
      << '\n';
  out << "EVALUATIONS\t" << r.evaluations << '\n';
  out << "BEST\t" << describe_point(space, best.point) << '\n';
  out << "OPS\t" << best.ops << '\n';
  out << "PARAMS\t" << best.params << '\n';
  out << "SCORE\t" << fmt("%.6f", best.score) << '\n';
  out << "U\t" << fmt("%.6f", best.u_value) << '\n';
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  if (o.iterations < 1) throw ConfigError("--iterations must be at least 1");
  const NetworkSpec spec = with_input_size(load_network_spec(o.config), o.size);
  const ShapeTable shapes = infer_shapes(spec);
  const WeightStore weights = o.weights.empty() ? random_weights(spec, o.seed) : load_weights(o.weights, spec).weights;
  validate_weights(spec, shapes, weights);

  Tensor x({1, spec.input.c, spec.input.h, spec.input.w}, kLetterboxFill);
  using clock = std::chrono::steady_clock;
  execute(spec, weights, x);  // warm-up
  std::vector<double> ms;
  for (int i = 0; i < o.iterations; ++i) {
    const auto t0 = clock::now();
    execute(spec, weights, x);
    ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
  }
  const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  out << "# bench config=" << o.config << " weights=" << (o.weights.empty() ? "random" : o.weights)
      << " input=" << spec.input.h << "x" << spec.input.w << " iterations=" << o.iterations << '\n';
  out << "SAMPLES\t" << n << '\n';
  out << "MEAN_MS\t" << fmt("%.3f", mean) << '\n';
  out << "MEDIAN_MS\t" << fmt("%.3f", median) << '\n';
  out << "MIN_MS\t" << fmt("%.3f", sorted.front()) << '\n';
  out << "FPS\t" << fmt("%.2f", 1000.0 / median) << '\n';
  return kExitOk;
}

int cmd_init(const Options& o, std::ostream& out) {
  const NetworkSpec spec = load_network_spec(o.config);
  WeightStore w = random_weights(spec, o.seed, o.scale);
  save_weights(o.out, spec, w, o.init_bits);
  out << "# init config=" << o.config << " seed=" << o.seed << " scale=" << fmt("%.6f", o.scale)
      << " bits=" << o.init_bits << '\n';
  out << "SIZE\t" << file_size(o.out) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ynano: compact single-shot detector toolkit", "ynano-cli"};
  app.require_subcommand(1);
  Options o;

  auto* describe = app.add_subcommand("describe", "Print shape table, operation counts and model sizes");
  describe->add_option("--config", o.config, "Network config")->required();

  auto* det = app.add_subcommand("detect", "Run detection on a PPM image");
  det->add_option("--config", o.config, "Network config")->required();
  det->add_option("--weights", o.weights, "Weights file")->required();
  det->add_option("--image", o.image, "Input P6 PPM image")->required();
  det->add_option("--out", o.out, "Detection listing (default: stdout)");
  det->add_option("--conf", o.conf, "Score threshold")->check(CLI::Range(0.0f, 1.0f));
  det->add_option("--nms-iou", o.nms_iou, "NMS IoU threshold")->check(CLI::Range(0.0f, 1.0f));
  det->add_option("--annotate", o.annotate, "Write the image with boxes drawn");

  auto* quant = app.add_subcommand("quantize", "Convert 32-bit weights to 8-bit");
  quant->add_option("--config", o.config, "Network config")->required();
  quant->add_option("--weights", o.weights, "32-bit weights file")->required();
  quant->add_option("--out", o.out, "8-bit output file")->required();

  auto* expl = app.add_subcommand("explore", "Search a design space for the best feasible network");
  expl->add_option("--config", o.config, "Prototype config")->required();
  expl->add_option("--space", o.space, "Design-space document")->required();
  expl->add_option("--out", o.out, "Best config output")->required();
  expl->add_option("--log", o.log, "Exploration log (default: <out>.log)");
  expl->add_option("--budget", o.budget, "Distinct evaluations")->check(CLI::PositiveNumber);
  expl->add_option("--seed", o.seed, "Search seed");
  expl->add_option("--bits", o.bits, "Weight precision constraint")->check(CLI::IsMember({8, 32}));
  expl->add_option("--max-ops", o.max_ops_b, "Operation budget in billions")->check(CLI::NonNegativeNumber);
  expl->add_option("--min-score", o.min_score, "Minimum accuracy proxy")->check(CLI::Range(0.0, 1.0));

  auto* bench = app.add_subcommand("bench", "Time forward passes");
  bench->add_option("--config", o.config, "Network config")->required();
  bench->add_option("--weights", o.weights, "Weights file (default: seeded random)");
  bench->add_option("--iterations", o.iterations, "Timed passes")->check(CLI::PositiveNumber);
  bench->add_option("--size", o.size, "Override input height and width")->check(CLI::PositiveNumber);
  bench->add_option("--seed", o.seed, "Seed for random weights");

  auto* init = app.add_subcommand("init", "Write seeded random weights for a config");
  init->add_option("--config", o.config, "Network config")->required();
  init->add_option("--out", o.out, "Weights output")->required();
  init->add_option("--seed", o.seed, "Initializer seed");
  init->add_option("--scale", o.scale, "Initializer gain (0 gives all-zero weights)")->check(CLI::NonNegativeNumber);
  init->add_option("--bits", o.init_bits, "Storage precision")->check(CLI::IsMember({8, 32}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*describe) return cmd_describe(o, out);
    if (*det) return cmd_detect(o, out);
    if (*quant) return cmd_quantize(o, out);
    if (*expl) return cmd_explore(o, out, err);
    if (*bench) return cmd_bench(o, out);
    if (*init) return cmd_init(o, out);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace ynano
