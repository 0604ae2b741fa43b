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

#include "ynano/detection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace ynano {

std::vector<Anchor> normalized_anchors(const NetworkSpec& spec, ScaleTag tag) {
  std::vector<Anchor> out;
  for (const auto& a : spec.anchors[static_cast<size_t>(tag)]) {
    out.push_back({a.w / static_cast<float>(spec.input.w), a.h / static_cast<float>(spec.input.h)});
  }
  return out;
}

std::vector<Detection> decode_predictions(const Tensor& raw, std::span<const Anchor> anchors, float conf_threshold) {
  const int64_t num_anchors = static_cast<int64_t>(anchors.size());
  if (raw.n() != 1) throw ConfigError("decode: expected a single-image head");
  if (num_anchors < 1 || raw.c() % num_anchors != 0 || raw.c() / num_anchors < 6) {
    throw ConfigError("decode: " + std::to_string(raw.c()) + " channels do not split into " +
                      std::to_string(num_anchors) + " anchors x (5 + classes)");
  }
  const int64_t per_anchor = raw.c() / num_anchors;
  const int64_t num_classes = per_anchor - 5;
  const int64_t rows = raw.h();
  const int64_t cols = raw.w();

  std::vector<Detection> out;
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) {
      for (int64_t a = 0; a < num_anchors; ++a) {
        const int64_t base = a * per_anchor;
        const float obj = sigmoid(raw.at(0, base + 4, i, j));
        // sigmoid is monotone, so the best class is the largest logit.
        int64_t best = 0;
        float best_logit = raw.at(0, base + 5, i, j);
        for (int64_t k = 1; k < num_classes; ++k) {
          const float l = raw.at(0, base + 5 + k, i, j);
          if (l > best_logit) {
            best_logit = l;
            best = k;
          }
        }
        const float score = obj * sigmoid(best_logit);
        if (!(score >= conf_threshold)) continue;
        Detection d;
        d.bbox.cx = (static_cast<float>(j) + sigmoid(raw.at(0, base + 0, i, j))) / static_cast<float>(cols);
        d.bbox.cy = (static_cast<float>(i) + sigmoid(raw.at(0, base + 1, i, j))) / static_cast<float>(rows);
        d.bbox.w = anchors[static_cast<size_t>(a)].w * std::exp(raw.at(0, base + 2, i, j));
        d.bbox.h = anchors[static_cast<size_t>(a)].h * std::exp(raw.at(0, base + 3, i, j));
        d.class_id = static_cast<int>(best);
        d.score = score;
        d.objectness = obj;
        out.push_back(d);
      }
    }
  }
  return out;
}

float iou(const BBox& a, const BBox& b) {
  const double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0, ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
  const double bx0 = b.cx - b.w / 2.0, bx1 = b.cx + b.w / 2.0, by0 = b.cy - b.h / 2.0, by1 = b.cy + b.h / 2.0;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  if (!(uni > 0.0)) return 0.0f;
  return static_cast<float>(std::clamp(inter / uni, 0.0, 1.0));
}

std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && iou(k.bbox, d.bbox) > iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> decode_all(const NetworkSpec& spec, const std::vector<DetectOutput>& outputs,
                                  float conf_threshold) {
  std::vector<Detection> all;
  for (const auto& o : outputs) {
    const auto anchors = normalized_anchors(spec, o.tag);
    auto dets = decode_predictions(o.raw, anchors, conf_threshold);
    all.insert(all.end(), dets.begin(), dets.end());
  }
  return all;
}

std::vector<Detection> detect(const Tensor& image, const NetworkSpec& spec, const WeightStore& weights,
                              float conf_threshold, float iou_threshold) {
  const auto outputs = execute(spec, weights, image);
  return nms(decode_all(spec, outputs, conf_threshold), iou_threshold);
}

double voc07_ap(std::span<const double> recall, std::span<const double> precision) {
  double ap = 0.0;
  for (int t = 0; t <= 10; ++t) {
    const double thr = t / 10.0;
    double p = 0.0;
    for (size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= thr) p = std::max(p, precision[i]);
    }
    ap += p;
  }
  return ap / 11.0;
}

MapResult evaluate_map(const std::map<std::string, std::vector<Detection>>& detections,
                       const std::map<std::string, std::vector<GroundTruth>>& truths, double iou_threshold) {
  std::map<int, int> positives;
  for (const auto& [image, list] : truths) {
    for (const auto& t : list) ++positives[t.class_id];
  }

  MapResult result;
  for (const auto& [cls, npos] : positives) {
    struct Ranked {
      float score;
      const std::string* image;
      const Detection* det;
    };
    std::vector<Ranked> ranked;
    for (const auto& [image, list] : detections) {
      for (const auto& d : list) {
        if (d.class_id == cls) ranked.push_back({d.score, &image, &d});
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::map<std::string, std::vector<bool>> matched;
    std::vector<double> recall;
    std::vector<double> precision;
    int tp = 0;
    int fp = 0;
    for (const auto& r : ranked) {
      int best = -1;
      double best_iou = -1.0;
      if (auto it = truths.find(*r.image); it != truths.end()) {
        auto& used = matched[*r.image];
        used.resize(it->second.size(), false);
        for (size_t k = 0; k < it->second.size(); ++k) {
          const auto& t = it->second[k];
          if (t.class_id != cls || used[k]) continue;
          const double o = iou(r.det->bbox, t.bbox);
          if (o > best_iou) {
            best_iou = o;
            best = static_cast<int>(k);
          }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
          used[static_cast<size_t>(best)] = true;
        } else {
          best = -1;
        }
      }
      if (best >= 0) ++tp; else ++fp;
      recall.push_back(static_cast<double>(tp) / npos);
      precision.push_back(static_cast<double>(tp) / (tp + fp));
    }
    result.ap[cls] = voc07_ap(recall, precision);
  }
  if (!result.ap.empty()) {
    double sum = 0.0;
    for (const auto& [cls, ap] : result.ap) sum += ap;
    result.map = sum / static_cast<double>(result.ap.size());
  }
  return result;
}

namespace {

double size_iou(const AnchorSize& a, const AnchorSize& b) {
  const double inter = std::min<double>(a.w, b.w) * std::min<double>(a.h, b.h);
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

std::vector<AnchorSize> kmeans_anchors(std::span<const AnchorSize> sizes, int k, uint64_t seed, int max_iter) {
  if (k < 1 || static_cast<size_t>(k) > sizes.size()) throw ConfigError("kmeans_anchors: need at least k boxes");
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  // k-means++ seeding on the 1 - IoU distance.
  std::vector<AnchorSize> centers;
  centers.push_back(sizes[static_cast<size_t>(rng() % sizes.size())]);
  std::vector<double> dist(sizes.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < sizes.size(); ++i) {
      double d = 1.0;
      for (const auto& c : centers) d = std::min(d, 1.0 - size_iou(sizes[i], c));
      dist[i] = d * d;
      total += dist[i];
    }
    size_t pick = 0;
    if (total > 0.0) {
      double r = unit() * total;
      for (pick = 0; pick + 1 < sizes.size() && r >= dist[pick]; ++pick) r -= dist[pick];
    } else {
      pick = static_cast<size_t>(rng() % sizes.size());
    }
    centers.push_back(sizes[pick]);
  }

  std::vector<int> assign(sizes.size(), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < sizes.size(); ++i) {
      int best = 0;
      double best_iou = -1.0;
      for (int c = 0; c < k; ++c) {
        const double o = size_iou(sizes[i], centers[static_cast<size_t>(c)]);
        if (o > best_iou) {
          best_iou = o;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      double sw = 0.0, sh = 0.0;
      int cnt = 0;
      for (size_t i = 0; i < sizes.size(); ++i) {
        if (assign[i] == c) {
          sw += sizes[i].w;
          sh += sizes[i].h;
          ++cnt;
        }
      }
      if (cnt > 0) centers[static_cast<size_t>(c)] = {static_cast<float>(sw / cnt), static_cast<float>(sh / cnt)};
    }
  }
  std::sort(centers.begin(), centers.end(),
            [](const AnchorSize& a, const AnchorSize& b) { return a.w * a.h < b.w * b.h; });
  return centers;
}

void write_detections(std::ostream& out, const std::string& image_id, std::span<const Detection> dets) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  for (const auto& d : dets) {
    os << image_id << ' ' << d.class_id << ' ' << d.score << ' ' << d.bbox.cx << ' ' << d.bbox.cy << ' ' << d.bbox.w
       << ' ' << d.bbox.h << '\n';
  }
  out << os.str();
}

namespace {

template <class Fn>
void read_records(std::istream& in, size_t fields, Fn&& emit) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (toks.size() != fields) {
      throw ParseError(line_no, "expected " + std::to_string(fields) + " fields, got " + std::to_string(toks.size()));
    }
    std::vector<float> nums;
    int cls = 0;
    try {
      size_t used = 0;
      cls = std::stoi(toks[1], &used);
      if (used != toks[1].size()) throw std::invalid_argument("class");
      for (size_t i = 2; i < toks.size(); ++i) {
        nums.push_back(std::stof(toks[i], &used));
        if (used != toks[i].size()) throw std::invalid_argument("number");
      }
    } catch (const std::exception&) {
      throw ParseError(line_no, "malformed record");
    }
    emit(toks[0], cls, nums);
  }
}

}  // namespace

std::map<std::string, std::vector<Detection>> read_detections(std::istream& in) {
  std::map<std::string, std::vector<Detection>> out;
  read_records(in, 7, [&](const std::string& image, int cls, const std::vector<float>& v) {
    Detection d;
    d.class_id = cls;
    d.score = v[0];
    d.bbox = {v[1], v[2], v[3], v[4]};
    out[image].push_back(d);
  });
  return out;
}

std::map<std::string, std::vector<GroundTruth>> read_ground_truth(std::istream& in) {
  std::map<std::string, std::vector<GroundTruth>> out;
  read_records(in, 6, [&](const std::string& image, int cls, const std::vector<float>& v) {
    out[image].push_back({{v[0], v[1], v[2], v[3]}, cls});
  });
  return out;
}

}  // namespace ynano
