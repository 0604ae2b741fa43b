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
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ynano/graph.hpp"

namespace ynano {

/// Center-format box in normalized image coordinates.
struct BBox {
  float cx = 0.0f;
  float cy = 0.0f;
  float w = 0.0f;
  float h = 0.0f;
  bool operator==(const BBox&) const = default;
};

/// Anchor prior in normalized image coordinates.
struct Anchor {
  float w = 0.0f;
  float h = 0.0f;
};

struct Detection {
  BBox bbox;
  int class_id = 0;
  float score = 0.0f;  // objectness * class probability
  float objectness = 0.0f;
  bool operator==(const Detection&) const = default;
};

struct GroundTruth {
  BBox bbox;
  int class_id = 0;
};

inline constexpr float kDefaultConfThreshold = 0.25f;
inline constexpr float kDefaultNmsIou = 0.45f;

/// Anchors of one scale divided by the network input size.
std::vector<Anchor> normalized_anchors(const NetworkSpec& spec, ScaleTag tag);

/// Decodes a (1, A*(5+K), S, S) head. Per cell (i, j) and anchor a:
/// cx = (j + sigmoid(tx)) / S, cy = (i + sigmoid(ty)) / S, w = aw * exp(tw),
/// h = ah * exp(th); one detection for the best class when
/// sigmoid(to) * sigmoid(class logit) >= conf_threshold.
std::vector<Detection> decode_predictions(const Tensor& raw, std::span<const Anchor> anchors, float conf_threshold);

float iou(const BBox& a, const BBox& b);

/// Greedy per-class NMS; drops boxes with IoU > threshold against a kept
/// box of the same class. Output is sorted by descending score.
std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold);

/// execute -> decode every scale -> merge -> nms. `image` is already
/// preprocessed to the network input shape.
std::vector<Detection> detect(const Tensor& image, const NetworkSpec& spec, const WeightStore& weights,
                              float conf_threshold = kDefaultConfThreshold, float iou_threshold = kDefaultNmsIou);

/// Candidates from all scales before NMS.
std::vector<Detection> decode_all(const NetworkSpec& spec, const std::vector<DetectOutput>& outputs,
                                  float conf_threshold);

struct MapResult {
  double map = 0.0;
  std::map<int, double> ap;  // classes with at least one ground truth
};

/// VOC2007 11-point interpolated AP from a PR curve (points in rank order).
double voc07_ap(std::span<const double> recall, std::span<const double> precision);

MapResult evaluate_map(const std::map<std::string, std::vector<Detection>>& detections,
                       const std::map<std::string, std::vector<GroundTruth>>& truths, double iou_threshold = 0.5);

/// k-means over box sizes with 1 - IoU distance; returns k anchors sorted by area.
std::vector<AnchorSize> kmeans_anchors(std::span<const AnchorSize> sizes, int k, uint64_t seed, int max_iter = 300);

// Interchange format: `<image_id> <class_id> [score] <cx> <cy> <w> <h>`.
void write_detections(std::ostream& out, const std::string& image_id, std::span<const Detection> dets);
std::map<std::string, std::vector<Detection>> read_detections(std::istream& in);
std::map<std::string, std::vector<GroundTruth>> read_ground_truth(std::istream& in);

}  // namespace ynano
