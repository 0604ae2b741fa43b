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
#include <string>
#include <vector>

#include "ynano/graph.hpp"

namespace ynano {

/// Binary weights file: "YNWF", u16 version, u8 precision (8 or 32), then
/// every sub-layer tensor in node order, little-endian. In 8-bit files each
/// kernel/matrix is prefixed by f32 scale and i32 zero point; biases stay f32.
inline constexpr char kWeightsMagic[4] = {'Y', 'N', 'W', 'F'};
inline constexpr uint16_t kWeightsVersion = 1;

struct TensorQuantStat {
  int node = 0;
  std::string name;
  float scale = 0.0f;
  double max_error = 0.0;
};

struct WeightFile {
  WeightStore weights;
  int bits = 32;
};

/// Writes `weights` at the given precision. When `stats` is given, the
/// per-tensor round-trip error of 8-bit encoding is appended to it.
void write_weights(std::ostream& out, const NetworkSpec& spec, const WeightStore& weights, int bits,
                   std::vector<TensorQuantStat>* stats = nullptr);
void save_weights(const std::string& path, const NetworkSpec& spec, const WeightStore& weights, int bits,
                  std::vector<TensorQuantStat>* stats = nullptr);

/// Reads and validates a weights file against `spec`. Throws FormatError on
/// bad magic, version, precision, truncation or trailing bytes.
WeightFile read_weights(std::istream& in, const NetworkSpec& spec);
WeightFile load_weights(const std::string& path, const NetworkSpec& spec);

/// Uniform fan-in scaled initialisation, deterministic in `seed`.
WeightStore random_weights(const NetworkSpec& spec, uint64_t seed, float gain = 1.0f);

}  // namespace ynano
