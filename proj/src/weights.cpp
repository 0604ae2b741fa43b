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

#include "ynano/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ynano/complexity.hpp"

namespace ynano {

namespace {

static_assert(std::endian::native == std::endian::little, "weights I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError(std::string("weights file truncated in ") + what);
  return v;
}

void put_floats(std::ostream& out, std::span<const float> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::istream& in, std::span<float> v, const char* what) {
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)))) {
    throw FormatError(std::string("weights file truncated in ") + what);
  }
}

void put_weight_tensor(std::ostream& out, std::span<const float> v, int bits, int node, const char* name,
                       std::vector<TensorQuantStat>* stats) {
  if (bits == 32) {
    put_floats(out, v);
    return;
  }
  const QuantizedWeights q = quantize_tensor(v);
  put<float>(out, q.scale);
  put<int32_t>(out, q.zero_point);
  out.write(reinterpret_cast<const char*>(q.values.data()), static_cast<std::streamsize>(q.values.size()));
  if (stats) {
    const auto back = dequantize(q);
    double err = 0.0;
    for (size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(static_cast<double>(back[i]) - v[i]));
    stats->push_back({node, name, q.scale, err});
  }
}

void get_weight_tensor(std::istream& in, std::span<float> v, int bits) {
  if (bits == 32) {
    get_floats(in, v, "weight tensor");
    return;
  }
  QuantizedWeights q;
  q.scale = get<float>(in, "tensor scale");
  q.zero_point = get<int32_t>(in, "tensor zero point");
  if (!(q.scale > 0.0f) || !std::isfinite(q.scale) || q.zero_point < 0 || q.zero_point > 255) {
    throw FormatError("weights file has an invalid quantization header");
  }
  q.values.resize(v.size());
  if (!in.read(reinterpret_cast<char*>(q.values.data()), static_cast<std::streamsize>(v.size()))) {
    throw FormatError("weights file truncated in 8-bit tensor");
  }
  const auto back = dequantize(q);
  std::copy(back.begin(), back.end(), v.begin());
}

void check_bits(int bits) {
  if (bits != 8 && bits != 32) throw ConfigError("unsupported weight precision " + std::to_string(bits));
}

}  // namespace

void write_weights(std::ostream& out, const NetworkSpec& spec, const WeightStore& weights, int bits,
                   std::vector<TensorQuantStat>* stats) {
  check_bits(bits);
  validate_weights(spec, infer_shapes(spec), weights);
  out.write(kWeightsMagic, 4);
  put<uint16_t>(out, kWeightsVersion);
  put<uint8_t>(out, static_cast<uint8_t>(bits));
  for (size_t n = 0; n < weights.nodes.size(); ++n) {
    const auto& p = weights.nodes[n];
    const int node = static_cast<int>(n);
    for (const auto& c : p.convs) {
      put_weight_tensor(out, c.kernel.values(), bits, node, "kernel", stats);
      put_floats(out, c.bias);
    }
    for (const auto& d : p.dense) {
      put_weight_tensor(out, d.weights, bits, node, "matrix", stats);
      put_floats(out, d.bias);
    }
  }
  if (!out) throw FormatError("failed writing weights");
}

void save_weights(const std::string& path, const NetworkSpec& spec, const WeightStore& weights, int bits,
                  std::vector<TensorQuantStat>* stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_weights(out, spec, weights, bits, stats);
}

WeightFile read_weights(std::istream& in, const NetworkSpec& spec) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kWeightsMagic, 4) != 0) throw FormatError("not a weights file (bad magic)");
  const auto version = get<uint16_t>(in, "header");
  if (version != kWeightsVersion) throw FormatError("unsupported weights version " + std::to_string(version));
  const int bits = get<uint8_t>(in, "header");
  if (bits != 8 && bits != 32) throw FormatError("invalid precision flag " + std::to_string(bits));

  WeightFile file;
  file.bits = bits;
  file.weights = weight_layout(spec);
  for (auto& p : file.weights.nodes) {
    for (auto& c : p.convs) {
      get_weight_tensor(in, c.kernel.values(), bits);
      get_floats(in, c.bias, "bias");
    }
    for (auto& d : p.dense) {
      get_weight_tensor(in, d.weights, bits);
      get_floats(in, d.bias, "bias");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("weights file has trailing bytes (network mismatch)");
  return file;
}

WeightFile load_weights(const std::string& path, const NetworkSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_weights(in, spec);
}

WeightStore random_weights(const NetworkSpec& spec, uint64_t seed, float gain) {
  std::mt19937_64 rng(seed);
  // Portable uniform in [-1, 1): std distributions differ between standard libraries.
  auto uniform = [&rng] { return static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0); };
  WeightStore store = weight_layout(spec);
  for (auto& p : store.nodes) {
    for (auto& c : p.convs) {
      const double fan_in = static_cast<double>(c.in_per_group() * c.kernel_size() * c.kernel_size());
      const float bound = gain * static_cast<float>(std::sqrt(3.0 / fan_in));
      for (float& v : c.kernel.values()) v = bound * uniform();
      for (float& v : c.bias) v = 0.05f * gain * uniform();
    }
    for (auto& d : p.dense) {
      const float bound = gain * static_cast<float>(std::sqrt(3.0 / static_cast<double>(d.in)));
      for (float& v : d.weights) v = bound * uniform();
      for (float& v : d.bias) v = 0.05f * gain * uniform();
    }
  }
  return store;
}

}  // namespace ynano
