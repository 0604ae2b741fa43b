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
#include <string>
#include <vector>

#include "ynano/detection.hpp"
#include "ynano/tensor.hpp"

namespace ynano {

/// 8-bit interleaved RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;
};

/// Binary PPM (P6, maxval 255). Throws FormatError on malformed input.
Image parse_ppm(const std::string& bytes);
Image read_ppm(const std::string& path);
std::string encode_ppm(const Image& img);
void write_ppm(const std::string& path, const Image& img);

inline constexpr float kLetterboxFill = 0.5f;

/// Aspect-preserving fit of a src_w x src_h image into dst_w x dst_h.
struct Letterbox {
  int src_w = 0, src_h = 0;
  int dst_w = 0, dst_h = 0;
  int new_w = 0, new_h = 0;
  int pad_x = 0, pad_y = 0;
  float scale = 1.0f;

  static Letterbox fit(int src_w, int src_h, int dst_w, int dst_h);
  /// Maps a box normalized to the network input back to the source image.
  BBox to_source(const BBox& b) const;
};

/// Bilinear letterbox resize to a (1, 3, dst_h, dst_w) tensor in [0, 1],
/// padded with kLetterboxFill.
Tensor letterbox_image(const Image& img, const Letterbox& lb);

/// Draws a 1-pixel rectangle for a source-normalized box.
void draw_box(Image& img, const BBox& box, uint8_t r, uint8_t g, uint8_t b);

}  // namespace ynano
