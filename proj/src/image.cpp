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

#include "ynano/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ynano {

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string header_token(const std::string& s, size_t& pos) {
  while (pos < s.size()) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '#') ++pos;
  return s.substr(start, pos - start);
}

int header_int(const std::string& s, size_t& pos, const char* what) {
  const std::string tok = header_token(s, pos);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      tok.size() > 9) {
    throw FormatError(std::string("PPM: invalid ") + what);
  }
  return std::stoi(tok);
}

}  // namespace

Image parse_ppm(const std::string& bytes) {
  size_t pos = 0;
  if (header_token(bytes, pos) != "P6") throw FormatError("PPM: missing P6 magic");
  Image img;
  img.width = header_int(bytes, pos, "width");
  img.height = header_int(bytes, pos, "height");
  const int maxval = header_int(bytes, pos, "maxval");
  if (img.width < 1 || img.height < 1) throw FormatError("PPM: empty image");
  if (maxval != 255) throw FormatError("PPM: only 8-bit images (maxval 255) are supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("PPM: malformed header");
  }
  ++pos;
  const size_t need = static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3;
  if (bytes.size() - pos < need) throw FormatError("PPM: truncated pixel data");
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ppm(ss.str());
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.rgb.begin(), img.rgb.end());
  return out;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  const std::string data = encode_ppm(img);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

Letterbox Letterbox::fit(int src_w, int src_h, int dst_w, int dst_h) {
  Letterbox lb;
  lb.src_w = src_w;
  lb.src_h = src_h;
  lb.dst_w = dst_w;
  lb.dst_h = dst_h;
  lb.scale = std::min(static_cast<float>(dst_w) / static_cast<float>(src_w),
                      static_cast<float>(dst_h) / static_cast<float>(src_h));
  lb.new_w = std::clamp(static_cast<int>(std::lround(src_w * lb.scale)), 1, dst_w);
  lb.new_h = std::clamp(static_cast<int>(std::lround(src_h * lb.scale)), 1, dst_h);
  lb.pad_x = (dst_w - lb.new_w) / 2;
  lb.pad_y = (dst_h - lb.new_h) / 2;
  return lb;
}

BBox Letterbox::to_source(const BBox& b) const {
  const float sx = static_cast<float>(new_w) / static_cast<float>(src_w);
  const float sy = static_cast<float>(new_h) / static_cast<float>(src_h);
  BBox out;
  out.cx = (b.cx * static_cast<float>(dst_w) - static_cast<float>(pad_x)) / sx / static_cast<float>(src_w);
  out.cy = (b.cy * static_cast<float>(dst_h) - static_cast<float>(pad_y)) / sy / static_cast<float>(src_h);
  out.w = b.w * static_cast<float>(dst_w) / sx / static_cast<float>(src_w);
  out.h = b.h * static_cast<float>(dst_h) / sy / static_cast<float>(src_h);
  return out;
}

Tensor letterbox_image(const Image& img, const Letterbox& lb) {
  Tensor out({1, 3, lb.dst_h, lb.dst_w}, kLetterboxFill);
  const float sx = static_cast<float>(img.width) / static_cast<float>(lb.new_w);
  const float sy = static_cast<float>(img.height) / static_cast<float>(lb.new_h);
  auto px = [&](int x, int y, int c) {
    return static_cast<float>(img.rgb[(static_cast<size_t>(y) * img.width + x) * 3 + c]) / 255.0f;
  };
  for (int y = 0; y < lb.new_h; ++y) {
    const float fy = std::clamp((static_cast<float>(y) + 0.5f) * sy - 0.5f, 0.0f, static_cast<float>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float wy = fy - static_cast<float>(y0);
    for (int x = 0; x < lb.new_w; ++x) {
      const float fx = std::clamp((static_cast<float>(x) + 0.5f) * sx - 0.5f, 0.0f, static_cast<float>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const float wx = fx - static_cast<float>(x0);
      for (int c = 0; c < 3; ++c) {
        const float top = px(x0, y0, c) * (1 - wx) + px(x1, y0, c) * wx;
        const float bot = px(x0, y1, c) * (1 - wx) + px(x1, y1, c) * wx;
        out.at(0, c, y + lb.pad_y, x + lb.pad_x) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

void draw_box(Image& img, const BBox& box, uint8_t r, uint8_t g, uint8_t b) {
  auto clampx = [&](float v) { return std::clamp(static_cast<int>(std::lround(v * img.width)), 0, img.width - 1); };
  auto clampy = [&](float v) { return std::clamp(static_cast<int>(std::lround(v * img.height)), 0, img.height - 1); };
  const int x0 = clampx(box.cx - box.w / 2), x1 = clampx(box.cx + box.w / 2);
  const int y0 = clampy(box.cy - box.h / 2), y1 = clampy(box.cy + box.h / 2);
  auto set = [&](int x, int y) {
    const size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  };
  for (int x = x0; x <= x1; ++x) {
    set(x, y0);
    set(x, y1);
  }
  for (int y = y0; y <= y1; ++y) {
    set(x0, y);
    set(x1, y);
  }
}

}  // namespace ynano
