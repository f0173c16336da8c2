// Copyright 2026 The mpox-screen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpox/image.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mpox/error.hpp"

namespace mpox {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 0 || height < 0) {
    Fail(ErrorCode::kInvalidArgument, "negative image dimensions");
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    Fail(ErrorCode::kInvalidArgument, "pixel buffer does not match dimensions");
  }
}

std::string ToString(const Rect& r) {
  return "(x=" + std::to_string(r.x) + ", y=" + std::to_string(r.y) +
         ", w=" + std::to_string(r.width) + ", h=" + std::to_string(r.height) + ")";
}

Image Crop(const Image& image, const Rect& roi) {
  Image out(roi.width, roi.height);
  const std::size_t row_bytes = static_cast<std::size_t>(roi.width) * Image::kChannels;
  for (int y = 0; y < roi.height; ++y) {
    const std::uint8_t* src = &image.bytes()[(static_cast<std::size_t>(roi.y + y) * image.width() + roi.x) * Image::kChannels];
    std::copy(src, src + row_bytes, &out.at(0, y, 0));
  }
  return out;
}

Image PadToSquareReplicate(const Image& image, SquarePadding* padding) {
  const int side = std::max(image.width(), image.height());
  SquarePadding pad;
  const int dx = side - image.width();
  const int dy = side - image.height();
  pad.left = dx / 2;
  pad.right = dx - pad.left;
  pad.top = dy / 2;
  pad.bottom = dy - pad.top;
  if (padding != nullptr) *padding = pad;
  if (dx == 0 && dy == 0) return image;

  Image out(side, side);
  for (int y = 0; y < side; ++y) {
    const int sy = std::clamp(y - pad.top, 0, image.height() - 1);
    for (int x = 0; x < side; ++x) {
      const int sx = std::clamp(x - pad.left, 0, image.width() - 1);
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

std::array<double, 3> SampleBilinear(const Image& image, double x, double y) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(image.width() - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(image.height() - 1));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  std::array<double, 3> out{};
  for (int c = 0; c < Image::kChannels; ++c) {
    const double top = image.at(x0, y0, c) * (1.0 - fx) + image.at(x1, y0, c) * fx;
    const double bottom = image.at(x0, y1, c) * (1.0 - fx) + image.at(x1, y1, c) * fx;
    out[c] = top * (1.0 - fy) + bottom * fy;
  }
  return out;
}

Image ResizeBilinear(const Image& image, int width, int height) {
  if (image.empty()) Fail(ErrorCode::kInvalidArgument, "cannot resize an empty image");
  if (width == image.width() && height == image.height()) return image;
  Image out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const auto v = SampleBilinear(image, fx, fy);
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = ClampToByte(v[c]);
    }
  }
  return out;
}

std::uint8_t ClampToByte(double value) {
  if (!(value > 0.0)) return 0;
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

double Luma(const Image& image, int x, int y) {
  return 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) +
         0.114 * image.at(x, y, 2);
}

}  // namespace mpox
