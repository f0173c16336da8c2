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

#ifndef MPOX_IMAGE_HPP_
#define MPOX_IMAGE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mpox {

/// Interleaved 8-bit RGB raster, row-major, origin at the top-left.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

std::string ToString(const Rect& r);

/// Copies the rectangle out of `image`. The caller validates bounds.
Image Crop(const Image& image, const Rect& roi);

struct SquarePadding {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

/// Pads the shorter side symmetrically (the odd pixel goes to the
/// bottom/right) by replicating the outermost row or column.
Image PadToSquareReplicate(const Image& image, SquarePadding* padding = nullptr);

/// Bilinear resampling with half-pixel centres and clamped (replicated)
/// borders. A same-size resize returns the input unchanged.
Image ResizeBilinear(const Image& image, int width, int height);

/// Samples channel values at a fractional source position with clamped
/// borders; result is unrounded.
std::array<double, 3> SampleBilinear(const Image& image, double x, double y);

std::uint8_t ClampToByte(double value);

/// ITU-R BT.601 luma, unrounded.
double Luma(const Image& image, int x, int y);

}  // namespace mpox

#endif  // MPOX_IMAGE_HPP_
