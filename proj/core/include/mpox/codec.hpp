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

#ifndef MPOX_CODEC_HPP_
#define MPOX_CODEC_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mpox/image.hpp"

namespace mpox {

/// Decodes PNG, JPEG, BMP, PNM, TIFF or WebP bytes to RGB. Throws
/// Error(kUnsupportedMedia) when the bytes are not a decodable image.
Image DecodeImage(std::span<const std::uint8_t> bytes);

/// Lossless PNG encoding with fixed settings, so equal pixels always
/// produce equal bytes.
std::vector<std::uint8_t> EncodePng(const Image& image);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames into place.
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

Image ReadImageFile(const std::filesystem::path& path);
void WritePngFile(const std::filesystem::path& path, const Image& image);

}  // namespace mpox

#endif  // MPOX_CODEC_HPP_
