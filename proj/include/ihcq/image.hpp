// Copyright 2026-present the ihcq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ihcq {

/// 8-bit RGB raster, interleaved, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 255)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
    const std::uint8_t* at(int row, int col) const {
        return &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
    }
    bool operator==(const RgbImage&) const = default;
};

/// Reads PNG or JPEG. Throws Io when the file cannot be decoded.
RgbImage read_image(const std::filesystem::path& path);
RgbImage decode_image(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality = 90);

/// Copy of the rectangle [x, x+w) x [y, y+h), clipped to the image.
RgbImage crop(const RgbImage& image, int x, int y, int w, int h);
/// Box-filter downsample by two with ceil dimensions; edge pixels average
/// the samples that exist.
RgbImage halve(const RgbImage& image);

}  // namespace ihcq
