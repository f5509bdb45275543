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
#include <optional>
#include <string>
#include <vector>

#include "ihcq/documents.hpp"
#include "ihcq/image.hpp"

// Synthetic patches with known truth. Generation uses raw mt19937_64
// outputs only, so a seed gives the same bytes on every standard library.
namespace ihcq::fixtures {

struct Fixture {
    SlideRecord slide;
    RgbImage image;
    docs::AnnotationDocument ground_truth;
    std::optional<docs::PredictionFile> predictions;
};

inline constexpr int kPatchSize = 350;
inline constexpr double kDiskRadius = 8.0;

/// Well-separated blue (immunonegative) and brown (immunopositive) disks on
/// a near-white background. Disk pixels are exactly the rasterized GT
/// polygons.
Fixture disks(std::uint64_t seed, int negatives = 5, int positives = 3);

/// Three GTs and four ranked predictions: two match, one overlaps a GT
/// below IoU 0.5, one overlaps nothing.
Fixture fig5();

/// Disk fixture plus a prediction file: every GT predicted exactly
/// (confidence 0.2..1) and twelve spurious detections off the cells
/// (confidence 0.05..0.6).
Fixture spurious(std::uint64_t seed);

/// Writes slide.json, patch.png, ground_truth.json and, when present,
/// predictions.json. Returns the written paths.
std::vector<std::filesystem::path> write(const Fixture& fixture, const std::filesystem::path& dir);

/// 32-gon approximating a disk.
Polygon disk_polygon(double cx, double cy, double r);

}  // namespace ihcq::fixtures
