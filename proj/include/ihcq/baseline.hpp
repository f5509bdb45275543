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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ihcq/image.hpp"
#include "ihcq/instances.hpp"

namespace ihcq::baseline {

/// Unit optical-density colour of each stain.
struct StainBasis {
    std::array<double, 3> hematoxylin{0.650, 0.704, 0.286};
    std::array<double, 3> dab{0.268, 0.570, 0.776};
};

struct StainMaps {
    int width = 0;
    int height = 0;
    std::vector<float> hematoxylin;
    std::vector<float> dab;
};

struct BaselineParams {
    StainBasis basis;
    double hematoxylin_threshold = 0.25;
    double dab_threshold = 0.25;
    std::size_t min_area = 30;
    std::size_t max_area = 3000;
    /// Mean dominant-stain OD that maps to confidence 1.
    double confidence_od_scale = 1.5;

    /// Throws InvalidInput when thresholds, areas or the basis are unusable.
    void validate() const;
};

/// Reads a JSON object with any of the keys hematoxylin_threshold,
/// dab_threshold, min_area, max_area, confidence_od_scale,
/// basis.hematoxylin, basis.dab. Missing keys keep their defaults.
BaselineParams load_params(const std::filesystem::path& path);
BaselineParams params_from_json(const std::string& text);

/// -log((v+1)/256) for v in 0..255.
const std::array<float, 256>& od_lut();

/// 2x3 row-major pseudo-inverse of the normalised basis [h dab].
std::array<float, 6> unmixing_matrix(const StainBasis& basis);

StainMaps separate_stains(const RgbImage& image, const StainBasis& basis = {});

/// Threshold, 4-connected components, area filter. Instances are ordered by
/// each component's first pixel in raster order and named "b0000", "b0001"...
std::vector<PredictionInstance> segment_nuclei(const RgbImage& image, const BaselineParams& params = {});

}  // namespace ihcq::baseline
