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

#include <string>
#include <vector>

#include "ihcq/core.hpp"
#include "ihcq/maskops.hpp"

namespace ihcq {

/// One segmenter output: mask, class and confidence score.
struct PredictionInstance {
    std::string id;
    CellClass cls = CellClass::Immunopositive;
    double confidence = 1.0;
    BinaryMask mask;
};

/// One expert-annotated cell, already rasterized into the patch frame.
struct GroundTruthInstance {
    std::string id;
    CellClass cls = CellClass::Immunopositive;
    BinaryMask mask;
};

/// Predictions and ground truth for one patch. `key` orders patches when
/// confidences tie across patches.
struct EvalImage {
    std::string key;
    std::vector<PredictionInstance> predictions;
    std::vector<GroundTruthInstance> ground_truth;
};

/// Throws InvalidInput for empty masks, confidences outside [0,1] or
/// duplicate ids.
void validate_predictions(const std::vector<PredictionInstance>& preds);

}  // namespace ihcq
