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

#include <optional>
#include <string>
#include <vector>

#include "ihcq/documents.hpp"
#include "ihcq/eval.hpp"
#include "ihcq/scoring.hpp"

// Glue shared by the CLI and the HTTP service.
namespace ihcq::pipeline {

/// Pairs prediction files with ground-truth documents by patch. Every GT
/// patch becomes one image; prediction files without GT add images with no
/// ground truth (all their predictions are false positives). Duplicate
/// patches on either side are rejected.
std::vector<EvalImage> pair_images(const std::vector<docs::PredictionFile>& predictions,
                                   const std::vector<docs::AnnotationDocument>& ground_truth);

/// Model names of the prediction files, de-duplicated and joined by "+".
std::string model_name(const std::vector<docs::PredictionFile>& predictions);

eval::EvalReport evaluate(const std::vector<docs::PredictionFile>& predictions,
                          const std::vector<docs::AnnotationDocument>& ground_truth,
                          const EvaluationConfig& config, std::optional<Biomarker> biomarker = {});

/// Default tau for a scored document: the model recommendation for
/// prediction files, 0 for annotation documents.
double default_tau(const docs::AnyDocument& doc);

scoring::BiomarkerScore score(const docs::AnyDocument& doc, std::optional<double> tau,
                              std::optional<StainKind> stain = {});

}  // namespace ihcq::pipeline
