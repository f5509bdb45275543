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

#include "ihcq/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ihcq/error.hpp"

namespace ihcq::pipeline {

std::vector<EvalImage> pair_images(const std::vector<docs::PredictionFile>& predictions,
                                   const std::vector<docs::AnnotationDocument>& ground_truth) {
    std::map<std::string, EvalImage> images;
    for (const auto& doc : ground_truth) {
        const auto key = default_patch_key(doc.patch);
        if (images.count(key)) throw Error(ErrorCode::InvalidInput, "two ground-truth documents for patch " + key);
        EvalImage img;
        img.key = key;
        img.ground_truth = docs::ground_truth(doc);
        images.emplace(key, std::move(img));
    }
    std::set<std::string> seen;
    for (const auto& file : predictions) {
        const auto key = default_patch_key(file.patch);
        if (!seen.insert(key).second) throw Error(ErrorCode::InvalidInput, "two prediction files for patch " + key);
        auto& img = images[key];
        img.key = key;
        img.predictions = file.instances;
    }
    std::vector<EvalImage> out;
    for (auto& [key, img] : images) out.push_back(std::move(img));
    return out;
}

std::string model_name(const std::vector<docs::PredictionFile>& predictions) {
    std::vector<std::string> names;
    for (const auto& f : predictions) {
        if (std::find(names.begin(), names.end(), f.model) == names.end()) names.push_back(f.model);
    }
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : "+") + n;
    return out;
}

eval::EvalReport evaluate(const std::vector<docs::PredictionFile>& predictions,
                          const std::vector<docs::AnnotationDocument>& ground_truth,
                          const EvaluationConfig& config, std::optional<Biomarker> biomarker) {
    config.validate();
    const eval::Evaluator evaluator(pair_images(predictions, ground_truth));
    return eval::build_report(evaluator, config, model_name(predictions), biomarker);
}

double default_tau(const docs::AnyDocument& doc) {
    return doc.predictions ? scoring::recommended_tau(doc.predictions->model) : 0.0;
}

scoring::BiomarkerScore score(const docs::AnyDocument& doc, std::optional<double> tau, std::optional<StainKind> stain) {
    const double t = tau.value_or(default_tau(doc));
    if (doc.predictions) {
        return scoring::score_cells(docs::counted_cells(*doc.predictions), t, stain,
                                    doc.predictions->model.empty() ? "predictions" : doc.predictions->model);
    }
    if (!doc.annotations) throw Error(ErrorCode::InvalidInput, "nothing to score");
    docs::require_valid(*doc.annotations);
    return scoring::score_cells(docs::counted_cells(*doc.annotations), t, stain,
                                "annotations v" + std::to_string(doc.annotations->version));
}

}  // namespace ihcq::pipeline
