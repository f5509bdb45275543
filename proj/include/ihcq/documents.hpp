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

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ihcq/core.hpp"
#include "ihcq/eval.hpp"
#include "ihcq/instances.hpp"
#include "ihcq/maskops.hpp"
#include "ihcq/scoring.hpp"

// JSON wire formats. Parsers throw InvalidInput with a field path on any
// schema violation; every to_json output parses back to an equal value.
namespace ihcq::docs {

using json = nlohmann::json;

/// Segmenter output for one patch.
struct PredictionFile {
    PatchRegion patch;
    std::string model;
    std::vector<PredictionInstance> instances;
};

enum class Provenance { Manual, Model, Corrected };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct Annotation {
    std::string id;
    CellClass cls = CellClass::Immunopositive;
    Polygon polygon;
    Provenance provenance = Provenance::Manual;
    std::optional<double> confidence;
    std::string author;
    std::string timestamp;

    bool operator==(const Annotation&) const = default;
};

struct AnnotationDocument {
    PatchRegion patch;
    std::int64_t version = 0;
    std::vector<Annotation> annotations;
    /// Set by the store on save.
    std::optional<std::string> saved_at;

    bool operator==(const AnnotationDocument&) const = default;
};

json to_json(const PatchRegion& patch);
PatchRegion patch_from_json(const json& j);

json to_json(const SlideRecord& slide);
SlideRecord slide_from_json(const json& j);

json to_json(const BinaryMask& mask);
BinaryMask mask_from_json(const json& j);

json to_json(const PredictionFile& file);
PredictionFile prediction_file_from_json(const json& j);

json to_json(const AnnotationDocument& doc);
AnnotationDocument annotation_document_from_json(const json& j);

/// Every violated document rule: unique ids, valid polygons inside the
/// patch, one stain family, model provenance carries a confidence in [0,1].
std::vector<std::string> validate_document(const AnnotationDocument& doc);
/// Throws InvalidInput listing the violations.
void require_valid(const AnnotationDocument& doc);

/// Rasterizes every annotation in the patch frame. Throws InvalidInput
/// when an annotation covers no pixel centre.
std::vector<GroundTruthInstance> ground_truth(const AnnotationDocument& doc);

/// Cells for scoring; manual and corrected annotations carry no confidence.
std::vector<scoring::CountedCell> counted_cells(const AnnotationDocument& doc);
std::vector<scoring::CountedCell> counted_cells(const PredictionFile& file);

/// Converts predictions into model-provenance annotations by tracing each
/// mask outline. The result is not validated against a stored version.
AnnotationDocument presegment_document(const PatchRegion& patch, const std::vector<PredictionInstance>& preds,
                                       const std::string& author, const std::string& timestamp);

json to_json(const eval::PRCurve& curve);
json to_json(const eval::EvalReport& report);
json to_json(const scoring::BiomarkerScore& score);
json to_json(const scoring::ThresholdSweep& sweep);

std::string read_text(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);
json parse_json(const std::string& text);
/// Writes via a temporary file and rename.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string dump(const json& j);

/// UTC "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

/// Loads either an annotation document or a prediction file, telling them
/// apart by the "annotations" / "instances" key.
struct AnyDocument {
    std::optional<AnnotationDocument> annotations;
    std::optional<PredictionFile> predictions;
};
AnyDocument any_document_from_json(const json& j);

}  // namespace ihcq::docs
