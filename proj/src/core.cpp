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

#include "ihcq/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ihcq/error.hpp"

namespace ihcq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid_input";
        case ErrorCode::MalformedMask: return "malformed_mask";
        case ErrorCode::EmptyMask: return "empty_mask";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::UndefinedIoU: return "undefined_iou";
        case ErrorCode::EmptyDataset: return "empty_dataset";
        case ErrorCode::NoCells: return "no_cells";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::Io: return "io";
        case ErrorCode::Internal: return "internal";
    }
    return "internal";
}

StainKind stain_of(Biomarker biomarker) {
    return biomarker == Biomarker::HER2 ? StainKind::Membrane : StainKind::Nuclear;
}

StainKind family_of(CellClass cls) {
    switch (cls) {
        case CellClass::Immunopositive:
        case CellClass::Immunonegative:
            return StainKind::Nuclear;
        default:
            return StainKind::Membrane;
    }
}

std::span<const CellClass> classes_of(StainKind kind) {
    if (kind == StainKind::Nuclear) return kNuclearClasses;
    return kMembraneClasses;
}

std::string_view to_string(StainKind kind) {
    return kind == StainKind::Nuclear ? "nuclear" : "membrane";
}

std::string_view to_string(Biomarker biomarker) {
    switch (biomarker) {
        case Biomarker::Ki67: return "Ki-67";
        case Biomarker::ER: return "ER";
        case Biomarker::PR: return "PR";
        case Biomarker::HER2: return "HER2";
    }
    return "";
}

std::string_view to_string(CellClass cls) {
    switch (cls) {
        case CellClass::Immunopositive: return "immunopositive";
        case CellClass::Immunonegative: return "immunonegative";
        case CellClass::M0NoStaining: return "m0_no_staining";
        case CellClass::M1FaintIncomplete: return "m1_faint_incomplete";
        case CellClass::M2ModerateComplete: return "m2_moderate_complete";
        case CellClass::M3IntenseComplete: return "m3_intense_complete";
    }
    return "";
}

std::string_view display_name(CellClass cls) {
    switch (cls) {
        case CellClass::Immunopositive: return "Immunopositive cells";
        case CellClass::Immunonegative: return "Immunonegative cells";
        case CellClass::M0NoStaining: return "0: No membrane staining";
        case CellClass::M1FaintIncomplete:
            return "1+: Barely perceptible and incomplete membrane staining";
        case CellClass::M2ModerateComplete:
            return "2+: Weak to moderate and complete membrane staining";
        case CellClass::M3IntenseComplete:
            return "3+: Circumferential, intense and complete membrane staining";
    }
    return "";
}

namespace {

std::string lowered(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::optional<StainKind> parse_stain_kind(std::string_view text) {
    const auto s = lowered(text);
    if (s == "nuclear") return StainKind::Nuclear;
    if (s == "membrane") return StainKind::Membrane;
    return std::nullopt;
}

std::optional<Biomarker> parse_biomarker(std::string_view text) {
    const auto s = lowered(text);
    if (s == "ki-67" || s == "ki67") return Biomarker::Ki67;
    if (s == "er") return Biomarker::ER;
    if (s == "pr") return Biomarker::PR;
    if (s == "her2") return Biomarker::HER2;
    return std::nullopt;
}

std::optional<CellClass> parse_cell_class(std::string_view text) {
    for (auto kind : {StainKind::Nuclear, StainKind::Membrane}) {
        for (auto cls : classes_of(kind)) {
            if (to_string(cls) == text) return cls;
        }
    }
    return std::nullopt;
}

std::optional<StainKind> common_family(std::span<const CellClass> classes) {
    if (classes.empty()) return std::nullopt;
    const auto family = family_of(classes.front());
    for (auto cls : classes) {
        if (family_of(cls) != family) {
            throw Error(ErrorCode::InvalidInput,
                        "nuclear and membrane classes cannot be mixed in one patch");
        }
    }
    return family;
}

std::vector<std::string> validate_slide(const SlideRecord& slide) {
    std::vector<std::string> out;
    if (!is_valid_key(slide.id)) out.emplace_back("invalid slide id");
    if (slide.width <= 0 || slide.height <= 0) out.emplace_back("empty slide");
    if (!(slide.resolution_um > 0.0) || !std::isfinite(slide.resolution_um)) {
        out.emplace_back("non-positive resolution");
    }
    if (stain_of(slide.biomarker) != slide.stain) {
        out.emplace_back("biomarker inconsistent with stain kind");
    }
    return out;
}

std::vector<std::string> validate_patch_shape(const PatchRegion& patch) {
    std::vector<std::string> out;
    if (patch.width <= 0 || patch.height <= 0) out.emplace_back("empty patch");
    if (patch.x < 0 || patch.y < 0) out.emplace_back("negative origin");
    return out;
}

std::vector<std::string> validate_patch(const PatchRegion& patch, const SlideRecord& slide) {
    auto out = validate_patch_shape(patch);
    if (patch.slide_id != slide.id) out.emplace_back("slide id mismatch");
    if (patch.width > 0 && patch.height > 0 &&
        (patch.x + patch.width > slide.width || patch.y + patch.height > slide.height)) {
        out.emplace_back("exceeds bounds");
    }
    return out;
}

std::string default_patch_key(const PatchRegion& patch) {
    return patch.slide_id + "_" + std::to_string(patch.x) + "_" + std::to_string(patch.y) + "_" +
           std::to_string(patch.width) + "x" + std::to_string(patch.height);
}

bool is_valid_key(std::string_view key) {
    if (key.empty() || key.size() > 200 || key == "." || key == "..") return false;
    return std::all_of(key.begin(), key.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '_' || c == '-';
    });
}

std::vector<double> EvaluationConfig::default_iou_thresholds() {
    std::vector<double> out;
    for (int k = 0; k < 10; ++k) out.push_back(static_cast<double>(50 + 5 * k) / 100.0);
    return out;
}

void EvaluationConfig::validate() const {
    if (iou_thresholds.empty()) {
        throw Error(ErrorCode::InvalidInput, "at least one IoU threshold is required");
    }
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
        const double t = iou_thresholds[i];
        if (!(t > 0.0 && t <= 1.0)) {
            throw Error(ErrorCode::InvalidInput, "IoU thresholds must lie in (0,1]");
        }
        if (i > 0 && !(t > iou_thresholds[i - 1])) {
            throw Error(ErrorCode::InvalidInput, "IoU thresholds must be strictly increasing");
        }
    }
    if (!(confidence_filter >= 0.0 && confidence_filter <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "confidence filter must lie in [0,1]");
    }
}

}  // namespace ihcq
