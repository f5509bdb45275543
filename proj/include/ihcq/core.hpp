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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihcq {

enum class StainKind { Nuclear, Membrane };

enum class Biomarker { Ki67, ER, PR, HER2 };

/// Tumor-cell categories. Non-tumor cells have no class and never appear
/// in documents, predictions or scores.
enum class CellClass {
    Immunopositive,
    Immunonegative,
    M0NoStaining,
    M1FaintIncomplete,
    M2ModerateComplete,
    M3IntenseComplete,
};

inline constexpr std::array<CellClass, 2> kNuclearClasses = {
    CellClass::Immunopositive, CellClass::Immunonegative};

inline constexpr std::array<CellClass, 4> kMembraneClasses = {
    CellClass::M0NoStaining, CellClass::M1FaintIncomplete,
    CellClass::M2ModerateComplete, CellClass::M3IntenseComplete};

StainKind stain_of(Biomarker biomarker);
StainKind family_of(CellClass cls);
std::span<const CellClass> classes_of(StainKind kind);

std::string_view to_string(StainKind kind);
std::string_view to_string(Biomarker biomarker);
/// Wire name, e.g. "immunopositive" or "m3_intense_complete".
std::string_view to_string(CellClass cls);
/// Row label used in evaluation tables ("Immunopositive cells", "3+: ...").
std::string_view display_name(CellClass cls);

std::optional<StainKind> parse_stain_kind(std::string_view text);
/// Accepts "Ki-67", "Ki67", "ER", "PR", "HER2" (case-insensitive).
std::optional<Biomarker> parse_biomarker(std::string_view text);
std::optional<CellClass> parse_cell_class(std::string_view text);

/// Throws InvalidInput when the classes span both stain families.
/// Returns the family, or nullopt for an empty list.
std::optional<StainKind> common_family(std::span<const CellClass> classes);

struct SlideRecord {
    std::string id;
    std::int64_t width = 0;
    std::int64_t height = 0;
    double resolution_um = 0.25;  // micrometers per pixel
    StainKind stain = StainKind::Nuclear;
    Biomarker biomarker = Biomarker::Ki67;

    bool operator==(const SlideRecord&) const = default;
};

inline constexpr std::int64_t kDefaultPatchSize = 350;

struct PatchRegion {
    std::string slide_id;
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t width = kDefaultPatchSize;
    std::int64_t height = kDefaultPatchSize;

    bool operator==(const PatchRegion&) const = default;
};

/// Every violated slide invariant, empty when valid.
std::vector<std::string> validate_slide(const SlideRecord& slide);

/// Every violated patch invariant against its slide, empty when valid.
/// Violations are data: this never throws.
std::vector<std::string> validate_patch(const PatchRegion& patch, const SlideRecord& slide);

/// Patch-local checks only (positive size, non-negative origin).
std::vector<std::string> validate_patch_shape(const PatchRegion& patch);

/// Canonical patch key "{slide}_{x}_{y}_{w}x{h}".
std::string default_patch_key(const PatchRegion& patch);

/// True for keys made of [A-Za-z0-9._-], 1..200 chars, not "." or "..".
bool is_valid_key(std::string_view key);

struct EvaluationConfig {
    std::vector<double> iou_thresholds = default_iou_thresholds();
    double confidence_filter = 0.0;

    /// {0.50, 0.55, ..., 0.95}; each value is the correctly rounded k/100.
    static std::vector<double> default_iou_thresholds();

    /// Throws InvalidInput on an empty or non-increasing list, values
    /// outside (0,1], or a filter outside [0,1].
    void validate() const;
};

}  // namespace ihcq
