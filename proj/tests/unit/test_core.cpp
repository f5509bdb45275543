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

#include <doctest.h>

#include <algorithm>

#include "ihcq/core.hpp"
#include "ihcq/error.hpp"

using namespace ihcq;

namespace {

SlideRecord slide_1000x800() {
    SlideRecord s;
    s.id = "s1";
    s.width = 1000;
    s.height = 800;
    s.stain = StainKind::Nuclear;
    s.biomarker = Biomarker::Ki67;
    return s;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("validate_patch accepts an in-bounds patch") {
    PatchRegion p{"s1", 0, 0, 350, 350};
    CHECK(validate_patch(p, slide_1000x800()).empty());
}

TEST_CASE("validate_patch reports out-of-bounds and empty patches") {
    const auto slide = slide_1000x800();
    CHECK(has(validate_patch(PatchRegion{"s1", 900, 700, 350, 350}, slide), "exceeds bounds"));
    CHECK(has(validate_patch(PatchRegion{"s1", 0, 0, 0, 350}, slide), "empty patch"));
    CHECK(has(validate_patch(PatchRegion{"other", 0, 0, 10, 10}, slide), "slide id mismatch"));
    // The patch touching the far corner exactly is still inside.
    CHECK(validate_patch(PatchRegion{"s1", 650, 450, 350, 350}, slide).empty());
}

TEST_CASE("slide invariants") {
    auto s = slide_1000x800();
    CHECK(validate_slide(s).empty());
    s.biomarker = Biomarker::HER2;
    CHECK(has(validate_slide(s), "biomarker inconsistent with stain kind"));
    s.stain = StainKind::Membrane;
    CHECK(validate_slide(s).empty());
    s.resolution_um = 0.0;
    CHECK(has(validate_slide(s), "non-positive resolution"));
    s.width = 0;
    CHECK(has(validate_slide(s), "empty slide"));
}

TEST_CASE("every class belongs to exactly one family") {
    for (auto kind : {StainKind::Nuclear, StainKind::Membrane}) {
        for (auto cls : classes_of(kind)) {
            CHECK(family_of(cls) == kind);
            CHECK(parse_cell_class(to_string(cls)) == cls);
        }
    }
    CHECK(classes_of(StainKind::Nuclear).size() + classes_of(StainKind::Membrane).size() == 6);
    CHECK_FALSE(parse_cell_class("stroma").has_value());
}

TEST_CASE("mixing stain families is rejected") {
    const std::vector<CellClass> mixed{CellClass::Immunopositive, CellClass::M3IntenseComplete};
    CHECK_THROWS_AS(common_family(mixed), Error);
    const std::vector<CellClass> nuclear{CellClass::Immunopositive, CellClass::Immunonegative};
    CHECK(common_family(nuclear) == StainKind::Nuclear);
    CHECK_FALSE(common_family(std::vector<CellClass>{}).has_value());
}

TEST_CASE("biomarkers map onto stain kinds") {
    CHECK(stain_of(Biomarker::HER2) == StainKind::Membrane);
    CHECK(stain_of(Biomarker::Ki67) == StainKind::Nuclear);
    CHECK(stain_of(Biomarker::ER) == StainKind::Nuclear);
    CHECK(stain_of(Biomarker::PR) == StainKind::Nuclear);
    CHECK(parse_biomarker("ki-67") == Biomarker::Ki67);
    CHECK(parse_biomarker("HER2") == Biomarker::HER2);
    CHECK_FALSE(parse_biomarker("p53").has_value());
}

TEST_CASE("default IoU thresholds are exactly 0.50 + 0.05k") {
    const auto t = EvaluationConfig::default_iou_thresholds();
    REQUIRE(t.size() == 10);
    const double expected[10] = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
    for (int k = 0; k < 10; ++k) CHECK(t[static_cast<std::size_t>(k)] == expected[k]);
    EvaluationConfig cfg;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("EvaluationConfig rejects bad thresholds") {
    EvaluationConfig cfg;
    cfg.iou_thresholds = {0.5, 0.5};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.iou_thresholds = {0.0, 0.5};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.iou_thresholds = {};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.iou_thresholds = {0.5, 1.0};
    CHECK_NOTHROW(cfg.validate());
    cfg.confidence_filter = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("keys") {
    CHECK(is_valid_key("slide-1_a.b"));
    CHECK_FALSE(is_valid_key(".."));
    CHECK_FALSE(is_valid_key("a/b"));
    CHECK_FALSE(is_valid_key(""));
    CHECK(default_patch_key(PatchRegion{"s1", 10, 20, 350, 350}) == "s1_10_20_350x350");
}
