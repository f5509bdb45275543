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

#include <filesystem>

#include "ihcq/documents.hpp"
#include "ihcq/error.hpp"
#include "ihcq/fixtures.hpp"
#include "oracles.hpp"

using namespace ihcq;
using namespace ihcq::docs;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

json small_prediction_file() {
    return parse_json(R"({
      "patch": {"slide_id": "s1", "x": 0, "y": 0, "width": 4, "height": 4},
      "model": "SOLOv2",
      "instances": [
        {"class": "immunopositive", "confidence": 0.8, "mask": {"size": [4, 4], "runs": [0, 2, 2, 2, 10]}},
        {"class": "immunonegative", "confidence": 0.4, "mask": {"size": [4, 4], "runs": [10, 2, 4]}}
      ]})");
}

}  // namespace

TEST_CASE("prediction file parses, assigns default ids and round-trips") {
    const auto f = prediction_file_from_json(small_prediction_file());
    REQUIRE(f.instances.size() == 2);
    CHECK(f.instances[0].id == "000000");
    CHECK(f.instances[1].id == "000001");
    CHECK(f.instances[0].mask.area() == 4);
    CHECK(f.model == "SOLOv2");
    const auto again = prediction_file_from_json(parse_json(dump(to_json(f))));
    CHECK(again.instances[1].mask == f.instances[1].mask);
    CHECK(again.instances[1].id == "000001");
    CHECK(again.patch == f.patch);
}

TEST_CASE("prediction file schema violations") {
    auto j = small_prediction_file();
    j["instances"][0]["mask"]["size"] = {5, 4};
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j["instances"][0]["confidence"] = 1.5;
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j["instances"][0]["class"] = "stroma";
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j["instances"][1]["class"] = "m0_no_staining";
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j["instances"][0]["mask"]["runs"] = {0, 2, 2};
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j["instances"][0]["mask"]["runs"] = {16};
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    j = small_prediction_file();
    j.erase("model");
    CHECK(code_of([&] { prediction_file_from_json(j); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { parse_json("{not json"); }) == ErrorCode::InvalidInput);
}

TEST_CASE("annotation document round trip and validation") {
    const auto f = fixtures::disks(3);
    const auto text = dump(to_json(f.ground_truth));
    const auto back = annotation_document_from_json(parse_json(text));
    CHECK(back == f.ground_truth);
    CHECK(dump(to_json(back)) == text);
    CHECK(validate_document(back).empty());

    auto bad = back;
    bad.annotations[1].id = bad.annotations[0].id;
    bad.annotations[2].provenance = Provenance::Model;
    bad.annotations[3].polygon.vertices.resize(2);
    bad.annotations[4].cls = CellClass::M2ModerateComplete;
    const auto problems = validate_document(bad);
    CHECK(problems.size() == 4);
    CHECK(code_of([&] { require_valid(bad); }) == ErrorCode::InvalidInput);

    auto outside = back;
    outside.annotations[0].polygon.vertices[0].x = 400;
    CHECK(validate_document(outside).size() == 1);

    auto j = to_json(back);
    j["annotations"][0]["provenance"] = "guess";
    CHECK(code_of([&] { annotation_document_from_json(j); }) == ErrorCode::InvalidInput);
    j = to_json(back);
    j["annotations"][0]["polygon"][0] = {1};
    CHECK(code_of([&] { annotation_document_from_json(j); }) == ErrorCode::InvalidInput);
}

TEST_CASE("ground truth rasterizes each polygon in the patch frame") {
    const auto f = fixtures::disks(5);
    const auto gts = ground_truth(f.ground_truth);
    REQUIRE(gts.size() == f.ground_truth.annotations.size());
    for (std::size_t i = 0; i < gts.size(); ++i) {
        CHECK(gts[i].id == f.ground_truth.annotations[i].id);
        CHECK(gts[i].mask.width() == 350);
        CHECK(gts[i].mask.to_bitmap() == test::rasterize_oracle(f.ground_truth.annotations[i].polygon, 350, 350));
    }
    auto tiny = f.ground_truth;
    tiny.annotations[0].polygon = Polygon{{{1.1, 1.1}, {1.4, 1.1}, {1.2, 1.3}}};
    CHECK(code_of([&] { ground_truth(tiny); }) == ErrorCode::InvalidInput);
}

TEST_CASE("presegment converts every prediction into a model annotation") {
    const auto f = fixtures::spurious(2);
    const auto& preds = f.predictions->instances;
    const auto doc = presegment_document(f.ground_truth.patch, preds, "baseline", "t");
    REQUIRE(doc.annotations.size() == preds.size());
    CHECK(validate_document(doc).empty());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& a = doc.annotations[i];
        CHECK(a.provenance == Provenance::Model);
        CHECK(a.confidence == preds[i].confidence);
        CHECK(a.cls == preds[i].cls);
        CHECK(rasterize(a.polygon, 350, 350) == preds[i].mask);
    }
    const auto cells = counted_cells(doc);
    CHECK(cells.size() == preds.size());
    CHECK(cells[0].confidence.has_value());
    CHECK_FALSE(counted_cells(f.ground_truth)[0].confidence.has_value());
}

TEST_CASE("any_document tells the two formats apart") {
    CHECK(any_document_from_json(small_prediction_file()).predictions.has_value());
    CHECK(any_document_from_json(to_json(fixtures::fig5().ground_truth)).annotations.has_value());
    CHECK(code_of([] { any_document_from_json(json::object()); }) == ErrorCode::InvalidInput);
}

TEST_CASE("slide record JSON") {
    SlideRecord s{"slide-1", 1000, 800, 0.25, StainKind::Membrane, Biomarker::HER2};
    CHECK(slide_from_json(to_json(s)) == s);
    auto j = to_json(s);
    j["biomarker"] = "Ki-67";
    CHECK(code_of([&] { slide_from_json(j); }) == ErrorCode::InvalidInput);
}

TEST_CASE("fixtures are byte-identical per seed") {
    const auto dir = std::filesystem::temp_directory_path() / "ihcq_test_fixtures";
    std::filesystem::remove_all(dir);
    const auto a = fixtures::write(fixtures::spurious(7), dir / "a");
    const auto b = fixtures::write(fixtures::spurious(7), dir / "b");
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(read_text(a[i]) == read_text(b[i]));
    const auto c = fixtures::write(fixtures::spurious(8), dir / "c");
    CHECK(read_text(a[1]) != read_text(c[1]));
    CHECK(decode_image([&] {
              const auto t = read_text(a[1]);
              return std::vector<std::uint8_t>(t.begin(), t.end());
          }()) == fixtures::spurious(7).image);
    std::filesystem::remove_all(dir);
}
