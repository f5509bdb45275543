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

#include <cstdlib>
#include <sstream>

#include "ihcq/cli.hpp"
#include "ihcq/documents.hpp"
#include "ihcq/fixtures.hpp"

using namespace ihcq;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run ihcq_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ihcq_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(ihcq_run({}).code == 2);
    CHECK(ihcq_run({"frobnicate"}).code == 2);
    CHECK(ihcq_run({"evaluate", "--gt", "x"}).code == 2);
    CHECK(ihcq_run({"gen-fixtures", "--kind", "cubes", "--out-dir", "x"}).code == 2);
    const auto help = ihcq_run({"--help"});
    CHECK(help.code == 0);
    CHECK(contains(help.out, "evaluate"));
}

TEST_CASE("gen-fixtures is deterministic per seed") {
    TempDir dir("gen");
    for (const char* kind : {"disks", "fig5", "spurious"}) {
        CAPTURE(kind);
        REQUIRE(ihcq_run({"gen-fixtures", "--kind", kind, "--seed", "7", "--out-dir", dir / "a"}).code == 0);
        REQUIRE(ihcq_run({"gen-fixtures", "--kind", kind, "--seed", "7", "--out-dir", dir / "b"}).code == 0);
        for (const auto& name : {"slide.json", "patch.png", "ground_truth.json"}) {
            CHECK(docs::read_text(dir.path / "a" / name) == docs::read_text(dir.path / "b" / name));
        }
    }
}

TEST_CASE("evaluate on the three-GT fixture") {
    TempDir dir("fig5");
    REQUIRE(ihcq_run({"gen-fixtures", "--kind", "fig5", "--out-dir", dir / "f"}).code == 0);
    const auto r = ihcq_run({"evaluate", "--pred", dir / "f/predictions.json", "--gt", dir / "f/ground_truth.json",
                             "--out", dir / "report.json", "--curves", dir / "curves.csv"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "All tumor cells       0.67"));
    const auto report = docs::read_json(dir / "report.json");
    CHECK(std::abs(report["all"]["map50"].get<double>() - 2.0 / 3.0) < 1e-9);
    CHECK(report["per_class"][0]["true_positives"][0] == 2);
    CHECK(report["per_class"][0]["false_positives"][0] == 2);
    CHECK(report["per_class"][0]["false_negatives"][0] == 1);
    CHECK(contains(docs::read_text(dir / "curves.csv"), "immunopositive,iou50,2,0.666667,0.666667,0.600000"));

    // Restricting the thresholds changes the range column header.
    const auto custom = ihcq_run({"evaluate", "--pred", dir / "f/predictions.json", "--gt", dir / "f/ground_truth.json",
                                  "--iou", "0.5", "0.6"});
    CHECK(custom.code == 0);
    CHECK(ihcq_run({"evaluate", "--pred", dir / "f/predictions.json", "--gt", dir / "f/ground_truth.json", "--iou", "0.6",
                    "0.5"}).code == 2);
}

TEST_CASE("evaluate: perfect predictions, empty ground truth, bad paths") {
    TempDir dir("eval");
    const auto f = fixtures::disks(11);
    docs::PredictionFile perfect;
    perfect.patch = f.ground_truth.patch;
    perfect.model = "oracle";
    for (const auto& g : docs::ground_truth(f.ground_truth)) perfect.instances.push_back({g.id, g.cls, 0.9, g.mask});
    docs::write_text(dir / "pred.json", docs::dump(docs::to_json(perfect)));
    docs::write_text(dir / "gt.json", docs::dump(docs::to_json(f.ground_truth)));
    auto empty = f.ground_truth;
    empty.annotations.clear();
    docs::write_text(dir / "empty.json", docs::dump(docs::to_json(empty)));

    auto r = ihcq_run({"evaluate", "--pred", dir / "pred.json", "--gt", dir / "gt.json", "--out", dir / "r.json"});
    REQUIRE(r.code == 0);
    const auto j = docs::read_json(dir / "r.json");
    CHECK(j["all"]["map50"] == 1.0);
    CHECK(j["all"]["map75"] == 1.0);
    CHECK(j["all"]["map_range"] == 1.0);

    r = ihcq_run({"evaluate", "--pred", dir / "pred.json", "--gt", dir / "empty.json"});
    CHECK(r.code == 3);
    CHECK(contains(r.err, "empty_dataset"));
    CHECK(ihcq_run({"evaluate", "--pred", dir / "missing.json", "--gt", dir / "gt.json"}).code == 3);
}

TEST_CASE("score command") {
    TempDir dir("score");
    // 3 positive, 7 negative manual cells.
    auto doc = fixtures::disks(12, 7, 3).ground_truth;
    docs::write_text(dir / "nuc.json", docs::dump(docs::to_json(doc)));
    auto r = ihcq_run({"score", "--annotations", dir / "nuc.json", "--out", dir / "s.json"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "30.0% positive"));
    CHECK(docs::read_json(dir / "s.json")["nuclear"]["percent_positive"] == 30.0);

    // HER2: 12 m3, 5 m2, 3 m1, 80 m0 by relabelling disks.
    auto her2 = fixtures::disks(13, 60, 40).ground_truth;
    for (std::size_t i = 0; i < her2.annotations.size(); ++i) {
        her2.annotations[i].cls = i < 12   ? CellClass::M3IntenseComplete
                                  : i < 17 ? CellClass::M2ModerateComplete
                                  : i < 20 ? CellClass::M1FaintIncomplete
                                           : CellClass::M0NoStaining;
    }
    docs::write_text(dir / "her2.json", docs::dump(docs::to_json(her2)));
    r = ihcq_run({"score", "--annotations", dir / "her2.json"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "HER2 score: 3+ Positive"));

    // Boundary flag at exactly 10%.
    for (std::size_t i = 0; i < her2.annotations.size(); ++i) {
        her2.annotations[i].cls = i < 10 ? CellClass::M3IntenseComplete : CellClass::M0NoStaining;
    }
    docs::write_text(dir / "edge.json", docs::dump(docs::to_json(her2)));
    r = ihcq_run({"score", "--annotations", dir / "edge.json"});
    CHECK(contains(r.out, "HER2 score: 0 Negative"));
    CHECK(contains(r.out, "boundary"));

    // Prediction files named after SOLOv2 default to tau 0.3.
    auto pf = *fixtures::spurious(3).predictions;
    pf.model = "SOLOv2";
    docs::write_text(dir / "solo.json", docs::dump(docs::to_json(pf)));
    r = ihcq_run({"score", "--annotations", dir / "solo.json"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "tau_th: 0.30"));
    CHECK(ihcq_run({"score", "--annotations", dir / "solo.json", "--tau", "1.5"}).code == 2);

    auto none = doc;
    none.annotations.clear();
    docs::write_text(dir / "none.json", docs::dump(docs::to_json(none)));
    r = ihcq_run({"score", "--annotations", dir / "none.json"});
    CHECK(r.code == 3);
    CHECK(contains(r.err, "no_cells"));
}

TEST_CASE("sweep command") {
    TempDir dir("sweep");
    REQUIRE(ihcq_run({"gen-fixtures", "--kind", "spurious", "--seed", "4", "--out-dir", dir / "s"}).code == 0);
    auto r = ihcq_run({"sweep", "--pred", dir / "s/predictions.json", "--gt", dir / "s/ground_truth.json", "--grid",
                       "0:1:0.05", "--out", dir / "sweep.csv"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "argmax tau_th = 0.00"));
    const auto csv = docs::read_text(dir / "sweep.csv");
    CHECK(csv.rfind("tau,map50\n0.0000,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);

    // Perfect predictions: flat at 1.
    const auto f = fixtures::disks(4);
    docs::PredictionFile perfect;
    perfect.patch = f.ground_truth.patch;
    perfect.model = "oracle";
    for (const auto& g : docs::ground_truth(f.ground_truth)) perfect.instances.push_back({g.id, g.cls, 1.0, g.mask});
    docs::write_text(dir / "perfect.json", docs::dump(docs::to_json(perfect)));
    docs::write_text(dir / "gt.json", docs::dump(docs::to_json(f.ground_truth)));
    r = ihcq_run({"sweep", "--pred", dir / "perfect.json", "--gt", dir / "gt.json", "--grid", "0:1:0.25"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "1.00     1.0000"));
    CHECK(contains(r.out, "argmax tau_th = 0.00 (mAP@0.50 = 1.0000)"));

    CHECK(ihcq_run({"sweep", "--pred", dir / "perfect.json", "--gt", dir / "s/ground_truth.json", "--grid", "0.5:0.2:0.1"})
              .code == 2);
    CHECK(ihcq_run({"sweep", "--pred", dir / "perfect.json", "--gt", dir / "s/ground_truth.json", "--grid", "a:b"}).code ==
          2);
}

TEST_CASE("ingest, presegment, compare and export") {
    TempDir dir("ingest");
    RgbImage img(1000, 800);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 31);
    const auto png = encode_png(img);
    docs::write_text(dir / "slide.png", std::string(png.begin(), png.end()));

    const std::vector<std::string> args{"ingest", dir / "slide.png", "--slide-id", "s1", "--biomarker", "Ki-67",
                                        "--resolution", "0.25", "--root", dir / "store"};
    auto r = ihcq_run(args);
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("3 levels, 21 tiles\n", 0) == 0);
    CHECK(ihcq_run(args).out == r.out);
    CHECK(ihcq_run({"ingest", dir / "nope.png", "--slide-id", "s2", "--biomarker", "ER", "--root", dir / "store"}).code == 3);
    CHECK(ihcq_run({"ingest", dir / "slide.png", "--slide-id", "s2", "--biomarker", "XYZ", "--root", dir / "store"}).code == 2);

    // IHCQ_STORE wins over --root.
    ::setenv("IHCQ_STORE", (dir / "env-store").c_str(), 1);
    r = ihcq_run({"ingest", dir / "slide.png", "--slide-id", "s3", "--biomarker", "HER2", "--root", dir / "store"});
    ::unsetenv("IHCQ_STORE");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir.path / "env-store/slides/s3/meta.json"));
    CHECK_FALSE(fs::exists(dir.path / "store/slides/s3"));

    REQUIRE(ihcq_run({"gen-fixtures", "--kind", "disks", "--seed", "21", "--out-dir", dir / "d"}).code == 0);
    r = ihcq_run({"presegment", dir / "d/patch.png", "--out", dir / "base.json", "--slide-id", "disks-21"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "8 instances (3 immunopositive, 5 immunonegative)"));
    r = ihcq_run({"score", "--annotations", dir / "base.json"});
    CHECK(contains(r.out, "37.5% positive"));

    r = ihcq_run({"compare", "--pred", dir / "base.json", "--gt", dir / "d/ground_truth.json"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "baseline"));

    CHECK(ihcq_run({"export", "--root", dir / "store"}).code == 3);
}
