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
#include <random>

#include "ihcq/error.hpp"
#include "ihcq/eval.hpp"
#include "oracles.hpp"

using namespace ihcq;
using namespace ihcq::eval;
using ihcq::test::rect_mask;

namespace {

constexpr int W = 350;
constexpr int H = 350;
constexpr auto Pos = CellClass::Immunopositive;
constexpr auto Neg = CellClass::Immunonegative;

PredictionInstance pred(std::string id, CellClass cls, double conf, BinaryMask m) {
    return PredictionInstance{std::move(id), cls, conf, std::move(m)};
}

GroundTruthInstance gt(std::string id, CellClass cls, BinaryMask m) {
    return GroundTruthInstance{std::move(id), cls, std::move(m)};
}

// Three 40x40 GTs; P2 and P3 overlap A and B above 0.5, P4 overlaps B
// below 0.5 and P1 overlaps nothing.
struct ThreeGts {
    std::vector<PredictionInstance> preds;
    std::vector<GroundTruthInstance> gts;
};

ThreeGts three_gts() {
    ThreeGts f;
    f.gts.push_back(gt("GTA", Pos, rect_mask(W, H, 20, 20, 60, 60)));
    f.gts.push_back(gt("GTB", Pos, rect_mask(W, H, 150, 20, 190, 60)));
    f.gts.push_back(gt("GTC", Pos, rect_mask(W, H, 260, 20, 300, 60)));
    f.preds.push_back(pred("P1", Pos, 0.55, rect_mask(W, H, 100, 200, 140, 240)));
    f.preds.push_back(pred("P2", Pos, 0.90, rect_mask(W, H, 24, 20, 64, 60)));
    f.preds.push_back(pred("P3", Pos, 0.70, rect_mask(W, H, 156, 20, 196, 60)));
    f.preds.push_back(pred("P4", Pos, 0.60, rect_mask(W, H, 175, 20, 215, 60)));
    return f;
}

std::vector<std::pair<double, double>> as_pairs(const PRCurve& c) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : c.points) out.emplace_back(p.precision, p.recall);
    return out;
}

}  // namespace

TEST_CASE("three GTs, four ranked predictions: labels, PR points and AP") {
    const auto f = three_gts();
    const auto m = match_instances(f.preds, f.gts, Pos, 0.5);
    REQUIRE(m.outcomes.size() == 4);
    CHECK(m.outcomes[0].prediction_id == "P2");
    CHECK(m.outcomes[0].label == MatchLabel::TruePositive);
    CHECK(m.outcomes[0].ground_truth_id == "GTA");
    CHECK(m.outcomes[1].prediction_id == "P3");
    CHECK(m.outcomes[1].label == MatchLabel::TruePositive);
    CHECK(m.outcomes[1].ground_truth_id == "GTB");
    CHECK(m.outcomes[2].prediction_id == "P4");
    CHECK(m.outcomes[2].label == MatchLabel::FalsePositive);
    CHECK(m.outcomes[3].prediction_id == "P1");
    CHECK(m.outcomes[3].label == MatchLabel::FalsePositive);
    CHECK(m.unmatched_ground_truth == 1);
    CHECK(m.true_positives() == 2);
    CHECK(m.false_positives() == 2);
    for (const auto& o : m.outcomes) {
        if (o.label == MatchLabel::TruePositive) CHECK(o.iou >= 0.5);
    }

    const auto curve = pr_curve(m, 3);
    REQUIRE(curve.points.size() == 4);
    const std::pair<double, double> expected[4] = {
        {1.0, 1.0 / 3.0}, {1.0, 2.0 / 3.0}, {2.0 / 3.0, 2.0 / 3.0}, {0.5, 2.0 / 3.0}};
    for (int i = 0; i < 4; ++i) {
        CHECK(curve.points[static_cast<std::size_t>(i)].precision == expected[i].first);
        CHECK(curve.points[static_cast<std::size_t>(i)].recall == expected[i].second);
    }
    const double ap = average_precision(curve);
    CHECK(ap == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(test::integrate_ap(as_pairs(curve), 300000) == doctest::Approx(ap).epsilon(1e-4));
    CHECK(map_at(f.preds, f.gts, 0.5).map == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("matching is independent of input order") {
    auto f = three_gts();
    const auto base = match_instances(f.preds, f.gts, Pos, 0.5);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(f.preds.begin(), f.preds.end(), rng);
        std::shuffle(f.gts.begin(), f.gts.end(), rng);
        const auto m = match_instances(f.preds, f.gts, Pos, 0.5);
        REQUIRE(m.outcomes.size() == base.outcomes.size());
        for (std::size_t i = 0; i < m.outcomes.size(); ++i) {
            CHECK(m.outcomes[i].prediction_id == base.outcomes[i].prediction_id);
            CHECK(m.outcomes[i].label == base.outcomes[i].label);
            CHECK(m.outcomes[i].ground_truth_id == base.outcomes[i].ground_truth_id);
        }
    }
}

TEST_CASE("no predictions: every GT is a false negative") {
    const auto f = three_gts();
    const auto m = match_instances({}, f.gts, Pos, 0.5);
    CHECK(m.true_positives() == 0);
    CHECK(m.false_positives() == 0);
    CHECK(m.unmatched_ground_truth == 3);
    CHECK(average_precision(pr_curve(m, 3)) == 0.0);
}

TEST_CASE("two predictions on one GT: higher confidence wins") {
    // Both predictions have IoU 0.8 with the GT (40 of 50 px shared).
    const auto g = rect_mask(20, 20, 0, 0, 10, 5);
    std::vector<GroundTruthInstance> gts{gt("g", Pos, g)};
    std::vector<PredictionInstance> preds{pred("a", Pos, 0.8, rect_mask(20, 20, 0, 0, 8, 5)),
                                          pred("b", Pos, 0.9, rect_mask(20, 20, 2, 0, 10, 5))};
    CHECK(iou(preds[0].mask, g) == 0.8);
    CHECK(iou(preds[1].mask, g) == 0.8);
    const auto m = match_instances(preds, gts, Pos, 0.5);
    CHECK(m.outcomes[0].prediction_id == "b");
    CHECK(m.outcomes[0].label == MatchLabel::TruePositive);
    CHECK(m.outcomes[1].label == MatchLabel::FalsePositive);

    const auto oracle = test::exhaustive_match({{0.8}, {0.8}}, {"g"}, 0.5);
    CHECK(oracle[0].has_value());
    CHECK_FALSE(oracle[1].has_value());
}

TEST_CASE("confidence ties are broken by id") {
    const auto g = rect_mask(20, 20, 0, 0, 10, 10);
    std::vector<GroundTruthInstance> gts{gt("g", Pos, g)};
    std::vector<PredictionInstance> preds{pred("z", Pos, 0.5, g), pred("a", Pos, 0.5, g)};
    const auto m = match_instances(preds, gts, Pos, 0.5);
    CHECK(m.outcomes[0].prediction_id == "a");
    CHECK(m.outcomes[0].label == MatchLabel::TruePositive);
}

TEST_CASE("PR curve edge cases") {
    const auto g = rect_mask(10, 10, 0, 0, 4, 4);
    std::vector<GroundTruthInstance> gts{gt("g", Pos, g)};
    std::vector<PredictionInstance> one{pred("p", Pos, 0.9, g)};
    const auto c = pr_curve(match_instances(one, gts, Pos, 0.5), 1);
    REQUIRE(c.points.size() == 1);
    CHECK(c.points[0].precision == 1.0);
    CHECK(c.points[0].recall == 1.0);
    CHECK(average_precision(c) == 1.0);

    std::vector<PredictionInstance> misses{pred("p", Pos, 0.9, rect_mask(10, 10, 6, 6, 9, 9)),
                                           pred("q", Pos, 0.8, rect_mask(10, 10, 5, 0, 9, 3))};
    const auto fp = pr_curve(match_instances(misses, gts, Pos, 0.5), 1);
    for (const auto& p : fp.points) {
        CHECK(p.precision == 0.0);
        CHECK(p.recall == 0.0);
    }
    CHECK(average_precision(fp) == 0.0);

    MatchResult bogus;
    bogus.outcomes.push_back(PredictionOutcome{"i", "p", 1.0, MatchLabel::TruePositive, "g", 1.0});
    CHECK_THROWS_AS(pr_curve(bogus, 0), Error);
}

TEST_CASE("mAP is the mean over classes present in ground truth") {
    // Class Pos: 5 GTs, one perfect hit -> AP 0.2. Class Neg: 5 GTs, four
    // hits -> AP 0.8.
    std::vector<GroundTruthInstance> gts;
    std::vector<PredictionInstance> preds;
    for (int k = 0; k < 5; ++k) {
        const auto mp = rect_mask(100, 100, 10 * k, 0, 10 * k + 8, 8);
        const auto mn = rect_mask(100, 100, 10 * k, 50, 10 * k + 8, 58);
        gts.push_back(gt("p" + std::to_string(k), Pos, mp));
        gts.push_back(gt("n" + std::to_string(k), Neg, mn));
        if (k == 0) preds.push_back(pred("xp" + std::to_string(k), Pos, 0.9, mp));
        if (k < 4) preds.push_back(pred("xn" + std::to_string(k), Neg, 0.9, mn));
    }
    const auto r = map_at(preds, gts, 0.5);
    REQUIRE(r.per_class.size() == 2);
    CHECK(r.per_class[0].ap[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.per_class[1].ap[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.map == doctest::Approx(0.5).epsilon(1e-12));

    // A class with predictions but no GT is skipped, not scored 0.
    preds.push_back(pred("stray", Pos, 0.1, rect_mask(100, 100, 90, 90, 95, 95)));
    std::vector<GroundTruthInstance> only_neg;
    for (const auto& g : gts)
        if (g.cls == Neg) only_neg.push_back(g);
    const auto r2 = map_at(preds, only_neg, 0.5);
    CHECK(r2.per_class.size() == 1);
    CHECK(r2.map == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("empty ground truth is an empty-dataset error") {
    std::vector<PredictionInstance> preds{pred("p", Pos, 0.9, rect_mask(10, 10, 0, 0, 3, 3))};
    try {
        map_at(preds, {}, 0.5);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyDataset);
    }
}

TEST_CASE("mAP@[.50:.05:.95] for a single pair at IoU exactly 0.60") {
    const auto g = rect_mask(20, 20, 0, 0, 10, 10);
    const auto p = rect_mask(20, 20, 0, 0, 6, 10);
    CHECK(iou(p, g) == 0.6);
    std::vector<GroundTruthInstance> gts{gt("g", Pos, g)};
    std::vector<PredictionInstance> preds{pred("p", Pos, 0.9, p)};
    const auto r = map_range(preds, gts);
    REQUIRE(r.per_threshold.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) CHECK(r.per_threshold[t] == (t <= 2 ? 1.0 : 0.0));
    CHECK(r.map == doctest::Approx(0.30).epsilon(1e-12));

    std::vector<PredictionInstance> perfect{pred("p", Pos, 0.9, g)};
    const auto rp = map_range(perfect, gts);
    CHECK(rp.map == 1.0);
    for (double v : rp.per_threshold) CHECK(v == 1.0);
}

TEST_CASE("Oth curve drops predictions explained by another class") {
    const auto gneg = rect_mask(40, 40, 0, 0, 10, 5);
    const auto ppos = rect_mask(40, 40, 0, 0, 8, 5);  // IoU 0.8 with gneg
    const auto gpos = rect_mask(40, 40, 20, 20, 30, 30);
    std::vector<GroundTruthInstance> gts{gt("neg", Neg, gneg), gt("pos", Pos, gpos)};
    std::vector<PredictionInstance> preds{pred("hit", Pos, 0.95, gpos), pred("confused", Pos, 0.9, ppos)};

    Evaluator ev({EvalImage{"k", preds, gts}});
    const auto standard = ev.curve(Pos, 0.5);
    const auto oth = ev.oth_curve(Pos, 0.5);
    REQUIRE(standard.points.size() == 2);
    CHECK(standard.points[1].precision == 0.5);
    REQUIRE(oth.points.size() == 1);
    CHECK(oth.points[0].precision == 1.0);
    const auto m = ev.match(Pos, 0.5, 0.0, true);
    CHECK(m.outcomes[1].label == MatchLabel::Ignored);
    CHECK(m.outcomes[1].ground_truth_id == "neg");

    // Without cross-class overlap both curves agree.
    std::vector<PredictionInstance> clean{pred("hit", Pos, 0.95, gpos),
                                          pred("miss", Pos, 0.9, rect_mask(40, 40, 32, 0, 38, 6))};
    Evaluator ev2({EvalImage{"k", clean, gts}});
    const auto a = ev2.curve(Pos, 0.5);
    const auto b = ev2.oth_curve(Pos, 0.5);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].precision == b.points[i].precision);
        CHECK(a.points[i].recall == b.points[i].recall);
    }
}

TEST_CASE("metric identities on randomized instance sets") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> count(0, 20), dim(8, 128), grid(0, 1000);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = dim(rng), h = dim(rng);
        std::vector<PredictionInstance> preds;
        std::vector<GroundTruthInstance> gts;
        const int np = count(rng), ng = count(rng);
        for (int k = 0; k < ng; ++k) {
            gts.push_back(gt("g" + std::to_string(k), k % 3 ? Pos : Neg, test::random_blob(rng, w, h)));
        }
        for (int k = 0; k < np; ++k) {
            BinaryMask m = (k < ng && k % 2 == 0) ? gts[static_cast<std::size_t>(k)].mask
                                                  : test::random_blob(rng, w, h);
            preds.push_back(pred("p" + std::to_string(k), k % 4 ? Pos : Neg, grid(rng) / 1000.0, m));
        }
        Evaluator ev({EvalImage{"k", preds, gts}});

        // Packed-kernel IoUs agree with the pixel loop.
        for (std::size_t p = 0; p < preds.size(); ++p)
            for (std::size_t g = 0; g < gts.size(); ++g)
                CHECK(ev.iou(0, p, g) == test::pixel_iou(preds[p].mask.to_bitmap(), gts[g].mask.to_bitmap()));

        for (auto cls : {Pos, Neg}) {
            for (double th : EvaluationConfig::default_iou_thresholds()) {
                const auto m = ev.match(cls, th);
                const auto n_pred = ev.prediction_count(cls);
                const auto n_gt = ev.ground_truth_count(cls);
                CHECK(m.true_positives() + m.false_positives() == n_pred);
                CHECK(m.true_positives() + m.unmatched_ground_truth == n_gt);
                const double ap = average_precision(pr_curve(m, n_gt));
                CHECK(ap >= 0.0);
                CHECK(ap <= 1.0);
            }
        }
    }
}
