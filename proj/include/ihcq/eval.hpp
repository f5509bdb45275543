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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihcq/core.hpp"
#include "ihcq/instances.hpp"

namespace ihcq::eval {

enum class MatchLabel {
    TruePositive,
    FalsePositive,
    /// Oth curves only: a would-be false positive explained by an
    /// other-class ground truth. It is left out of the accumulation.
    Ignored,
};

struct PredictionOutcome {
    std::string image;
    std::string prediction_id;
    double confidence = 0.0;
    MatchLabel label = MatchLabel::FalsePositive;
    std::optional<std::string> ground_truth_id;  // matched GT (or absorbing GT when Ignored)
    double iou = 0.0;                            // IoU with that GT, 0 for plain FPs
};

/// Outcomes in ranking order: confidence descending, then patch key, then
/// prediction id ascending.
struct MatchResult {
    std::vector<PredictionOutcome> outcomes;
    std::size_t ground_truth_count = 0;
    std::size_t unmatched_ground_truth = 0;  // false negatives

    std::size_t true_positives() const;
    std::size_t false_positives() const;
};

struct PRPoint {
    double precision = 0.0;
    double recall = 0.0;
    double confidence = 0.0;
};

struct PRCurve {
    std::vector<PRPoint> points;
    std::size_t ground_truth_count = 0;
};

/// Greedy confidence-ordered matching of one class within one patch. Each
/// prediction claims the still-unmatched GT of maximal IoU (ties: GT id
/// ascending) when that IoU >= iou_threshold, otherwise it is a false
/// positive.
MatchResult match_instances(std::span<const PredictionInstance> predictions,
                            std::span<const GroundTruthInstance> ground_truth, CellClass cls,
                            double iou_threshold);

/// Cumulative precision/recall, one point per non-ignored outcome. Throws
/// Internal when total_gt is 0 but a true positive exists.
PRCurve pr_curve(const MatchResult& match, std::size_t total_gt);

/// Area under the monotone precision envelope by a left Riemann sum over
/// recall increments from 0.
double average_precision(const PRCurve& curve);

struct ClassMetrics {
    CellClass cls = CellClass::Immunopositive;
    std::size_t ground_truth_count = 0;
    std::size_t prediction_count = 0;
    std::vector<double> thresholds;
    std::vector<double> ap;  // per threshold
    std::vector<std::size_t> true_positives;
    std::vector<std::size_t> false_positives;
    std::vector<std::size_t> false_negatives;

    double mean_ap() const;
};

struct MapResult {
    double map = 0.0;
    std::vector<ClassMetrics> per_class;  // only classes present in ground truth
};

struct MapRangeResult {
    double map = 0.0;
    std::vector<double> thresholds;
    std::vector<double> per_threshold;  // mAP at each threshold
    std::vector<ClassMetrics> per_class;
};

/// Precomputes every prediction/GT IoU once per patch so repeated queries
/// (thresholds, confidence cut-offs, Oth) reuse it.
class Evaluator {
public:
    explicit Evaluator(std::vector<EvalImage> images);

    const std::vector<EvalImage>& images() const { return images_; }

    /// Classes with at least one GT instance, in enum order.
    std::vector<CellClass> ground_truth_classes() const;
    std::size_t ground_truth_count(CellClass cls) const;
    std::size_t prediction_count(CellClass cls, double min_confidence = 0.0) const;

    /// Dataset-wide match of one class; predictions below min_confidence
    /// are removed before ranking (their GTs simply stay unmatched).
    MatchResult match(CellClass cls, double iou_threshold, double min_confidence = 0.0,
                      bool other_class_aware = false) const;

    PRCurve curve(CellClass cls, double iou_threshold, double min_confidence = 0.0) const;
    PRCurve oth_curve(CellClass cls, double iou_threshold = 0.5, double min_confidence = 0.0) const;

    /// Throws EmptyDataset when no GT instance exists.
    MapResult map_at(double iou_threshold, double min_confidence = 0.0) const;
    MapRangeResult map_range(std::span<const double> thresholds, double min_confidence = 0.0) const;

    /// IoU between prediction p and GT g of image i (packed-kernel route).
    double iou(std::size_t image, std::size_t p, std::size_t g) const;

private:
    struct ImageCache {
        std::size_t gts = 0;
        std::vector<double> ious;               // preds x gts, row-major
        std::vector<std::size_t> gt_order;      // GT indices by id ascending
    };

    std::vector<EvalImage> images_;
    std::vector<ImageCache> cache_;
};

/// Single-patch conveniences over Evaluator.
MapResult map_at(std::span<const PredictionInstance> predictions,
                 std::span<const GroundTruthInstance> ground_truth, double iou_threshold);
MapRangeResult map_range(std::span<const PredictionInstance> predictions,
                         std::span<const GroundTruthInstance> ground_truth);
PRCurve oth_curve(std::span<const PredictionInstance> predictions,
                  std::span<const GroundTruthInstance> ground_truth, CellClass cls,
                  double iou_threshold = 0.5);

struct ReportRow {
    std::string label;
    std::optional<CellClass> cls;  // nullopt for the all-classes row
    std::size_t ground_truth_count = 0;
    std::size_t prediction_count = 0;
    double map50 = 0.0;
    double map75 = 0.0;
    double map_range = 0.0;
};

struct CurveSet {
    CellClass cls = CellClass::Immunopositive;
    PRCurve iou50;
    PRCurve iou75;
    PRCurve oth;
    MatchResult match50;  // per-prediction outcomes behind iou50
};

struct EvalReport {
    std::string model;
    std::optional<Biomarker> biomarker;
    double tau = 0.0;
    std::vector<double> thresholds;
    std::size_t images = 0;
    ReportRow all;
    std::vector<ReportRow> classes;
    std::vector<ClassMetrics> metrics;
    std::vector<CurveSet> curves;
};

/// Full report for one model: the all-classes row plus one row per class
/// present in ground truth. Throws EmptyDataset when there is no GT.
EvalReport build_report(const Evaluator& evaluator, const EvaluationConfig& config,
                        const std::string& model, std::optional<Biomarker> biomarker);

/// Fixed-width text table with columns class / mAP@0.50 / mAP@0.75 /
/// mAP@[.50:.05:.95], values to two decimals.
std::string render_table(const EvalReport& report);

/// One row per model ("all tumor cells" values only).
std::string render_comparison(std::span<const EvalReport> reports);

/// "precision,recall,confidence" CSV with a curve/class column prefix.
std::string render_curves_csv(const EvalReport& report);

}  // namespace ihcq::eval
