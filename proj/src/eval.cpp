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

#include "ihcq/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "ihcq/error.hpp"

namespace ihcq {

void validate_predictions(const std::vector<PredictionInstance>& preds) {
    std::set<std::string> ids;
    for (const auto& p : preds) {
        if (p.mask.empty()) {
            throw Error(ErrorCode::InvalidInput, "prediction " + p.id + " has an empty mask");
        }
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
            throw Error(ErrorCode::InvalidInput, "prediction " + p.id + " confidence outside [0,1]");
        }
        if (!ids.insert(p.id).second) {
            throw Error(ErrorCode::InvalidInput, "duplicate prediction id " + p.id);
        }
    }
}

}  // namespace ihcq

namespace ihcq::eval {

std::size_t MatchResult::true_positives() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) {
        return o.label == MatchLabel::TruePositive;
    }));
}

std::size_t MatchResult::false_positives() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) {
        return o.label == MatchLabel::FalsePositive;
    }));
}

double ClassMetrics::mean_ap() const {
    if (ap.empty()) return 0.0;
    return std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
}

PRCurve pr_curve(const MatchResult& match, std::size_t total_gt) {
    PRCurve curve;
    curve.ground_truth_count = total_gt;
    std::size_t tp = 0, fp = 0;
    for (const auto& o : match.outcomes) {
        if (o.label == MatchLabel::Ignored) continue;
        if (o.label == MatchLabel::TruePositive) {
            ++tp;
        } else {
            ++fp;
        }
        if (total_gt == 0 && tp > 0) {
            throw Error(ErrorCode::Internal, "true positive counted without ground truth");
        }
        PRPoint p;
        p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        p.recall = total_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_gt);
        p.confidence = o.confidence;
        curve.points.push_back(p);
    }
    return curve;
}

double average_precision(const PRCurve& curve) {
    const auto& pts = curve.points;
    std::vector<double> envelope(pts.size());
    double best = 0.0;
    for (std::size_t i = pts.size(); i-- > 0;) {
        best = std::max(best, pts[i].precision);
        envelope[i] = best;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ap += (pts[i].recall - prev_recall) * envelope[i];
        prev_recall = pts[i].recall;
    }
    return ap;
}

Evaluator::Evaluator(std::vector<EvalImage> images) : images_(std::move(images)) {
    cache_.resize(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) {
        const auto& img = images_[i];
        auto& c = cache_[i];
        c.gts = img.ground_truth.size();
        c.gt_order.resize(c.gts);
        std::iota(c.gt_order.begin(), c.gt_order.end(), std::size_t{0});
        std::sort(c.gt_order.begin(), c.gt_order.end(), [&](std::size_t a, std::size_t b) {
            return img.ground_truth[a].id < img.ground_truth[b].id;
        });

        std::vector<PackedMask> gts;
        gts.reserve(c.gts);
        for (const auto& g : img.ground_truth) gts.emplace_back(g.mask);
        c.ious.assign(img.predictions.size() * c.gts, 0.0);
        for (std::size_t p = 0; p < img.predictions.size(); ++p) {
            const PackedMask pm(img.predictions[p].mask);
            for (std::size_t g = 0; g < c.gts; ++g) {
                const auto inter = intersection_area(pm, gts[g]);
                if (inter == 0) continue;
                const auto uni = pm.area() + gts[g].area() - inter;
                c.ious[p * c.gts + g] = static_cast<double>(inter) / static_cast<double>(uni);
            }
        }
    }
}

double Evaluator::iou(std::size_t image, std::size_t p, std::size_t g) const {
    const auto& c = cache_.at(image);
    return c.ious.at(p * c.gts + g);
}

std::vector<CellClass> Evaluator::ground_truth_classes() const {
    std::set<CellClass> present;
    for (const auto& img : images_) {
        for (const auto& g : img.ground_truth) present.insert(g.cls);
    }
    return {present.begin(), present.end()};
}

std::size_t Evaluator::ground_truth_count(CellClass cls) const {
    std::size_t n = 0;
    for (const auto& img : images_) {
        n += static_cast<std::size_t>(std::count_if(img.ground_truth.begin(), img.ground_truth.end(),
                                                     [&](const auto& g) { return g.cls == cls; }));
    }
    return n;
}

std::size_t Evaluator::prediction_count(CellClass cls, double min_confidence) const {
    std::size_t n = 0;
    for (const auto& img : images_) {
        for (const auto& p : img.predictions) {
            if (p.cls == cls && p.confidence >= min_confidence) ++n;
        }
    }
    return n;
}

MatchResult Evaluator::match(CellClass cls, double iou_threshold, double min_confidence,
                             bool other_class_aware) const {
    struct Ref {
        std::size_t image;
        std::size_t pred;
    };
    std::vector<Ref> ranked;
    for (std::size_t i = 0; i < images_.size(); ++i) {
        const auto& preds = images_[i].predictions;
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (preds[p].cls == cls && preds[p].confidence >= min_confidence) ranked.push_back({i, p});
        }
    }
    std::sort(ranked.begin(), ranked.end(), [&](const Ref& a, const Ref& b) {
        const auto& pa = images_[a.image].predictions[a.pred];
        const auto& pb = images_[b.image].predictions[b.pred];
        if (pa.confidence != pb.confidence) return pa.confidence > pb.confidence;
        const auto& ka = images_[a.image].key;
        const auto& kb = images_[b.image].key;
        return std::tie(ka, pa.id, a.image, a.pred) < std::tie(kb, pb.id, b.image, b.pred);
    });

    std::vector<std::vector<char>> claimed(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) claimed[i].assign(cache_[i].gts, 0);

    MatchResult result;
    result.ground_truth_count = ground_truth_count(cls);
    std::size_t tp = 0;
    for (const auto& ref : ranked) {
        const auto& img = images_[ref.image];
        const auto& c = cache_[ref.image];
        const auto& pred = img.predictions[ref.pred];
        PredictionOutcome out;
        out.image = img.key;
        out.prediction_id = pred.id;
        out.confidence = pred.confidence;

        auto best_of = [&](bool same_class) -> std::optional<std::size_t> {
            std::optional<std::size_t> best;
            double best_iou = -1.0;
            for (std::size_t g : c.gt_order) {
                const auto& gt = img.ground_truth[g];
                if ((gt.cls == cls) != same_class || claimed[ref.image][g]) continue;
                const double v = c.ious[ref.pred * c.gts + g];
                if (v > best_iou) {
                    best_iou = v;
                    best = g;
                }
            }
            if (best && best_iou >= iou_threshold) return best;
            return std::nullopt;
        };

        if (auto g = best_of(true)) {
            claimed[ref.image][*g] = 1;
            out.label = MatchLabel::TruePositive;
            out.ground_truth_id = img.ground_truth[*g].id;
            out.iou = c.ious[ref.pred * c.gts + *g];
            ++tp;
        } else if (auto other = other_class_aware ? best_of(false) : std::nullopt) {
            claimed[ref.image][*other] = 1;
            out.label = MatchLabel::Ignored;
            out.ground_truth_id = img.ground_truth[*other].id;
            out.iou = c.ious[ref.pred * c.gts + *other];
        } else {
            out.label = MatchLabel::FalsePositive;
        }
        result.outcomes.push_back(std::move(out));
    }
    result.unmatched_ground_truth = result.ground_truth_count - tp;
    return result;
}

PRCurve Evaluator::curve(CellClass cls, double iou_threshold, double min_confidence) const {
    return pr_curve(match(cls, iou_threshold, min_confidence), ground_truth_count(cls));
}

PRCurve Evaluator::oth_curve(CellClass cls, double iou_threshold, double min_confidence) const {
    return pr_curve(match(cls, iou_threshold, min_confidence, true), ground_truth_count(cls));
}

namespace {

ClassMetrics class_metrics(const Evaluator& ev, CellClass cls, std::span<const double> thresholds,
                           double min_confidence) {
    ClassMetrics m;
    m.cls = cls;
    m.ground_truth_count = ev.ground_truth_count(cls);
    m.prediction_count = ev.prediction_count(cls, min_confidence);
    for (double th : thresholds) {
        const auto match = ev.match(cls, th, min_confidence);
        const auto curve = pr_curve(match, m.ground_truth_count);
        m.thresholds.push_back(th);
        m.ap.push_back(average_precision(curve));
        m.true_positives.push_back(match.true_positives());
        m.false_positives.push_back(match.false_positives());
        m.false_negatives.push_back(match.unmatched_ground_truth);
    }
    return m;
}

std::vector<CellClass> require_classes(const Evaluator& ev) {
    auto classes = ev.ground_truth_classes();
    if (classes.empty()) {
        throw Error(ErrorCode::EmptyDataset, "no ground-truth instances to evaluate against");
    }
    common_family(classes);
    return classes;
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

MapResult Evaluator::map_at(double iou_threshold, double min_confidence) const {
    MapResult out;
    std::vector<double> aps;
    const double th[1] = {iou_threshold};
    for (auto cls : require_classes(*this)) {
        out.per_class.push_back(class_metrics(*this, cls, th, min_confidence));
        aps.push_back(out.per_class.back().ap.front());
    }
    out.map = mean(aps);
    return out;
}

MapRangeResult Evaluator::map_range(std::span<const double> thresholds, double min_confidence) const {
    MapRangeResult out;
    out.thresholds.assign(thresholds.begin(), thresholds.end());
    for (auto cls : require_classes(*this)) {
        out.per_class.push_back(class_metrics(*this, cls, thresholds, min_confidence));
    }
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<double> aps;
        for (const auto& m : out.per_class) aps.push_back(m.ap[t]);
        out.per_threshold.push_back(mean(aps));
    }
    out.map = mean(out.per_threshold);
    return out;
}

namespace {

EvalImage single_image(std::span<const PredictionInstance> predictions,
                       std::span<const GroundTruthInstance> ground_truth) {
    EvalImage img;
    img.key = "patch";
    img.predictions.assign(predictions.begin(), predictions.end());
    img.ground_truth.assign(ground_truth.begin(), ground_truth.end());
    return img;
}

}  // namespace

MatchResult match_instances(std::span<const PredictionInstance> predictions,
                            std::span<const GroundTruthInstance> ground_truth, CellClass cls,
                            double iou_threshold) {
    std::vector<EvalImage> images{single_image(predictions, ground_truth)};
    return Evaluator(std::move(images)).match(cls, iou_threshold);
}

MapResult map_at(std::span<const PredictionInstance> predictions,
                 std::span<const GroundTruthInstance> ground_truth, double iou_threshold) {
    std::vector<EvalImage> images{single_image(predictions, ground_truth)};
    return Evaluator(std::move(images)).map_at(iou_threshold);
}

MapRangeResult map_range(std::span<const PredictionInstance> predictions,
                         std::span<const GroundTruthInstance> ground_truth) {
    std::vector<EvalImage> images{single_image(predictions, ground_truth)};
    const auto thresholds = EvaluationConfig::default_iou_thresholds();
    return Evaluator(std::move(images)).map_range(thresholds);
}

PRCurve oth_curve(std::span<const PredictionInstance> predictions,
                  std::span<const GroundTruthInstance> ground_truth, CellClass cls,
                  double iou_threshold) {
    std::vector<EvalImage> images{single_image(predictions, ground_truth)};
    return Evaluator(std::move(images)).oth_curve(cls, iou_threshold);
}

EvalReport build_report(const Evaluator& evaluator, const EvaluationConfig& config,
                        const std::string& model, std::optional<Biomarker> biomarker) {
    config.validate();
    const double tau = config.confidence_filter;
    const auto classes = require_classes(evaluator);

    EvalReport report;
    report.model = model;
    report.biomarker = biomarker;
    report.tau = tau;
    report.thresholds = config.iou_thresholds;
    report.images = evaluator.images().size();

    const std::string prefix = biomarker ? std::string(to_string(*biomarker)) + " - " : std::string();
    const double fixed[2] = {0.50, 0.75};
    std::vector<double> ap50, ap75, ap_range;
    for (auto cls : classes) {
        auto metrics = class_metrics(evaluator, cls, config.iou_thresholds, tau);
        const auto at_fixed = class_metrics(evaluator, cls, fixed, tau);

        ReportRow row;
        row.label = prefix + std::string(display_name(cls));
        row.cls = cls;
        row.ground_truth_count = metrics.ground_truth_count;
        row.prediction_count = metrics.prediction_count;
        row.map50 = at_fixed.ap[0];
        row.map75 = at_fixed.ap[1];
        row.map_range = metrics.mean_ap();
        ap50.push_back(row.map50);
        ap75.push_back(row.map75);
        ap_range.push_back(row.map_range);
        report.all.ground_truth_count += row.ground_truth_count;
        report.all.prediction_count += row.prediction_count;
        report.classes.push_back(row);
        report.metrics.push_back(std::move(metrics));

        CurveSet curves;
        curves.cls = cls;
        curves.match50 = evaluator.match(cls, 0.50, tau);
        curves.iou50 = pr_curve(curves.match50, evaluator.ground_truth_count(cls));
        curves.iou75 = evaluator.curve(cls, 0.75, tau);
        curves.oth = evaluator.oth_curve(cls, 0.50, tau);
        report.curves.push_back(std::move(curves));
    }
    report.all.label = prefix + "All tumor cells";
    report.all.map50 = mean(ap50);
    report.all.map75 = mean(ap75);
    report.all.map_range = mean(ap_range);
    return report;
}

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string range_header(const std::vector<double>& thresholds) {
    if (thresholds == EvaluationConfig::default_iou_thresholds()) return "mAP@[.50:.05:.95]";
    return "mAP@[custom]";
}

std::string pad(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s + " ";
    return s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_table(const EvalReport& report) {
    std::size_t label_width = 16;
    label_width = std::max(label_width, report.all.label.size() + 2);
    for (const auto& r : report.classes) label_width = std::max(label_width, r.label.size() + 2);

    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", report.tau);
    os << "model: " << report.model << "\n";
    os << "tau_th: " << buf << "\n";
    os << "patches: " << report.images << "\n";
    os << pad("Class", label_width) << pad("mAP@0.50", 10) << pad("mAP@0.75", 10)
       << range_header(report.thresholds) << "\n";
    auto line = [&](const ReportRow& r) {
        os << pad(r.label, label_width) << pad(fixed2(r.map50), 10) << pad(fixed2(r.map75), 10)
           << fixed2(r.map_range) << "\n";
    };
    line(report.all);
    for (const auto& r : report.classes) line(r);
    return os.str();
}

std::string render_comparison(std::span<const EvalReport> reports) {
    std::size_t width = 8;
    for (const auto& r : reports) width = std::max(width, r.model.size() + 2);
    std::ostringstream os;
    os << pad("Model", width) << pad("mAP@0.50", 10) << pad("mAP@0.75", 10) << "mAP@[.50:.05:.95]\n";
    for (const auto& r : reports) {
        os << pad(r.model, width) << pad(fixed2(r.all.map50), 10) << pad(fixed2(r.all.map75), 10)
           << fixed2(r.all.map_range) << "\n";
    }
    return os.str();
}

std::string render_curves_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "class,curve,index,precision,recall,confidence\n";
    char buf[128];
    auto emit = [&](CellClass cls, const char* name, const PRCurve& curve) {
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& p = curve.points[i];
            std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f", i, p.precision, p.recall, p.confidence);
            os << to_string(cls) << "," << name << "," << buf << "\n";
        }
    };
    for (const auto& c : report.curves) {
        emit(c.cls, "iou50", c.iou50);
        emit(c.cls, "iou75", c.iou75);
        emit(c.cls, "oth", c.oth);
    }
    return os.str();
}

}  // namespace ihcq::eval
