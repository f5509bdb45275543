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

#include "ihcq/documents.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "ihcq/error.hpp"

namespace ihcq::docs {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::InvalidInput, path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing");
    return *it;
}

std::string get_string(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::int64_t get_int(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "not finite");
    return d;
}

CellClass get_class(const json& j, const std::string& path) {
    const auto name = get_string(j, "class", path);
    auto cls = parse_cell_class(name);
    if (!cls) fail(path + ".class", "unknown class '" + name + "'");
    return *cls;
}

}  // namespace

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::Manual: return "manual";
        case Provenance::Model: return "model";
        case Provenance::Corrected: return "corrected";
    }
    return "";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
    if (text == "manual") return Provenance::Manual;
    if (text == "model") return Provenance::Model;
    if (text == "corrected") return Provenance::Corrected;
    return std::nullopt;
}

json to_json(const PatchRegion& patch) {
    return {{"slide_id", patch.slide_id}, {"x", patch.x}, {"y", patch.y}, {"width", patch.width}, {"height", patch.height}};
}

PatchRegion patch_from_json(const json& j) {
    PatchRegion p;
    p.slide_id = get_string(j, "slide_id", "patch");
    p.x = get_int(j, "x", "patch");
    p.y = get_int(j, "y", "patch");
    if (j.contains("width")) p.width = get_int(j, "width", "patch");
    if (j.contains("height")) p.height = get_int(j, "height", "patch");
    const auto problems = validate_patch_shape(p);
    if (!problems.empty()) fail("patch", problems.front());
    return p;
}

json to_json(const SlideRecord& s) {
    return {{"id", s.id},
            {"width", s.width},
            {"height", s.height},
            {"resolution_um", s.resolution_um},
            {"stain_kind", std::string(to_string(s.stain))},
            {"biomarker", std::string(to_string(s.biomarker))}};
}

SlideRecord slide_from_json(const json& j) {
    SlideRecord s;
    s.id = get_string(j, "id", "slide");
    s.width = get_int(j, "width", "slide");
    s.height = get_int(j, "height", "slide");
    s.resolution_um = get_number(member(j, "resolution_um", "slide"), "slide.resolution_um");
    const auto stain = parse_stain_kind(get_string(j, "stain_kind", "slide"));
    if (!stain) fail("slide.stain_kind", "unknown stain kind");
    s.stain = *stain;
    const auto bio = parse_biomarker(get_string(j, "biomarker", "slide"));
    if (!bio) fail("slide.biomarker", "unknown biomarker");
    s.biomarker = *bio;
    const auto problems = validate_slide(s);
    if (!problems.empty()) fail("slide", problems.front());
    return s;
}

json to_json(const BinaryMask& mask) {
    return {{"size", {mask.height(), mask.width()}}, {"runs", mask.runs()}};
}

BinaryMask mask_from_json(const json& j) {
    const auto& size = member(j, "size", "mask");
    if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer()) {
        fail("mask.size", "expected [height, width]");
    }
    const auto h = size[0].get<std::int64_t>(), w = size[1].get<std::int64_t>();
    if (h <= 0 || w <= 0 || h > 65536 || w > 65536) fail("mask.size", "dimensions out of range");
    const auto& runs_json = member(j, "runs", "mask");
    if (!runs_json.is_array()) fail("mask.runs", "expected an array");
    std::vector<std::uint32_t> runs;
    runs.reserve(runs_json.size());
    for (const auto& r : runs_json) {
        if (!r.is_number_integer() || r.get<std::int64_t>() < 0 || r.get<std::int64_t>() > 0xFFFFFFFFll) {
            fail("mask.runs", "expected non-negative integers");
        }
        runs.push_back(r.get<std::uint32_t>());
    }
    return BinaryMask::from_runs(static_cast<int>(w), static_cast<int>(h), runs);
}

json to_json(const PredictionFile& file) {
    json instances = json::array();
    for (const auto& p : file.instances) {
        instances.push_back({{"id", p.id},
                             {"class", std::string(to_string(p.cls))},
                             {"confidence", p.confidence},
                             {"mask", to_json(p.mask)}});
    }
    return {{"patch", to_json(file.patch)}, {"model", file.model}, {"instances", instances}};
}

PredictionFile prediction_file_from_json(const json& j) {
    PredictionFile f;
    f.patch = patch_from_json(member(j, "patch", "$"));
    f.model = get_string(j, "model", "$");
    const auto& arr = member(j, "instances", "$");
    if (!arr.is_array()) fail("instances", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto path = "instances[" + std::to_string(i) + "]";
        const auto& item = arr[i];
        PredictionInstance p;
        if (item.is_object() && item.contains("id")) {
            p.id = get_string(item, "id", path);
        } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%06zu", i);
            p.id = buf;
        }
        p.cls = get_class(item, path);
        p.confidence = get_number(member(item, "confidence", path), path + ".confidence");
        try {
            p.mask = mask_from_json(member(item, "mask", path));
        } catch (const Error& e) {
            fail(path + ".mask", e.what());
        }
        if (p.mask.width() != f.patch.width || p.mask.height() != f.patch.height) {
            fail(path + ".mask.size", "does not match the patch size");
        }
        f.instances.push_back(std::move(p));
    }
    std::vector<CellClass> classes;
    for (const auto& p : f.instances) classes.push_back(p.cls);
    common_family(classes);
    validate_predictions(f.instances);
    return f;
}

json to_json(const AnnotationDocument& doc) {
    json anns = json::array();
    for (const auto& a : doc.annotations) {
        json poly = json::array();
        for (const auto& v : a.polygon.vertices) poly.push_back({v.x, v.y});
        json item = {{"id", a.id},
                     {"class", std::string(to_string(a.cls))},
                     {"polygon", poly},
                     {"provenance", std::string(to_string(a.provenance))},
                     {"author", a.author},
                     {"timestamp", a.timestamp}};
        if (a.confidence) item["confidence"] = *a.confidence;
        anns.push_back(std::move(item));
    }
    json out = {{"patch", to_json(doc.patch)}, {"version", doc.version}, {"annotations", anns}};
    if (doc.saved_at) out["saved_at"] = *doc.saved_at;
    return out;
}

AnnotationDocument annotation_document_from_json(const json& j) {
    AnnotationDocument doc;
    doc.patch = patch_from_json(member(j, "patch", "$"));
    doc.version = j.contains("version") ? get_int(j, "version", "$") : 0;
    if (doc.version < 0) fail("version", "must be non-negative");
    if (j.contains("saved_at") && !j.at("saved_at").is_null()) doc.saved_at = get_string(j, "saved_at", "$");
    const auto& arr = member(j, "annotations", "$");
    if (!arr.is_array()) fail("annotations", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto path = "annotations[" + std::to_string(i) + "]";
        const auto& item = arr[i];
        Annotation a;
        a.id = get_string(item, "id", path);
        a.cls = get_class(item, path);
        const auto& poly = member(item, "polygon", path);
        if (!poly.is_array()) fail(path + ".polygon", "expected an array of [x, y]");
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const auto vpath = path + ".polygon[" + std::to_string(k) + "]";
            if (!poly[k].is_array() || poly[k].size() != 2) fail(vpath, "expected [x, y]");
            a.polygon.vertices.push_back({get_number(poly[k][0], vpath), get_number(poly[k][1], vpath)});
        }
        const auto prov = get_string(item, "provenance", path);
        const auto p = parse_provenance(prov);
        if (!p) fail(path + ".provenance", "expected manual, model or corrected");
        a.provenance = *p;
        if (item.contains("confidence") && !item.at("confidence").is_null()) {
            a.confidence = get_number(item.at("confidence"), path + ".confidence");
        }
        a.author = item.contains("author") ? get_string(item, "author", path) : "";
        a.timestamp = item.contains("timestamp") ? get_string(item, "timestamp", path) : "";
        doc.annotations.push_back(std::move(a));
    }
    return doc;
}

std::vector<std::string> validate_document(const AnnotationDocument& doc) {
    std::vector<std::string> out;
    for (const auto& v : validate_patch_shape(doc.patch)) out.push_back("patch: " + v);
    if (!out.empty()) return out;
    std::set<std::string> ids;
    std::vector<CellClass> classes;
    for (std::size_t i = 0; i < doc.annotations.size(); ++i) {
        const auto& a = doc.annotations[i];
        const auto where = "annotations[" + std::to_string(i) + "]";
        if (a.id.empty()) out.push_back(where + ": empty id");
        if (!ids.insert(a.id).second) out.push_back(where + ": duplicate id '" + a.id + "'");
        try {
            validate_polygon(a.polygon, static_cast<int>(doc.patch.width), static_cast<int>(doc.patch.height));
        } catch (const Error& e) {
            out.push_back(where + ".polygon: " + e.what());
        }
        if (a.provenance == Provenance::Model && !a.confidence) {
            out.push_back(where + ": model provenance requires a confidence");
        }
        if (a.confidence && !(*a.confidence >= 0.0 && *a.confidence <= 1.0)) {
            out.push_back(where + ": confidence outside [0,1]");
        }
        classes.push_back(a.cls);
    }
    try {
        common_family(classes);
    } catch (const Error&) {
        out.push_back("annotations: classes mix nuclear and membrane families");
    }
    return out;
}

void require_valid(const AnnotationDocument& doc) {
    const auto problems = validate_document(doc);
    if (problems.empty()) return;
    std::string msg = problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw Error(ErrorCode::InvalidInput, msg);
}

std::vector<GroundTruthInstance> ground_truth(const AnnotationDocument& doc) {
    require_valid(doc);
    std::vector<GroundTruthInstance> out;
    for (const auto& a : doc.annotations) {
        try {
            out.push_back({a.id, a.cls,
                           rasterize(a.polygon, static_cast<int>(doc.patch.width), static_cast<int>(doc.patch.height))});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyMask) throw;
            throw Error(ErrorCode::InvalidInput, "annotation '" + a.id + "' covers no pixel");
        }
    }
    return out;
}

std::vector<scoring::CountedCell> counted_cells(const AnnotationDocument& doc) {
    std::vector<scoring::CountedCell> out;
    for (const auto& a : doc.annotations) {
        out.push_back({a.cls, a.provenance == Provenance::Model ? a.confidence : std::nullopt});
    }
    return out;
}

std::vector<scoring::CountedCell> counted_cells(const PredictionFile& file) {
    std::vector<scoring::CountedCell> out;
    for (const auto& p : file.instances) out.push_back({p.cls, p.confidence});
    return out;
}

AnnotationDocument presegment_document(const PatchRegion& patch, const std::vector<PredictionInstance>& preds,
                                       const std::string& author, const std::string& timestamp) {
    AnnotationDocument doc;
    doc.patch = patch;
    for (const auto& p : preds) {
        Annotation a;
        a.id = p.id;
        a.cls = p.cls;
        a.polygon = outline_polygon(p.mask);
        a.provenance = Provenance::Model;
        a.confidence = p.confidence;
        a.author = author;
        a.timestamp = timestamp;
        doc.annotations.push_back(std::move(a));
    }
    return doc;
}

json to_json(const eval::PRCurve& curve) {
    json pts = json::array();
    for (const auto& p : curve.points) pts.push_back({{"precision", p.precision}, {"recall", p.recall}, {"confidence", p.confidence}});
    return {{"ground_truth_count", curve.ground_truth_count}, {"points", pts}};
}

namespace {

json row_json(const eval::ReportRow& r) {
    json out = {{"label", r.label},
                {"ground_truth_count", r.ground_truth_count},
                {"prediction_count", r.prediction_count},
                {"map50", r.map50},
                {"map75", r.map75},
                {"map_range", r.map_range}};
    out["class"] = r.cls ? json(std::string(to_string(*r.cls))) : json(nullptr);
    return out;
}

}  // namespace

json to_json(const eval::EvalReport& report) {
    json out;
    out["model"] = report.model;
    out["biomarker"] = report.biomarker ? json(std::string(to_string(*report.biomarker))) : json(nullptr);
    out["tau"] = report.tau;
    out["iou_thresholds"] = report.thresholds;
    out["images"] = report.images;
    out["all"] = row_json(report.all);
    out["classes"] = json::array();
    for (const auto& r : report.classes) out["classes"].push_back(row_json(r));
    out["per_class"] = json::array();
    for (const auto& m : report.metrics) {
        out["per_class"].push_back({{"class", std::string(to_string(m.cls))},
                                    {"thresholds", m.thresholds},
                                    {"ap", m.ap},
                                    {"true_positives", m.true_positives},
                                    {"false_positives", m.false_positives},
                                    {"false_negatives", m.false_negatives}});
    }
    out["curves"] = json::array();
    out["matches"] = json::array();
    for (const auto& c : report.curves) {
        out["curves"].push_back({{"class", std::string(to_string(c.cls))},
                                 {"iou50", to_json(c.iou50)},
                                 {"iou75", to_json(c.iou75)},
                                 {"oth", to_json(c.oth)}});
        json outcomes = json::array();
        for (const auto& o : c.match50.outcomes) {
            outcomes.push_back({{"image", o.image},
                                {"prediction_id", o.prediction_id},
                                {"confidence", o.confidence},
                                {"label", o.label == eval::MatchLabel::TruePositive ? "TP" : "FP"},
                                {"ground_truth_id", o.ground_truth_id ? json(*o.ground_truth_id) : json(nullptr)},
                                {"iou", o.iou}});
        }
        out["matches"].push_back({{"class", std::string(to_string(c.cls))},
                                  {"iou_threshold", 0.5},
                                  {"false_negatives", c.match50.unmatched_ground_truth},
                                  {"outcomes", outcomes}});
    }
    return out;
}

json to_json(const scoring::BiomarkerScore& score) {
    json out = {{"stain_kind", std::string(to_string(score.stain))},
                {"tau", score.tau},
                {"provenance", score.provenance},
                {"cells_before_filter", score.cells_before_filter}};
    if (score.nuclear) {
        const auto& n = *score.nuclear;
        out["nuclear"] = {{"positive", n.positive}, {"negative", n.negative}, {"percent_positive", n.percent_positive}};
    }
    if (score.her2) {
        const auto& h = *score.her2;
        json counts = json::object(), pct = json::object();
        for (std::size_t i = 0; i < 4; ++i) {
            const std::string name(to_string(kMembraneClasses[i]));
            counts[name] = h.counts[i];
            pct[name] = h.percentages[i];
        }
        out["her2"] = {{"counts", counts},
                       {"percentages", pct},
                       {"score", std::string(scoring::to_string(h.score))},
                       {"assessment", std::string(scoring::to_string(h.assessment))},
                       {"near_boundary", h.near_boundary}};
    }
    return out;
}

json to_json(const scoring::ThresholdSweep& sweep) {
    return {{"grid", sweep.grid}, {"map50", sweep.map50}, {"best_tau", sweep.best_tau}, {"best_map50", sweep.best_map}};
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidInput, std::string("malformed JSON: ") + e.what());
    }
}

json read_json(const std::filesystem::path& path) { return parse_json(read_text(path)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

AnyDocument any_document_from_json(const json& j) {
    AnyDocument out;
    if (j.is_object() && j.contains("instances")) {
        out.predictions = prediction_file_from_json(j);
    } else if (j.is_object() && j.contains("annotations")) {
        out.annotations = annotation_document_from_json(j);
    } else {
        fail("$", "neither an annotation document nor a prediction file");
    }
    return out;
}

}  // namespace ihcq::docs
