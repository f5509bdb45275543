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

#include "ihcq/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

#include "ihcq/baseline.hpp"
#include "ihcq/error.hpp"
#include "ihcq/fixtures.hpp"
#include "ihcq/pipeline.hpp"
#include "ihcq/service.hpp"
#include "ihcq/store.hpp"

namespace ihcq::cli {

namespace {

struct UsageError {
    std::string message;
};

std::string store_root(const std::string& flag) {
    if (const char* env = std::getenv("IHCQ_STORE"); env && *env) return env;
    return flag;
}

std::vector<docs::PredictionFile> load_predictions(const std::vector<std::string>& paths) {
    std::vector<docs::PredictionFile> out;
    for (const auto& p : paths) out.push_back(docs::prediction_file_from_json(docs::read_json(p)));
    return out;
}

std::vector<docs::AnnotationDocument> load_ground_truth(const std::vector<std::string>& paths) {
    std::vector<docs::AnnotationDocument> out;
    for (const auto& p : paths) out.push_back(docs::annotation_document_from_json(docs::read_json(p)));
    return out;
}

std::optional<Biomarker> biomarker_flag(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto b = parse_biomarker(text);
    if (!b) throw UsageError{"unknown biomarker '" + text + "'"};
    return b;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"IHC quantification and evaluation workbench", "ihcq"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every command");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Build a tile pyramid for an image and register the slide");
    std::string ingest_image, slide_id, biomarker_text, root = "ihcq-store";
    double resolution = 0.25;
    ingest->add_option("image", ingest_image, "PNG or JPEG image")->required();
    ingest->add_option("--slide-id", slide_id, "Slide identifier")->required();
    ingest->add_option("--biomarker", biomarker_text, "Ki-67, ER, PR or HER2")->required();
    ingest->add_option("--resolution", resolution, "Micrometers per pixel")->default_val(0.25);
    ingest->add_option("--root", root, "Store directory (IHCQ_STORE overrides)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Instance-level mAP of predictions against ground truth");
    std::vector<std::string> pred_files, gt_files;
    std::vector<double> ious;
    std::optional<double> tau;
    std::string out_path, curves_path, eval_biomarker;
    evaluate->add_option("--pred", pred_files, "Prediction file(s)")->required();
    evaluate->add_option("--gt", gt_files, "Ground-truth annotation document(s)")->required();
    evaluate->add_option("--iou", ious, "IoU thresholds (default 0.50:0.05:0.95)");
    evaluate->add_option("--tau", tau, "Confidence filter applied before ranking (default 0)");
    evaluate->add_option("--out", out_path, "Write the JSON report here");
    evaluate->add_option("--curves", curves_path, "Write PR points as CSV here");
    evaluate->add_option("--biomarker", eval_biomarker, "Prefix row labels with this biomarker");

    // score
    auto* score = app.add_subcommand("score", "Percent positivity or HER2 score of a document");
    std::string score_file, score_out;
    std::optional<double> score_tau;
    score->add_option("--annotations", score_file, "Annotation document or prediction file")->required();
    score->add_option("--tau", score_tau, "Confidence threshold (default: per model, 0 for annotations)");
    score->add_option("--out", score_out, "Write the JSON score here");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "mAP@0.50 as a function of the confidence threshold");
    std::vector<std::string> sweep_pred, sweep_gt;
    std::string grid_text = "0:1:0.05", sweep_out;
    sweep->add_option("--pred", sweep_pred, "Prediction file(s)")->required();
    sweep->add_option("--gt", sweep_gt, "Ground-truth document(s)")->required();
    sweep->add_option("--grid", grid_text, "start:stop:step")->default_val("0:1:0.05");
    sweep->add_option("--out", sweep_out, "Write tau,map50 CSV here");

    // gen-fixtures
    auto* gen = app.add_subcommand("gen-fixtures", "Write a synthetic patch with known truth");
    std::string kind, out_dir;
    std::uint64_t seed = 0;
    gen->add_option("--kind", kind, "disks, fig5 or spurious")->required()->check(CLI::IsMember({"disks", "fig5", "spurious"}));
    gen->add_option("--seed", seed, "Random seed")->default_val(0);
    gen->add_option("--out-dir", out_dir, "Output directory")->required();
    int negatives = 5, positives = 3;
    gen->add_option("--negatives", negatives, "disks: immunonegative cell count")->default_val(5)->check(CLI::Range(0, 100));
    gen->add_option("--positives", positives, "disks: immunopositive cell count")->default_val(3)->check(CLI::Range(0, 100));

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP API over a store");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--root", root, "Store directory (IHCQ_STORE overrides)");
    serve->add_option("--port", port, "TCP port (0 picks one)")->default_val(8080);
    serve->add_option("--host", host, "Bind address")->default_val("127.0.0.1");

    // presegment
    auto* preseg = app.add_subcommand("presegment", "Run the baseline segmenter on a patch image");
    std::string preseg_image, preseg_out, preseg_params, preseg_slide;
    preseg->add_option("image", preseg_image, "Patch image")->required();
    preseg->add_option("--out", preseg_out, "Prediction file to write")->required();
    preseg->add_option("--params", preseg_params, "Baseline parameter JSON");
    preseg->add_option("--slide-id", preseg_slide, "Slide id recorded in the patch")->default_val("patch");

    // compare
    auto* compare = app.add_subcommand("compare", "One summary row per model");
    std::vector<std::string> cmp_pred, cmp_gt;
    compare->add_option("--pred", cmp_pred, "Prediction files; grouped by their model name")->required();
    compare->add_option("--gt", cmp_gt, "Ground-truth document(s)")->required();

    // export
    auto* exp = app.add_subcommand("export", "Train/test manifest of the stored annotations");
    double test_fraction = 0.2;
    std::uint64_t split_seed = 0;
    std::string export_out;
    exp->add_option("--root", root, "Store directory (IHCQ_STORE overrides)");
    exp->add_option("--test-fraction", test_fraction, "Share of patches in the test split")->default_val(0.2);
    exp->add_option("--seed", split_seed, "Split seed")->default_val(0);
    exp->add_option("--out", export_out, "Write the JSON manifest here");

    std::vector<const char*> argv{"ihcq"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) {
            store::Store st(store_root(root));
            SlideRecord meta;
            meta.id = slide_id;
            const auto b = biomarker_flag(biomarker_text);
            meta.biomarker = *b;
            meta.stain = *b == Biomarker::HER2 ? StainKind::Membrane : StainKind::Nuclear;
            meta.resolution_um = resolution;
            const auto r = st.ingest_image(ingest_image, meta);
            out << r.pyramid.levels.size() << " levels, " << r.pyramid.tile_count() << " tiles\n";
            for (std::size_t i = 0; i < r.pyramid.levels.size(); ++i) {
                const auto& l = r.pyramid.levels[i];
                out << "level " << i << ": " << l.width << "x" << l.height << " (" << l.tiles_x << "x" << l.tiles_y
                    << " tiles)\n";
            }
        } else if (*evaluate) {
            EvaluationConfig config;
            if (!ious.empty()) config.iou_thresholds = ious;
            if (tau) config.confidence_filter = *tau;
            try {
                config.validate();
            } catch (const Error& e) {
                throw UsageError{e.what()};
            }
            const auto report = pipeline::evaluate(load_predictions(pred_files), load_ground_truth(gt_files), config,
                                                   biomarker_flag(eval_biomarker));
            out << eval::render_table(report);
            if (!out_path.empty()) docs::write_text(out_path, docs::dump(docs::to_json(report)));
            if (!curves_path.empty()) docs::write_text(curves_path, eval::render_curves_csv(report));
        } else if (*score) {
            const auto doc = docs::any_document_from_json(docs::read_json(score_file));
            if (score_tau && !(*score_tau >= 0.0 && *score_tau <= 1.0)) throw UsageError{"--tau must lie in [0,1]"};
            const auto s = pipeline::score(doc, score_tau);
            out << scoring::render_text(s);
            if (!score_out.empty()) docs::write_text(score_out, docs::dump(docs::to_json(s)));
        } else if (*sweep) {
            std::vector<double> grid;
            try {
                grid = scoring::parse_grid(grid_text);
            } catch (const Error& e) {
                throw UsageError{e.what()};
            }
            const eval::Evaluator ev(pipeline::pair_images(load_predictions(sweep_pred), load_ground_truth(sweep_gt)));
            const auto result = scoring::sweep_threshold(ev, grid);
            std::ostringstream csv;
            csv << "tau,map50\n";
            out << "tau_th   mAP@0.50\n";
            for (std::size_t i = 0; i < result.grid.size(); ++i) {
                csv << fixed(result.grid[i], 4) << "," << fixed(result.map50[i], 6) << "\n";
                out << fixed(result.grid[i], 2) << "     " << fixed(result.map50[i], 4) << "\n";
            }
            out << "argmax tau_th = " << fixed(result.best_tau, 2) << " (mAP@0.50 = " << fixed(result.best_map, 4)
                << ")\n";
            if (!sweep_out.empty()) docs::write_text(sweep_out, csv.str());
        } else if (*gen) {
            fixtures::Fixture f;
            if (kind == "disks") {
                f = fixtures::disks(seed, negatives, positives);
            } else if (kind == "fig5") {
                f = fixtures::fig5();
            } else {
                f = fixtures::spurious(seed);
            }
            for (const auto& p : fixtures::write(f, out_dir)) out << p.string() << "\n";
        } else if (*serve) {
            store::Store st(store_root(root));
            service::Service svc(st);
            service::HttpServer server(svc);
            const int bound = server.bind(host, port);
            out << "listening on http://" << host << ":" << bound << std::endl;
            server.listen();
        } else if (*preseg) {
            const auto image = read_image(preseg_image);
            const auto params = preseg_params.empty() ? baseline::BaselineParams{} : baseline::load_params(preseg_params);
            docs::PredictionFile file;
            file.patch = PatchRegion{preseg_slide, 0, 0, image.width, image.height};
            file.model = "baseline";
            file.instances = baseline::segment_nuclei(image, params);
            docs::write_text(preseg_out, docs::dump(docs::to_json(file)));
            std::size_t pos = 0;
            for (const auto& p : file.instances) pos += p.cls == CellClass::Immunopositive;
            out << file.instances.size() << " instances (" << pos << " immunopositive, " << file.instances.size() - pos
                << " immunonegative)\n";
        } else if (*compare) {
            std::map<std::string, std::vector<docs::PredictionFile>> by_model;
            std::vector<std::string> order;
            for (auto& f : load_predictions(cmp_pred)) {
                if (!by_model.count(f.model)) order.push_back(f.model);
                by_model[f.model].push_back(std::move(f));
            }
            const auto gts = load_ground_truth(cmp_gt);
            std::vector<eval::EvalReport> reports;
            for (const auto& m : order) reports.push_back(pipeline::evaluate(by_model[m], gts, EvaluationConfig{}));
            out << eval::render_comparison(reports);
        } else if (*exp) {
            store::Store st(store_root(root));
            store::SplitSpec split;
            split.test_fraction = test_fraction;
            split.seed = split_seed;
            const auto m = st.export_dataset(split);
            out << store::render_manifest(m);
            if (!export_out.empty()) docs::write_text(export_out, docs::dump(store::to_json(m)));
        }
    } catch (const UsageError& e) {
        err << "ihcq: usage: " << e.message << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "ihcq: " << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "ihcq: io: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace ihcq::cli
