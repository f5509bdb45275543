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

#include "ihcq/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>
#include <regex>

#include "ihcq/pipeline.hpp"

namespace ihcq::service {

using docs::json;

ApiError map_error(const Error& error) {
    switch (error.code()) {
        case ErrorCode::NotFound: return {404, "not_found", error.what()};
        case ErrorCode::Conflict: return {409, "conflict", error.what()};
        case ErrorCode::EmptyDataset:
        case ErrorCode::NoCells: return {422, "empty_dataset", error.what()};
        case ErrorCode::InvalidInput:
        case ErrorCode::MalformedMask:
        case ErrorCode::EmptyMask:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::UndefinedIoU: return {422, "invalid_input", error.what()};
        case ErrorCode::Io:
        case ErrorCode::Internal: return {500, "internal", error.what()};
    }
    return {500, "internal", error.what()};
}

Response error_response(const ApiError& error) {
    Response r;
    r.status = error.status;
    r.body = docs::dump(json{{"error", {{"code", error.code}, {"message", error.message}}}});
    return r;
}

namespace {

Response json_response(const json& j, int status = 200) {
    Response r;
    r.status = status;
    r.body = docs::dump(j);
    return r;
}

// Unparsable bodies are a 400; well-formed JSON that breaks the schema is
// reported by the parsers as a 422.
struct BadRequest {
    std::string message;
};

json parse_body(const Request& req, bool allow_empty = false) {
    if (req.body.empty() || req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
        if (allow_empty) return json::object();
        throw BadRequest{"request body is empty"};
    }
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw BadRequest{std::string("malformed JSON: ") + e.what()};
    }
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorCode::NotFound, "bad number '" + s + "'");
    return v;
}

std::optional<double> query_double(const Request& req, const char* name) {
    auto it = req.query.find(name);
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(it->second, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != it->second.size()) {
        throw Error(ErrorCode::InvalidInput, std::string("query parameter ") + name + " is not a number");
    }
    return v;
}

std::string get_string_field(const json& body, const char* key) {
    const auto it = body.find(key);
    if (it == body.end() || !it->is_string()) throw Error(ErrorCode::InvalidInput, std::string(key) + ": expected a string");
    return it->get<std::string>();
}

std::vector<std::string> get_string_list(const json& body, const char* key) {
    const auto it = body.find(key);
    if (it == body.end()) return {};
    if (it->is_string()) return {it->get<std::string>()};
    if (!it->is_array()) throw Error(ErrorCode::InvalidInput, std::string(key) + ": expected a list of strings");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw Error(ErrorCode::InvalidInput, std::string(key) + ": expected a list of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<SlideRecord> maybe_slide(const store::Store& st, const std::string& id) {
    try {
        return st.slide(id);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) return std::nullopt;
        throw;
    }
}

std::optional<docs::AnnotationDocument> maybe_latest(const store::Store& st, const std::string& key) {
    if (st.versions(key).empty()) return std::nullopt;
    return st.load_document(key);
}

json slide_json(const store::Store& st, const SlideRecord& s) {
    auto j = docs::to_json(s);
    json levels = json::array();
    for (const auto& l : st.pyramid(s.id).levels) {
        levels.push_back({{"width", l.width}, {"height", l.height}, {"tiles_x", l.tiles_x}, {"tiles_y", l.tiles_y}});
    }
    j["levels"] = levels;
    j["tile_size"] = store::kTileSize;
    return j;
}

struct Route {
    std::regex pattern;
    std::vector<std::string> methods;
};

enum RouteId { Slides, Slide, Tile, Annotations, Presegment, Score, Predictions, PredictionItem, Evaluate, Export };

const std::vector<Route>& routes() {
    static const std::vector<Route> r = {
        {std::regex("^/api/slides$"), {"GET"}},
        {std::regex("^/api/slides/([^/]+)$"), {"GET"}},
        {std::regex("^/api/slides/([^/]+)/tiles/([0-9]+)/([0-9]+)_([0-9]+)(?:\\.(?:png|jpg))?$"), {"GET"}},
        {std::regex("^/api/patches/([^/]+)/annotations$"), {"GET", "PUT"}},
        {std::regex("^/api/patches/([^/]+)/presegment$"), {"POST"}},
        {std::regex("^/api/patches/([^/]+)/score$"), {"POST"}},
        {std::regex("^/api/predictions$"), {"POST"}},
        {std::regex("^/api/predictions/([^/]+)$"), {"GET"}},
        {std::regex("^/api/evaluate$"), {"POST"}},
        {std::regex("^/api/export$"), {"GET"}},
    };
    return r;
}

}  // namespace

Service::Service(store::Store& store, baseline::BaselineParams params) : store_(store), params_(std::move(params)) {
    params_.validate();
}

Response Service::handle(const Request& req) const {
    try {
        std::smatch m;
        int id = -1;
        for (std::size_t i = 0; i < routes().size(); ++i) {
            if (std::regex_match(req.path, m, routes()[i].pattern)) {
                id = static_cast<int>(i);
                break;
            }
        }
        if (id < 0) return error_response({404, "not_found", "no route " + req.path});
        const auto& methods = routes()[static_cast<std::size_t>(id)].methods;
        if (std::find(methods.begin(), methods.end(), req.method) == methods.end()) {
            auto r = error_response({405, "invalid_input", req.method + " not allowed on " + req.path});
            std::string allow;
            for (const auto& x : methods) allow += (allow.empty() ? "" : ", ") + x;
            r.headers.emplace_back("Allow", allow);
            return r;
        }

        switch (id) {
            case Slides: {
                json list = json::array();
                for (const auto& s : store_.list_slides()) list.push_back(slide_json(store_, s));
                return json_response({{"slides", list}});
            }
            case Slide: return json_response(slide_json(store_, store_.slide(m[1])));
            case Tile: {
                const int level = parse_int(m[2]);
                const auto bytes = store_.get_tile(m[1], level, parse_int(m[3]), parse_int(m[4]));
                Response r;
                r.content_type = store::Store::tile_content_type(level);
                r.body.assign(bytes.begin(), bytes.end());
                char etag[24];
                std::snprintf(etag, sizeof(etag), "\"%016llx\"", static_cast<unsigned long long>(store::fnv1a(r.body)));
                r.headers.emplace_back("Cache-Control", "public, max-age=31536000, immutable");
                r.headers.emplace_back("ETag", etag);
                return r;
            }
            case Annotations: {
                const std::string key = m[1];
                if (req.method == "GET") {
                    std::optional<std::int64_t> version;
                    if (auto v = query_double(req, "version")) version = static_cast<std::int64_t>(*v);
                    return json_response(docs::to_json(store_.load_document(key, version)));
                }
                const auto doc = docs::annotation_document_from_json(parse_body(req));
                return json_response(docs::to_json(store_.save_document(key, doc)));
            }
            case Presegment: {
                const std::string key = m[1];
                const auto body = parse_body(req, true);
                const auto latest = maybe_latest(store_, key);
                std::vector<PredictionInstance> preds;
                std::optional<PatchRegion> patch;
                std::string author;
                if (body.contains("patch")) patch = docs::patch_from_json(body.at("patch"));
                if (body.contains("prediction_id")) {
                    const auto file = store_.load_predictions(get_string_field(body, "prediction_id"));
                    if (patch && !(*patch == file.patch)) {
                        throw Error(ErrorCode::InvalidInput, "prediction file belongs to another patch");
                    }
                    patch = file.patch;
                    preds = file.instances;
                    author = file.model;
                } else {
                    const auto predictor = body.value("predictor", std::string("baseline"));
                    if (predictor != "baseline") {
                        throw Error(ErrorCode::InvalidInput, "predictor must be 'baseline' or use prediction_id");
                    }
                    if (!patch && latest) patch = latest->patch;
                    if (!patch) throw Error(ErrorCode::InvalidInput, "patch is required for a new patch key");
                    const auto params = body.contains("params") ? baseline::params_from_json(body.at("params").dump()) : params_;
                    preds = baseline::segment_nuclei(store_.read_region(*patch), params);
                    author = "baseline";
                }
                auto doc = docs::presegment_document(*patch, preds, author, docs::utc_timestamp());
                // Base version for the client's eventual save.
                doc.version = latest ? latest->version : 0;
                return json_response(docs::to_json(doc));
            }
            case Score: {
                const std::string key = m[1];
                const auto body = parse_body(req, true);
                docs::AnyDocument doc;
                if (body.contains("prediction_id")) {
                    doc.predictions = store_.load_predictions(get_string_field(body, "prediction_id"));
                } else {
                    doc.annotations = store_.load_document(key);
                }
                const auto& patch = doc.predictions ? doc.predictions->patch : doc.annotations->patch;
                std::optional<StainKind> stain;
                if (auto s = maybe_slide(store_, patch.slide_id)) stain = s->stain;
                const auto score = pipeline::score(doc, query_double(req, "tau"), stain);
                auto j = docs::to_json(score);
                j["patch_key"] = key;
                j["report"] = scoring::render_text(score);
                return json_response(j);
            }
            case Predictions: {
                const auto file = docs::prediction_file_from_json(parse_body(req));
                const auto pid = store_.save_predictions(file);
                return json_response({{"id", pid}, {"model", file.model}, {"instances", file.instances.size()}}, 201);
            }
            case PredictionItem: return json_response(docs::to_json(store_.load_predictions(m[1])));
            case Evaluate: {
                const auto body = parse_body(req);
                std::vector<docs::PredictionFile> preds;
                for (const auto& pid : get_string_list(body, "predictions")) preds.push_back(store_.load_predictions(pid));
                std::vector<docs::AnnotationDocument> gts;
                for (const auto& key : get_string_list(body, "ground_truth")) gts.push_back(store_.load_document(key));
                if (preds.empty()) throw Error(ErrorCode::InvalidInput, "predictions: at least one prediction id");
                if (gts.empty()) throw Error(ErrorCode::InvalidInput, "ground_truth: at least one patch key");
                EvaluationConfig config;
                if (body.contains("config")) {
                    const auto& c = body.at("config");
                    try {
                        if (c.contains("iou_thresholds")) config.iou_thresholds = c.at("iou_thresholds").get<std::vector<double>>();
                        if (c.contains("tau")) config.confidence_filter = c.at("tau").get<double>();
                    } catch (const json::exception& e) {
                        throw Error(ErrorCode::InvalidInput, std::string("config: ") + e.what());
                    }
                }
                std::optional<Biomarker> biomarker;
                if (auto s = maybe_slide(store_, gts.front().patch.slide_id)) biomarker = s->biomarker;
                const auto report = pipeline::evaluate(preds, gts, config, biomarker);
                auto j = docs::to_json(report);
                j["table"] = eval::render_table(report);
                return json_response(j);
            }
            case Export: {
                store::SplitSpec split;
                if (auto f = query_double(req, "test_fraction")) split.test_fraction = *f;
                if (auto s = query_double(req, "seed")) split.seed = static_cast<std::uint64_t>(*s);
                const auto manifest = store_.export_dataset(split);
                auto j = store::to_json(manifest);
                j["table"] = store::render_manifest(manifest);
                return json_response(j);
            }
        }
        return error_response({500, "internal", "unhandled route"});
    } catch (const BadRequest& e) {
        return error_response({400, "invalid_input", e.message});
    } catch (const Error& e) {
        return error_response(map_error(e));
    } catch (const std::exception& e) {
        return error_response({500, "internal", e.what()});
    }
}

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>()) {
    auto forward = [&service](const httplib::Request& hreq, httplib::Response& hres) {
        Request req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
        req.body = hreq.body;
        const auto res = service.handle(req);
        hres.status = res.status;
        for (const auto& [k, v] : res.headers) hres.set_header(k, v);
        hres.set_content(res.body, res.content_type);
    };
    auto& s = impl_->server;
    s.Get("/api/.*", forward);
    s.Put("/api/.*", forward);
    s.Post("/api/.*", forward);
    s.Delete("/api/.*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
    const int p = bind(host, port);
    impl_->thread = std::thread([this] { listen(); });
    impl_->server.wait_until_ready();
    return p;
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ihcq::service
