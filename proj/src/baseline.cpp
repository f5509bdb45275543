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

#include "ihcq/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ihcq/error.hpp"
#include "ihcq/kernels.hpp"
#include "ihcq/maskops.hpp"

namespace ihcq::baseline {

namespace {

std::array<double, 3> normalized(const std::array<double, 3>& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::InvalidInput, "stain basis vector is zero");
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

void BaselineParams::validate() const {
    if (!(hematoxylin_threshold > 0.0) || !(dab_threshold > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "OD thresholds must be positive");
    }
    if (!(min_area > 0 && min_area < max_area)) {
        throw Error(ErrorCode::InvalidInput, "need 0 < min_area < max_area");
    }
    if (!(confidence_od_scale > 0.0)) throw Error(ErrorCode::InvalidInput, "confidence_od_scale must be positive");
    unmixing_matrix(basis);
}

BaselineParams params_from_json(const std::string& text) {
    BaselineParams p;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "baseline config must be a JSON object");
        p.hematoxylin_threshold = j.value("hematoxylin_threshold", p.hematoxylin_threshold);
        p.dab_threshold = j.value("dab_threshold", p.dab_threshold);
        p.min_area = j.value("min_area", p.min_area);
        p.max_area = j.value("max_area", p.max_area);
        p.confidence_od_scale = j.value("confidence_od_scale", p.confidence_od_scale);
        if (j.contains("basis")) {
            const auto& b = j.at("basis");
            p.basis.hematoxylin = b.value("hematoxylin", p.basis.hematoxylin);
            p.basis.dab = b.value("dab", p.basis.dab);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("baseline config: ") + e.what());
    }
    p.validate();
    return p;
}

BaselineParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return params_from_json(ss.str());
}

const std::array<float, 256>& od_lut() {
    static const auto lut = [] {
        std::array<float, 256> t{};
        for (int v = 0; v < 256; ++v) t[static_cast<std::size_t>(v)] = static_cast<float>(-std::log((v + 1) / 256.0));
        return t;
    }();
    return lut;
}

std::array<float, 6> unmixing_matrix(const StainBasis& basis) {
    const auto h = normalized(basis.hematoxylin);
    const auto d = normalized(basis.dab);
    // pinv(M) = (M^T M)^-1 M^T with M = [h d] (3x2).
    const double a = h[0] * h[0] + h[1] * h[1] + h[2] * h[2];
    const double b = h[0] * d[0] + h[1] * d[1] + h[2] * d[2];
    const double c = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    const double det = a * c - b * b;
    if (!(std::abs(det) > 1e-9)) throw Error(ErrorCode::InvalidInput, "stain basis vectors are parallel");
    std::array<float, 6> u{};
    for (int k = 0; k < 3; ++k) {
        u[static_cast<std::size_t>(k)] = static_cast<float>((c * h[static_cast<std::size_t>(k)] - b * d[static_cast<std::size_t>(k)]) / det);
        u[static_cast<std::size_t>(3 + k)] = static_cast<float>((a * d[static_cast<std::size_t>(k)] - b * h[static_cast<std::size_t>(k)]) / det);
    }
    return u;
}

StainMaps separate_stains(const RgbImage& image, const StainBasis& basis) {
    StainMaps maps;
    maps.width = image.width;
    maps.height = image.height;
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    maps.hematoxylin.resize(n);
    maps.dab.resize(n);
    const auto unmix = unmixing_matrix(basis);
    kernels::active().od_project(image.pixels.data(), n, od_lut().data(), unmix.data(), maps.hematoxylin.data(),
                                 maps.dab.data());
    return maps;
}

std::vector<PredictionInstance> segment_nuclei(const RgbImage& image, const BaselineParams& params) {
    params.validate();
    const auto maps = separate_stains(image, params.basis);
    const int w = image.width, h = image.height;
    Bitmap fg(w, h);
    for (std::size_t i = 0; i < fg.bits.size(); ++i) {
        fg.bits[i] = maps.hematoxylin[i] > params.hematoxylin_threshold || maps.dab[i] > params.dab_threshold;
    }
    const auto labels = label_components(fg);

    struct Stats {
        std::size_t area = 0;
        double h_sum = 0.0;
        double d_sum = 0.0;
    };
    std::vector<Stats> stats(static_cast<std::size_t>(labels.count) + 1);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const auto l = static_cast<std::size_t>(labels.labels[i]);
        if (l == 0) continue;
        ++stats[l].area;
        stats[l].h_sum += maps.hematoxylin[i];
        stats[l].d_sum += maps.dab[i];
    }

    std::vector<int> kept_index(stats.size(), -1);
    std::vector<PredictionInstance> out;
    for (std::size_t l = 1; l < stats.size(); ++l) {
        const auto& s = stats[l];
        if (s.area < params.min_area || s.area > params.max_area) continue;
        PredictionInstance p;
        char id[16];
        std::snprintf(id, sizeof(id), "b%04zu", out.size());
        p.id = id;
        const double mh = s.h_sum / static_cast<double>(s.area);
        const double md = s.d_sum / static_cast<double>(s.area);
        p.cls = md > mh ? CellClass::Immunopositive : CellClass::Immunonegative;
        p.confidence = std::clamp(std::max(mh, md) / params.confidence_od_scale, 0.0, 1.0);
        kept_index[l] = static_cast<int>(out.size());
        out.push_back(std::move(p));
    }

    // Run-length encode every kept component in one raster pass.
    struct Encoder {
        std::vector<std::uint32_t> runs;
        std::size_t end = 0;  // one past the last foreground pixel
    };
    std::vector<Encoder> enc(out.size());
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const int k = kept_index[static_cast<std::size_t>(labels.labels[i])];
        if (k < 0) continue;
        auto& e = enc[static_cast<std::size_t>(k)];
        if (!e.runs.empty() && e.end == i) {
            ++e.runs.back();
        } else {
            e.runs.push_back(static_cast<std::uint32_t>(i - e.end));
            e.runs.push_back(1);
        }
        e.end = i + 1;
    }
    const std::size_t total = labels.labels.size();
    for (std::size_t k = 0; k < out.size(); ++k) {
        auto& e = enc[k];
        if (e.end < total) e.runs.push_back(static_cast<std::uint32_t>(total - e.end));
        out[k].mask = BinaryMask::from_runs(w, h, e.runs);
    }
    return out;
}

}  // namespace ihcq::baseline
