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

#include "ihcq/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ihcq/baseline.hpp"
#include "ihcq/error.hpp"

namespace ihcq::fixtures {

namespace {

constexpr const char* kTimestamp = "1970-01-01T00:00:00Z";

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    // Modulo bias is irrelevant here; portability is what matters.
    std::uint64_t below(std::uint64_t n) { return gen() % n; }
};

std::uint8_t stain_value(double od) {
    const double v = std::round(256.0 * std::exp(-od)) - 1.0;
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

void paint(RgbImage& image, const BinaryMask& mask, const std::array<double, 3>& basis, double strength, Rng& rng) {
    const auto bitmap = mask.to_bitmap();
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            if (!bitmap.at(r, c)) continue;
            auto* px = image.at(r, c);
            for (int k = 0; k < 3; ++k) {
                const double jitter = static_cast<double>(rng.below(5)) / 100.0 - 0.02;
                px[k] = stain_value(strength * basis[static_cast<std::size_t>(k)] + jitter);
            }
        }
    }
}

RgbImage background(Rng& rng) {
    RgbImage image(kPatchSize, kPatchSize);
    for (auto& v : image.pixels) v = static_cast<std::uint8_t>(255 - rng.below(4));
    return image;
}

struct Placed {
    double x, y, r;
};

std::vector<Placed> place(Rng& rng, int count, double r, double gap, std::vector<Placed> existing) {
    std::vector<Placed> out;
    const double margin = r + 4.0;
    const auto span = static_cast<std::uint64_t>(kPatchSize - 2 * margin);
    for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
        if (attempt > 100000) throw Error(ErrorCode::Internal, "fixture placement did not converge");
        const Placed p{margin + static_cast<double>(rng.below(span)) + 0.5, margin + static_cast<double>(rng.below(span)) + 0.5, r};
        bool ok = true;
        for (const auto* list : {&existing, &out}) {
            for (const auto& q : *list) {
                const double d = std::hypot(p.x - q.x, p.y - q.y);
                if (d < p.r + q.r + gap) ok = false;
            }
        }
        if (ok) out.push_back(p);
    }
    return out;
}

SlideRecord patch_slide(const std::string& id) {
    SlideRecord s;
    s.id = id;
    s.width = kPatchSize;
    s.height = kPatchSize;
    s.stain = StainKind::Nuclear;
    s.biomarker = Biomarker::Ki67;
    return s;
}

PatchRegion whole_patch(const std::string& slide_id) {
    PatchRegion p;
    p.slide_id = slide_id;
    return p;
}

docs::Annotation manual(std::string id, CellClass cls, Polygon poly) {
    docs::Annotation a;
    a.id = std::move(id);
    a.cls = cls;
    a.polygon = std::move(poly);
    a.provenance = docs::Provenance::Manual;
    a.author = "fixture";
    a.timestamp = kTimestamp;
    return a;
}

Polygon rect(double x0, double y0, double x1, double y1) { return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}; }

std::string indexed(const char* prefix, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
    return buf;
}

}  // namespace

Polygon disk_polygon(double cx, double cy, double r) {
    Polygon p;
    for (int k = 0; k < 32; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 32.0;
        p.vertices.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
    }
    return p;
}

Fixture disks(std::uint64_t seed, int negatives, int positives) {
    if (negatives < 0 || positives < 0 || negatives + positives == 0) {
        throw Error(ErrorCode::InvalidInput, "disk fixture needs at least one disk");
    }
    Rng rng(seed);
    Fixture f;
    f.slide = patch_slide("disks-" + std::to_string(seed));
    f.ground_truth.patch = whole_patch(f.slide.id);
    f.image = background(rng);
    const baseline::StainBasis basis;

    const auto spots = place(rng, negatives + positives, kDiskRadius, 6.0, {});
    // Interleave the classes by a seeded shuffle of the labels.
    std::vector<CellClass> classes(static_cast<std::size_t>(negatives), CellClass::Immunonegative);
    classes.insert(classes.end(), static_cast<std::size_t>(positives), CellClass::Immunopositive);
    for (std::size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[rng.below(i)]);

    for (std::size_t i = 0; i < spots.size(); ++i) {
        auto poly = disk_polygon(spots[i].x, spots[i].y, spots[i].r);
        const auto mask = rasterize(poly, kPatchSize, kPatchSize);
        const double strength = 0.7 + static_cast<double>(rng.below(61)) / 100.0;
        paint(f.image, mask, classes[i] == CellClass::Immunopositive ? basis.dab : basis.hematoxylin, strength, rng);
        f.ground_truth.annotations.push_back(manual(indexed("n", i), classes[i], std::move(poly)));
    }
    return f;
}

Fixture fig5() {
    Rng rng(5);
    Fixture f;
    f.slide = patch_slide("fig5");
    f.ground_truth.patch = whole_patch(f.slide.id);
    f.image = background(rng);
    const baseline::StainBasis basis;
    const std::pair<const char*, Polygon> gts[] = {
        {"GTA", rect(20, 20, 60, 60)}, {"GTB", rect(150, 20, 190, 60)}, {"GTC", rect(260, 20, 300, 60)}};
    for (const auto& [id, poly] : gts) {
        paint(f.image, rasterize(poly, kPatchSize, kPatchSize), basis.dab, 0.9, rng);
        f.ground_truth.annotations.push_back(manual(id, CellClass::Immunopositive, poly));
    }
    docs::PredictionFile pf;
    pf.patch = f.ground_truth.patch;
    pf.model = "fig5";
    const struct {
        const char* id;
        double conf;
        Polygon poly;
    } preds[] = {
        {"P1", 0.55, rect(100, 200, 140, 240)},
        {"P2", 0.90, rect(24, 20, 64, 60)},
        {"P3", 0.70, rect(156, 20, 196, 60)},
        {"P4", 0.60, rect(175, 20, 215, 60)},
    };
    for (const auto& p : preds) {
        pf.instances.push_back({p.id, CellClass::Immunopositive, p.conf, rasterize(p.poly, kPatchSize, kPatchSize)});
    }
    f.predictions = std::move(pf);
    return f;
}

Fixture spurious(std::uint64_t seed) {
    Fixture f = disks(seed);
    f.slide.id = "spurious-" + std::to_string(seed);
    f.ground_truth.patch.slide_id = f.slide.id;
    Rng rng(seed ^ 0x5a5a5a5aULL);
    docs::PredictionFile pf;
    pf.patch = f.ground_truth.patch;
    pf.model = "spurious";
    std::vector<Placed> taken;
    for (std::size_t i = 0; i < f.ground_truth.annotations.size(); ++i) {
        const auto& a = f.ground_truth.annotations[i];
        const double conf = 0.2 + static_cast<double>(rng.below(800)) / 1000.0;
        pf.instances.push_back({indexed("t", i), a.cls, conf, rasterize(a.polygon, kPatchSize, kPatchSize)});
        double cx = 0, cy = 0;
        for (const auto& v : a.polygon.vertices) {
            cx += v.x;
            cy += v.y;
        }
        taken.push_back({cx / 32.0, cy / 32.0, kDiskRadius});
    }
    const auto extra = place(rng, 12, 5.0, 6.0, taken);
    for (std::size_t i = 0; i < extra.size(); ++i) {
        const double conf = 0.05 + static_cast<double>(rng.below(550)) / 1000.0;
        const auto cls = rng.below(2) ? CellClass::Immunopositive : CellClass::Immunonegative;
        pf.instances.push_back({indexed("s", i), cls, conf,
                                rasterize(disk_polygon(extra[i].x, extra[i].y, extra[i].r), kPatchSize, kPatchSize)});
    }
    f.predictions = std::move(pf);
    return f;
}

std::vector<std::filesystem::path> write(const Fixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    auto put = [&](const char* name, const std::string& text) {
        docs::write_text(dir / name, text);
        out.push_back(dir / name);
    };
    put("slide.json", docs::dump(docs::to_json(fixture.slide)));
    const auto png = encode_png(fixture.image);
    put("patch.png", std::string(png.begin(), png.end()));
    put("ground_truth.json", docs::dump(docs::to_json(fixture.ground_truth)));
    if (fixture.predictions) put("predictions.json", docs::dump(docs::to_json(*fixture.predictions)));
    return out;
}

}  // namespace ihcq::fixtures
