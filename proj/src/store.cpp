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

#include "ihcq/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "ihcq/error.hpp"

namespace fs = std::filesystem;

namespace ihcq::store {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t TilePyramid::tile_count() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += static_cast<std::size_t>(l.tiles_x) * static_cast<std::size_t>(l.tiles_y);
    return n;
}

TilePyramid pyramid_for(int width, int height) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidInput, "empty image");
    TilePyramid p;
    int w = width, h = height;
    for (;;) {
        p.levels.push_back({w, h, (w + kTileSize - 1) / kTileSize, (h + kTileSize - 1) / kTileSize});
        if (std::max(w, h) <= kTileSize) break;
        w = (w + 1) / 2;
        h = (h + 1) / 2;
    }
    return p;
}

namespace {

constexpr std::int64_t kMaxSide = 1 << 20;
constexpr std::int64_t kMaxPixels = std::int64_t{1} << 31;

docs::json pyramid_json(const TilePyramid& p) {
    docs::json levels = docs::json::array();
    for (const auto& l : p.levels) {
        levels.push_back({{"width", l.width}, {"height", l.height}, {"tiles_x", l.tiles_x}, {"tiles_y", l.tiles_y}});
    }
    return levels;
}

std::string tile_name(int level, int tx, int ty) {
    return std::to_string(tx) + "_" + std::to_string(ty) + (level == 0 ? ".png" : ".jpg");
}

void require_key(const std::string& key, const char* what) {
    if (!is_valid_key(key)) throw Error(ErrorCode::InvalidInput, std::string("invalid ") + what + " '" + key + "'");
}

std::optional<std::int64_t> parse_version_name(const std::string& name) {
    if (name.size() < 7 || name[0] != 'v' || name.substr(name.size() - 5) != ".json") return std::nullopt;
    const auto digits = name.substr(1, name.size() - 6);
    if (digits.empty() || digits.size() > 15 ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    return std::stoll(digits);
}

// Creates `target` with `text` only if it does not exist yet. Returns false
// when another writer got there first.
bool create_exclusive(const fs::path& target, const std::string& text) {
    static std::atomic<unsigned long> counter{0};
    const auto tmp = target.parent_path() /
                     (".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size() && std::fflush(f) == 0 &&
                        ::fsync(::fileno(f)) == 0;
        std::fclose(f);
        if (!ok) {
            fs::remove(tmp);
            throw Error(ErrorCode::Io, "write failed: " + tmp.string());
        }
    }
    const int rc = ::link(tmp.c_str(), target.c_str());
    const int err = errno;
    fs::remove(tmp);
    if (rc == 0) return true;
    if (err == EEXIST) return false;
    throw Error(ErrorCode::Io, "cannot create " + target.string() + ": " + std::strerror(err));
}

std::string pad_table_cell(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "slides");
    fs::create_directories(root_ / "annotations");
    fs::create_directories(root_ / "predictions");
}

fs::path Store::slide_dir(const std::string& id) const { return root_ / "slides" / id; }
fs::path Store::doc_dir(const std::string& key) const { return root_ / "annotations" / key; }

IngestResult Store::ingest_image(const fs::path& path, SlideRecord meta) {
    RgbImage image;
    try {
        image = read_image(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::Io, e.what());
    }
    return ingest(image, std::move(meta));
}

IngestResult Store::ingest(const RgbImage& image, SlideRecord meta) {
    require_key(meta.id, "slide id");
    if (image.width <= 0 || image.height <= 0 || image.width > kMaxSide || image.height > kMaxSide ||
        static_cast<std::int64_t>(image.width) * image.height > kMaxPixels) {
        throw Error(ErrorCode::InvalidInput, "image dimensions out of range");
    }
    meta.width = image.width;
    meta.height = image.height;
    const auto problems = validate_slide(meta);
    if (!problems.empty()) throw Error(ErrorCode::InvalidInput, "slide: " + problems.front());

    IngestResult result{meta, pyramid_for(image.width, image.height)};
    const auto dir = slide_dir(meta.id);
    RgbImage level = image;
    for (std::size_t li = 0; li < result.pyramid.levels.size(); ++li) {
        if (li > 0) level = halve(level);
        const auto& info = result.pyramid.levels[li];
        const auto level_dir = dir / "tiles" / std::to_string(li);
        fs::create_directories(level_dir);
        for (int ty = 0; ty < info.tiles_y; ++ty) {
            for (int tx = 0; tx < info.tiles_x; ++tx) {
                const auto tile = crop(level, tx * kTileSize, ty * kTileSize, kTileSize, kTileSize);
                const auto bytes = li == 0 ? encode_png(tile) : encode_jpeg(tile, kJpegQuality);
                docs::write_text(level_dir / tile_name(static_cast<int>(li), tx, ty), std::string(bytes.begin(), bytes.end()));
            }
        }
    }
    auto j = docs::to_json(meta);
    j["levels"] = pyramid_json(result.pyramid);
    // Metadata last: a slide is listed only once all its tiles exist.
    docs::write_text(dir / "meta.json", docs::dump(j));
    return result;
}

std::vector<SlideRecord> Store::list_slides() const {
    std::vector<SlideRecord> out;
    for (const auto& entry : fs::directory_iterator(root_ / "slides")) {
        if (fs::exists(entry.path() / "meta.json")) out.push_back(slide(entry.path().filename().string()));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

SlideRecord Store::slide(const std::string& id) const {
    if (!is_valid_key(id)) throw Error(ErrorCode::NotFound, "no slide '" + id + "'");
    const auto meta = slide_dir(id) / "meta.json";
    if (!fs::exists(meta)) throw Error(ErrorCode::NotFound, "no slide '" + id + "'");
    return docs::slide_from_json(docs::read_json(meta));
}

TilePyramid Store::pyramid(const std::string& id) const {
    slide(id);
    const auto j = docs::read_json(slide_dir(id) / "meta.json");
    TilePyramid p;
    for (const auto& l : j.at("levels")) {
        p.levels.push_back({l.at("width").get<int>(), l.at("height").get<int>(), l.at("tiles_x").get<int>(),
                            l.at("tiles_y").get<int>()});
    }
    return p;
}

std::vector<std::uint8_t> Store::get_tile(const std::string& id, int level, int tx, int ty) const {
    const auto p = pyramid(id);
    if (level < 0 || level >= static_cast<int>(p.levels.size())) {
        throw Error(ErrorCode::NotFound, "no level " + std::to_string(level));
    }
    const auto& info = p.levels[static_cast<std::size_t>(level)];
    if (tx < 0 || ty < 0 || tx >= info.tiles_x || ty >= info.tiles_y) {
        throw Error(ErrorCode::NotFound, "tile outside level grid");
    }
    const auto text = docs::read_text(slide_dir(id) / "tiles" / std::to_string(level) / tile_name(level, tx, ty));
    return {text.begin(), text.end()};
}

RgbImage Store::read_region(const PatchRegion& patch) const {
    const auto s = slide(patch.slide_id);
    const auto problems = validate_patch(patch, s);
    if (!problems.empty()) throw Error(ErrorCode::InvalidInput, "patch: " + problems.front());
    const int x0 = static_cast<int>(patch.x), y0 = static_cast<int>(patch.y);
    const int w = static_cast<int>(patch.width), h = static_cast<int>(patch.height);
    RgbImage out(w, h);
    for (int ty = y0 / kTileSize; ty <= (y0 + h - 1) / kTileSize; ++ty) {
        for (int tx = x0 / kTileSize; tx <= (x0 + w - 1) / kTileSize; ++tx) {
            const auto tile = decode_image(get_tile(patch.slide_id, 0, tx, ty));
            const int ox = tx * kTileSize, oy = ty * kTileSize;
            const int cx0 = std::max(x0, ox), cx1 = std::min(x0 + w, ox + tile.width);
            const int cy0 = std::max(y0, oy), cy1 = std::min(y0 + h, oy + tile.height);
            for (int y = cy0; y < cy1; ++y) {
                std::copy_n(tile.at(y - oy, cx0 - ox), 3 * (cx1 - cx0), out.at(y - y0, cx0 - x0));
            }
        }
    }
    return out;
}

std::string Store::tile_content_type(int level) { return level == 0 ? "image/png" : "image/jpeg"; }

std::mutex& Store::document_mutex(const std::string& key) {
    std::lock_guard lock(mutexes_guard_);
    auto& m = document_mutexes_[key];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

std::vector<std::int64_t> Store::versions(const std::string& key) const {
    std::vector<std::int64_t> out;
    if (!is_valid_key(key)) return out;
    const auto dir = doc_dir(key);
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (auto v = parse_version_name(entry.path().filename().string())) out.push_back(*v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

docs::AnnotationDocument Store::save_document(const std::string& key, docs::AnnotationDocument doc) {
    require_key(key, "patch key");
    docs::require_valid(doc);
    if (fs::exists(slide_dir(doc.patch.slide_id) / "meta.json")) {
        const auto problems = validate_patch(doc.patch, slide(doc.patch.slide_id));
        if (!problems.empty()) throw Error(ErrorCode::InvalidInput, "patch: " + problems.front());
    }
    std::lock_guard lock(document_mutex(key));
    const auto existing = versions(key);
    const std::int64_t latest = existing.empty() ? 0 : existing.back();
    if (doc.version != latest) {
        throw Error(ErrorCode::Conflict, "base version " + std::to_string(doc.version) + " is stale; latest is " +
                                             std::to_string(latest));
    }
    doc.version = latest + 1;
    doc.saved_at = docs::utc_timestamp();
    fs::create_directories(doc_dir(key));
    const auto target = doc_dir(key) / ("v" + std::to_string(doc.version) + ".json");
    if (!create_exclusive(target, docs::dump(docs::to_json(doc)))) {
        throw Error(ErrorCode::Conflict, "version " + std::to_string(doc.version) + " was saved concurrently");
    }
    return doc;
}

docs::AnnotationDocument Store::load_document(const std::string& key, std::optional<std::int64_t> version) const {
    const auto vs = versions(key);
    if (vs.empty()) throw Error(ErrorCode::NotFound, "no annotations for '" + key + "'");
    const auto v = version.value_or(vs.back());
    if (!std::binary_search(vs.begin(), vs.end(), v)) {
        throw Error(ErrorCode::NotFound, "no version " + std::to_string(v) + " of '" + key + "'");
    }
    return docs::annotation_document_from_json(docs::read_json(doc_dir(key) / ("v" + std::to_string(v) + ".json")));
}

std::vector<std::string> Store::document_keys() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_ / "annotations")) {
        const auto key = entry.path().filename().string();
        if (!versions(key).empty()) out.push_back(key);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string Store::save_predictions(const docs::PredictionFile& file) {
    const auto text = docs::dump(docs::to_json(file));
    char id[24];
    std::snprintf(id, sizeof(id), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    const auto path = root_ / "predictions" / (std::string(id) + ".json");
    if (!fs::exists(path)) docs::write_text(path, text);
    return id;
}

docs::PredictionFile Store::load_predictions(const std::string& id) const {
    if (!is_valid_key(id)) throw Error(ErrorCode::NotFound, "no prediction file '" + id + "'");
    const auto path = root_ / "predictions" / (id + ".json");
    if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "no prediction file '" + id + "'");
    return docs::prediction_file_from_json(docs::read_json(path));
}

DatasetManifest Store::export_dataset(const SplitSpec& split) const {
    if (!(split.test_fraction >= 0.0 && split.test_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "test_fraction must lie in [0,1]");
    }
    DatasetManifest m;
    std::vector<CellClass> seen;
    for (const auto& key : document_keys()) {
        const auto doc = load_document(key);
        ManifestEntry e;
        e.key = key;
        e.version = doc.version;
        bool test = false;
        if (!split.test_keys.empty()) {
            test = split.test_keys.count(key) > 0;
        } else {
            test = static_cast<double>(fnv1a(key, split.seed) % 1000000) < split.test_fraction * 1000000.0;
        }
        e.split = test ? "test" : "train";
        for (const auto& a : doc.annotations) {
            ++e.counts[a.cls];
            seen.push_back(a.cls);
        }
        m.patches.push_back(std::move(e));
    }
    const auto family = common_family(seen);
    if (!family) throw Error(ErrorCode::EmptyDataset, "no annotated cells in the store");
    for (auto cls : classes_of(*family)) {
        ManifestRow row{cls};
        for (const auto& e : m.patches) {
            auto it = e.counts.find(cls);
            if (it == e.counts.end()) continue;
            (e.split == "test" ? row.test : row.train) += it->second;
        }
        m.train_total += row.train;
        m.test_total += row.test;
        m.rows.push_back(row);
    }
    return m;
}

docs::json to_json(const DatasetManifest& m) {
    docs::json patches = docs::json::array();
    for (const auto& e : m.patches) {
        docs::json counts = docs::json::object();
        for (const auto& [cls, n] : e.counts) counts[std::string(to_string(cls))] = n;
        patches.push_back({{"key", e.key}, {"split", e.split}, {"version", e.version}, {"counts", counts}});
    }
    docs::json rows = docs::json::array();
    for (const auto& r : m.rows) {
        rows.push_back({{"class", std::string(to_string(r.cls))}, {"train", r.train}, {"test", r.test}, {"total", r.total()}});
    }
    return {{"patches", patches},
            {"classes", rows},
            {"total", {{"train", m.train_total}, {"test", m.test_total}, {"total", m.train_total + m.test_total}}}};
}

std::string render_manifest(const DatasetManifest& m) {
    std::ostringstream os;
    std::size_t width = 5;
    for (const auto& r : m.rows) width = std::max(width, display_name(r.cls).size());
    char buf[64];
    os << pad_table_cell("Class", width);
    std::snprintf(buf, sizeof(buf), " %8s %8s %8s\n", "Train", "Test", "Total");
    os << buf;
    for (const auto& r : m.rows) {
        os << pad_table_cell(std::string(display_name(r.cls)), width);
        std::snprintf(buf, sizeof(buf), " %8zu %8zu %8zu\n", r.train, r.test, r.total());
        os << buf;
    }
    os << pad_table_cell("Total", width);
    std::snprintf(buf, sizeof(buf), " %8zu %8zu %8zu\n", m.train_total, m.test_total, m.train_total + m.test_total);
    os << buf;
    return os.str();
}

}  // namespace ihcq::store
