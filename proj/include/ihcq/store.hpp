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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ihcq/documents.hpp"
#include "ihcq/image.hpp"

// On-disk layout under the store root:
//   slides/{id}/meta.json
//   slides/{id}/tiles/{level}/{tx}_{ty}.png   (level 0, lossless)
//   slides/{id}/tiles/{level}/{tx}_{ty}.jpg   (coarser levels, quality 90)
//   annotations/{patch-key}/v{n}.json         (append-only)
//   predictions/{id}.json
namespace ihcq::store {

inline constexpr int kTileSize = 256;
inline constexpr int kJpegQuality = 90;

struct LevelInfo {
    int width = 0;
    int height = 0;
    int tiles_x = 0;
    int tiles_y = 0;

    bool operator==(const LevelInfo&) const = default;
};

struct TilePyramid {
    std::vector<LevelInfo> levels;

    std::size_t tile_count() const;
    bool operator==(const TilePyramid&) const = default;
};

/// Level 0 is w x h; each further level halves both sides (ceil) until
/// max(w, h) <= 256.
TilePyramid pyramid_for(int width, int height);

struct IngestResult {
    SlideRecord slide;
    TilePyramid pyramid;
};

struct SplitSpec {
    /// Explicit test patches; when empty, `test_fraction` of the keys go to
    /// test, chosen by a seeded hash of the key.
    std::set<std::string> test_keys;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct ManifestEntry {
    std::string key;
    std::string split;  // "train" | "test"
    std::int64_t version = 0;
    std::map<CellClass, std::size_t> counts;
};

struct ManifestRow {
    CellClass cls;
    std::size_t train = 0;
    std::size_t test = 0;
    std::size_t total() const { return train + test; }
};

struct DatasetManifest {
    std::vector<ManifestEntry> patches;
    std::vector<ManifestRow> rows;  // one per class of the corpus family
    std::size_t train_total = 0;
    std::size_t test_total = 0;
};

docs::json to_json(const DatasetManifest& manifest);
/// Class / Train / Test / Total table with a totals row.
std::string render_manifest(const DatasetManifest& manifest);

class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Builds and persists the pyramid. The slide width/height are taken
    /// from the image; re-ingesting the same id rewrites identical bytes.
    IngestResult ingest_image(const std::filesystem::path& path, SlideRecord meta);
    IngestResult ingest(const RgbImage& image, SlideRecord meta);

    std::vector<SlideRecord> list_slides() const;
    /// Throws NotFound.
    SlideRecord slide(const std::string& id) const;
    TilePyramid pyramid(const std::string& id) const;

    /// Encoded tile bytes; throws NotFound outside the level grid.
    std::vector<std::uint8_t> get_tile(const std::string& id, int level, int tx, int ty) const;
    static std::string tile_content_type(int level);
    /// Full-resolution pixels of a patch, stitched from level-0 tiles.
    /// Throws NotFound for an unknown slide, InvalidInput when out of bounds.
    RgbImage read_region(const PatchRegion& patch) const;

    /// `doc.version` is the base version the client edited (0 for a new
    /// patch). Saves as base+1 and returns the stored document; throws
    /// Conflict when base is not the latest version, InvalidInput when the
    /// document or key is invalid.
    docs::AnnotationDocument save_document(const std::string& key, docs::AnnotationDocument doc);
    /// Latest version when `version` is empty. Throws NotFound.
    docs::AnnotationDocument load_document(const std::string& key, std::optional<std::int64_t> version = {}) const;
    std::vector<std::int64_t> versions(const std::string& key) const;
    std::vector<std::string> document_keys() const;

    /// Content-addressed: the id is the FNV-1a hash of the canonical JSON.
    std::string save_predictions(const docs::PredictionFile& file);
    docs::PredictionFile load_predictions(const std::string& id) const;

    /// Throws EmptyDataset when no document holds any annotation.
    DatasetManifest export_dataset(const SplitSpec& split) const;

private:
    std::filesystem::path slide_dir(const std::string& id) const;
    std::filesystem::path doc_dir(const std::string& key) const;
    std::mutex& document_mutex(const std::string& key);

    std::filesystem::path root_;
    std::mutex mutexes_guard_;
    std::map<std::string, std::unique_ptr<std::mutex>> document_mutexes_;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace ihcq::store
