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
#include <span>
#include <vector>

namespace ihcq {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

/// Closed polygon in the patch frame (pixel (col,row) spans
/// [col,col+1) x [row,row+1)). The closing edge is implicit.
struct Polygon {
    std::vector<Point> vertices;

    bool operator==(const Polygon&) const = default;
};

/// Throws InvalidInput unless the polygon has >= 3 finite vertices inside
/// [-0.5, width+0.5] x [-0.5, height+0.5].
void validate_polygon(const Polygon& poly, int width, int height);

/// Unpacked row-major 0/1 bitmap.
struct Bitmap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Bitmap() = default;
    Bitmap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int row, int col) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
    void set(int row, int col, bool v = true) {
        bits[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
    }

    bool operator==(const Bitmap&) const = default;
};

/// Half-open pixel box; empty() when the mask has no foreground.
struct BoundingBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool intersects(const BoundingBox& o) const {
        return !empty() && !o.empty() && x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
};

/// Run-length-encoded binary mask. Runs are row-major and alternate
/// background/foreground starting with background; every run after the
/// first is non-zero, so equal masks have equal run vectors.
class BinaryMask {
public:
    BinaryMask() = default;

    /// Throws MalformedMask when sum(runs) != width*height or two
    /// consecutive runs are zero. Interior zero runs are merged away.
    static BinaryMask from_runs(int width, int height, std::span<const std::uint32_t> runs);
    static BinaryMask from_bitmap(const Bitmap& bitmap);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint32_t>& runs() const { return runs_; }
    std::uint64_t area() const { return area_; }
    const BoundingBox& bbox() const { return bbox_; }
    bool empty() const { return area_ == 0; }

    Bitmap to_bitmap() const;

    /// Calls fn(begin, end) for each foreground interval of linear pixel
    /// indices, in increasing order.
    template <typename Fn>
    void for_each_interval(Fn&& fn) const {
        std::uint64_t pos = 0;
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            const std::uint64_t next = pos + runs_[i];
            if (i % 2 == 1) fn(pos, next);
            pos = next;
        }
    }

    bool operator==(const BinaryMask& o) const {
        return width_ == o.width_ && height_ == o.height_ && runs_ == o.runs_;
    }

private:
    void finish();

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> runs_;
    std::uint64_t area_ = 0;
    BoundingBox bbox_;
};

/// Pixel (row,col) is set iff its center (col+0.5, row+0.5) is inside the
/// polygon under the even-odd rule. Throws EmptyMask when nothing is set.
BinaryMask rasterize(const Polygon& poly, int width, int height);

std::vector<std::uint32_t> encode(const Bitmap& bitmap);
/// Throws MalformedMask when the runs do not describe a width x height mask.
Bitmap decode(std::span<const std::uint32_t> runs, int width, int height);

std::uint64_t area(const BinaryMask& m);
/// Run-merge intersection; never decodes. Throws DimensionMismatch.
std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
std::uint64_t union_area(const BinaryMask& a, const BinaryMask& b);
/// Throws UndefinedIoU when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Bit-packed copy of a mask for the SIMD intersection kernels.
class PackedMask {
public:
    PackedMask() = default;
    explicit PackedMask(const BinaryMask& mask);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint64_t area() const { return area_; }
    const BoundingBox& bbox() const { return bbox_; }
    std::span<const std::uint64_t> words() const { return words_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::uint64_t area_ = 0;
    BoundingBox bbox_;
    std::vector<std::uint64_t> words_;
};

/// Intersection via the active popcount kernel over the rows both boxes share.
std::uint64_t intersection_area(const PackedMask& a, const PackedMask& b);

/// 4-connected component labels; 0 is background, components are numbered
/// from 1 in raster order of their first pixel.
struct Labeling {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<std::int32_t> labels;
};

Labeling label_components(const Bitmap& bitmap);

/// Outer boundary of the largest 4-connected component as a pixel-corner
/// polygon (collinear vertices dropped). Holes are not represented, so
/// rasterize(outline(m)) equals m with its holes filled. Throws EmptyMask.
Polygon outline_polygon(const BinaryMask& mask);

}  // namespace ihcq
