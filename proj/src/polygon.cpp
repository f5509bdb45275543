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

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ihcq/error.hpp"
#include "ihcq/maskops.hpp"

namespace ihcq {

BinaryMask rasterize(const Polygon& poly, int width, int height) {
    validate_polygon(poly, width, height);
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvalidInput, "raster dimensions must be positive");
    }
    const auto& v = poly.vertices;
    const std::size_t n = v.size();

    Bitmap bitmap(width, height);
    std::vector<double> crossings;
    bool any = false;
    for (int row = 0; row < height; ++row) {
        const double y = row + 0.5;
        crossings.clear();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Point& a = v[i];
            const Point& b = v[j];
            // Half-open in y, same expression as the crossing-number test.
            if ((a.y > y) != (b.y > y)) {
                crossings.push_back((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
            }
        }
        std::sort(crossings.begin(), crossings.end());
        // A center x is inside iff an odd number of crossings lie strictly to
        // its right, i.e. crossings[2k] <= x < crossings[2k+1].
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const double lo = crossings[k];
            const double hi = crossings[k + 1];
            double start = std::ceil(lo - 0.5);
            while (start + 0.5 < lo) start += 1.0;
            while (start - 0.5 >= lo) start -= 1.0;
            const int c0 = std::max(0, static_cast<int>(start));
            for (int col = c0; col < width && col + 0.5 < hi; ++col) {
                bitmap.set(row, col);
                any = true;
            }
        }
    }
    if (!any) {
        throw Error(ErrorCode::EmptyMask, "polygon covers no pixel center");
    }
    return BinaryMask::from_bitmap(bitmap);
}

namespace {

// Directions of boundary cracks in image coordinates (y grows downward).
enum Dir : int { East = 0, South = 1, West = 2, North = 3 };
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

}  // namespace

Polygon outline_polygon(const BinaryMask& mask) {
    if (mask.empty()) {
        throw Error(ErrorCode::EmptyMask, "cannot outline an empty mask");
    }
    const Bitmap bitmap = mask.to_bitmap();
    const Labeling labels = label_components(bitmap);

    std::vector<std::uint64_t> sizes(static_cast<std::size_t>(labels.count) + 1, 0);
    for (auto l : labels.labels) ++sizes[static_cast<std::size_t>(l)];
    int best = 1;
    for (int l = 2; l <= labels.count; ++l) {
        if (sizes[static_cast<std::size_t>(l)] > sizes[static_cast<std::size_t>(best)]) best = l;
    }

    const int w = bitmap.width;
    const int h = bitmap.height;
    auto inside = [&](int col, int row) {
        return col >= 0 && row >= 0 && col < w && row < h &&
               labels.labels[static_cast<std::size_t>(row) * w + col] == best;
    };

    // Cracks keyed by their start corner; bit d set means a crack leaves the
    // corner in direction d. Pixels are walked clockwise on screen, so the
    // component is always on the walker's right.
    const std::size_t cw = static_cast<std::size_t>(w) + 1;
    std::vector<std::uint8_t> out_edges(cw * (static_cast<std::size_t>(h) + 1), 0);
    auto corner = [&](int x, int y) { return static_cast<std::size_t>(y) * cw + x; };
    int start_x = -1, start_y = -1;
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            if (!inside(col, row)) continue;
            if (!inside(col, row - 1)) {
                out_edges[corner(col, row)] |= 1u << East;
                if (start_x < 0) {
                    start_x = col;
                    start_y = row;
                }
            }
            if (!inside(col + 1, row)) out_edges[corner(col + 1, row)] |= 1u << South;
            if (!inside(col, row + 1)) out_edges[corner(col + 1, row + 1)] |= 1u << West;
            if (!inside(col - 1, row)) out_edges[corner(col, row + 1)] |= 1u << North;
        }
    }

    Polygon poly;
    int x = start_x, y = start_y;
    int dir = East;
    std::vector<Point> corners;
    for (;;) {
        corners.push_back(Point{static_cast<double>(x), static_cast<double>(y)});
        out_edges[corner(x, y)] &= static_cast<std::uint8_t>(~(1u << dir));
        x += kDx[dir];
        y += kDy[dir];
        if (x == start_x && y == start_y) break;
        // Prefer turning right, which hugs the current pixel and keeps
        // diagonal-only neighbours apart; then straight, then left.
        const std::uint8_t avail = out_edges[corner(x, y)];
        const int right = (dir + 1) % 4, left = (dir + 3) % 4;
        if (avail & (1u << right)) {
            dir = right;
        } else if (avail & (1u << dir)) {
            // straight on
        } else if (avail & (1u << left)) {
            dir = left;
        } else {
            throw Error(ErrorCode::Internal, "open boundary while tracing outline");
        }
    }

    // Keep only the corners where the direction changes.
    const std::size_t n = corners.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& prev = corners[(i + n - 1) % n];
        const Point& cur = corners[i];
        const Point& next = corners[(i + 1) % n];
        const bool collinear = (prev.x == cur.x && cur.x == next.x) || (prev.y == cur.y && cur.y == next.y);
        if (!collinear) poly.vertices.push_back(cur);
    }
    return poly;
}

}  // namespace ihcq
