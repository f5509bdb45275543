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

// Test-only reference implementations. These deliberately avoid the library
// code paths they are used to check (no run merging, no packed kernels, no
// greedy loop) so agreement means something.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ihcq/instances.hpp"
#include "ihcq/maskops.hpp"

namespace ihcq::test {

/// Classic crossing-number point-in-polygon test.
inline bool point_in_polygon(const Polygon& poly, double x, double y) {
    bool inside = false;
    const auto& v = poly.vertices;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > y) != (v[j].y > y) &&
            x < (v[j].x - v[i].x) * (y - v[i].y) / (v[j].y - v[i].y) + v[i].x) {
            inside = !inside;
        }
    }
    return inside;
}

inline Bitmap rasterize_oracle(const Polygon& poly, int w, int h) {
    Bitmap b(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) b.set(r, c, point_in_polygon(poly, c + 0.5, r + 0.5));
    }
    return b;
}

inline std::uint64_t pixel_count(const Bitmap& a) {
    return static_cast<std::uint64_t>(std::count(a.bits.begin(), a.bits.end(), 1));
}

inline std::uint64_t pixel_intersection(const Bitmap& a, const Bitmap& b) {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) n += (a.bits[i] && b.bits[i]) ? 1 : 0;
    return n;
}

inline double pixel_iou(const Bitmap& a, const Bitmap& b) {
    std::uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += (a.bits[i] && b.bits[i]) ? 1 : 0;
        uni += (a.bits[i] || b.bits[i]) ? 1 : 0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Random bitmap; `density` in [0,1]; `blobby` biases toward runs.
inline Bitmap random_bitmap(std::mt19937_64& rng, int w, int h, double density, bool blobby) {
    Bitmap b(w, h);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool prev = false;
    for (auto& bit : b.bits) {
        bool v = u(rng) < density;
        if (blobby && u(rng) < 0.8) v = prev;
        bit = v ? 1 : 0;
        prev = v;
    }
    return b;
}

/// Filled axis-aligned rectangle [x0,x1) x [y0,y1) clipped to the frame.
inline Bitmap rect_bitmap(int w, int h, int x0, int y0, int x1, int y1) {
    Bitmap b(w, h);
    for (int r = std::max(0, y0); r < std::min(h, y1); ++r) {
        for (int c = std::max(0, x0); c < std::min(w, x1); ++c) b.set(r, c);
    }
    return b;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
    return BinaryMask::from_bitmap(rect_bitmap(w, h, x0, y0, x1, y1));
}

/// Random nonempty blob: union of a few random rectangles.
inline BinaryMask random_blob(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1), sz(1, std::max(2, std::min(w, h) / 3));
    std::uniform_int_distribution<int> parts(1, 3);
    Bitmap b(w, h);
    const int n = parts(rng);
    for (int k = 0; k < n; ++k) {
        const int x0 = xs(rng), y0 = ys(rng);
        const int x1 = std::min(w, x0 + sz(rng)), y1 = std::min(h, y0 + sz(rng));
        for (int r = y0; r < y1; ++r)
            for (int c = x0; c < x1; ++c) b.set(r, c);
    }
    return BinaryMask::from_bitmap(b);
}

/// Exhaustive same-order matching: enumerate every injective assignment of
/// predictions (already in ranking order) to GTs with IoU >= th, keep the
/// lexicographically best by (IoU of pred 0, IoU of pred 1, ...), with GT id
/// order breaking exact ties. Returns, per prediction, the matched GT index.
inline std::vector<std::optional<std::size_t>> exhaustive_match(
    const std::vector<std::vector<double>>& ious, const std::vector<std::string>& gt_ids, double th) {
    const std::size_t np = ious.size();
    const std::size_t ng = gt_ids.size();
    std::vector<std::optional<std::size_t>> current(np), best;
    std::vector<double> best_key;
    std::vector<std::string> best_ids;
    std::vector<char> used(ng, 0);

    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == np) {
            std::vector<double> key;
            std::vector<std::string> ids;
            for (std::size_t p = 0; p < np; ++p) {
                key.push_back(current[p] ? ious[p][*current[p]] : -1.0);
                ids.push_back(current[p] ? gt_ids[*current[p]] : std::string("\x7f"));
            }
            // Lexicographic on (key desc, id asc) position by position.
            bool better = best.empty();
            if (!better) {
                for (std::size_t p = 0; p < np; ++p) {
                    if (key[p] != best_key[p]) {
                        better = key[p] > best_key[p];
                        break;
                    }
                    if (ids[p] != best_ids[p]) {
                        better = ids[p] < best_ids[p];
                        break;
                    }
                }
            }
            if (better) {
                best = current;
                best_key = key;
                best_ids = ids;
            }
            return;
        }
        current[k] = std::nullopt;
        rec(k + 1);
        for (std::size_t g = 0; g < ng; ++g) {
            if (used[g] || ious[k][g] < th) continue;
            used[g] = 1;
            current[k] = g;
            rec(k + 1);
            used[g] = 0;
        }
        current[k] = std::nullopt;
    };
    rec(0);
    return best;
}

/// Numerical integral of the interpolated precision p(r) = max{p_i : r_i >= r}
/// by midpoint sampling of [0,1].
inline double integrate_ap(const std::vector<std::pair<double, double>>& pr_points, int samples) {
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double r = (s + 0.5) / samples;
        double p = 0.0;
        for (const auto& [precision, recall] : pr_points) {
            if (recall >= r) p = std::max(p, precision);
        }
        total += p;
    }
    return total / samples;
}

}  // namespace ihcq::test
