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

#include "ihcq/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ihcq/error.hpp"
#include "ihcq/kernels.hpp"

namespace ihcq {

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::MalformedMask, "mask dimensions must be positive");
    }
    if (static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) >
        std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::MalformedMask, "mask too large");
    }
}

void check_same_dims(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::DimensionMismatch, "masks have different dimensions");
    }
}

}  // namespace

void validate_polygon(const Polygon& poly, int width, int height) {
    if (poly.vertices.size() < 3) {
        throw Error(ErrorCode::InvalidInput, "polygon needs at least 3 vertices");
    }
    for (const auto& p : poly.vertices) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(ErrorCode::InvalidInput, "polygon vertex is not finite");
        }
        if (p.x < -0.5 || p.y < -0.5 || p.x > width + 0.5 || p.y > height + 0.5) {
            throw Error(ErrorCode::InvalidInput, "polygon vertex outside patch bounds");
        }
    }
}

BinaryMask BinaryMask::from_runs(int width, int height, std::span<const std::uint32_t> runs) {
    check_dims(width, height);
    const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i > 0 && runs[i] == 0 && runs[i - 1] == 0) {
            throw Error(ErrorCode::MalformedMask, "two consecutive zero runs");
        }
        sum += runs[i];
    }
    if (sum != total) {
        throw Error(ErrorCode::MalformedMask, "run lengths do not sum to width*height");
    }

    BinaryMask m;
    m.width_ = width;
    m.height_ = height;
    m.runs_.reserve(runs.size());
    // Drop interior zero runs by folding their neighbours together; parity
    // of the next run flips back to the one before the zero.
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i > 0 && runs[i] == 0) {
            if (i + 1 < runs.size()) {
                m.runs_.back() += runs[i + 1];
                ++i;
            }
            continue;
        }
        m.runs_.push_back(runs[i]);
    }
    if (m.runs_.empty()) m.runs_.push_back(0);
    m.finish();
    return m;
}

BinaryMask BinaryMask::from_bitmap(const Bitmap& bitmap) {
    const auto runs = encode(bitmap);
    return from_runs(bitmap.width, bitmap.height, runs);
}

void BinaryMask::finish() {
    area_ = 0;
    int x0 = width_, y0 = height_, x1 = 0, y1 = 0;
    const auto w = static_cast<std::uint64_t>(width_);
    for_each_interval([&](std::uint64_t begin, std::uint64_t end) {
        area_ += end - begin;
        const int r0 = static_cast<int>(begin / w);
        const int r1 = static_cast<int>((end - 1) / w);
        y0 = std::min(y0, r0);
        y1 = std::max(y1, r1 + 1);
        if (r0 == r1) {
            x0 = std::min(x0, static_cast<int>(begin % w));
            x1 = std::max(x1, static_cast<int>((end - 1) % w) + 1);
        } else {
            x0 = 0;
            x1 = width_;
        }
    });
    bbox_ = area_ == 0 ? BoundingBox{} : BoundingBox{x0, y0, x1, y1};
}

Bitmap BinaryMask::to_bitmap() const {
    Bitmap out(width_, height_);
    for_each_interval([&](std::uint64_t begin, std::uint64_t end) {
        std::fill(out.bits.begin() + static_cast<std::ptrdiff_t>(begin),
                  out.bits.begin() + static_cast<std::ptrdiff_t>(end), std::uint8_t{1});
    });
    return out;
}

std::vector<std::uint32_t> encode(const Bitmap& bitmap) {
    check_dims(bitmap.width, bitmap.height);
    if (bitmap.bits.size() != static_cast<std::size_t>(bitmap.width) * bitmap.height) {
        throw Error(ErrorCode::DimensionMismatch, "bitmap size does not match its dimensions");
    }
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t length = 0;
    for (auto v : bitmap.bits) {
        const std::uint8_t bit = v ? 1 : 0;
        if (bit != current) {
            runs.push_back(length);
            length = 0;
            current = bit;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

Bitmap decode(std::span<const std::uint32_t> runs, int width, int height) {
    return BinaryMask::from_runs(width, height, runs).to_bitmap();
}

std::uint64_t area(const BinaryMask& m) { return m.area(); }

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    check_same_dims(a, b);
    if (!a.bbox().intersects(b.bbox())) return 0;

    // Two-pointer sweep over the foreground intervals of both run lists.
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    std::size_t i = 0, j = 0;
    std::uint64_t a_begin = 0, a_end = 0, b_begin = 0, b_end = 0;
    std::uint64_t a_pos = 0, b_pos = 0;

    auto next_a = [&]() -> bool {
        while (i < ra.size()) {
            const std::uint64_t start = a_pos + ra[i];
            if (i + 1 >= ra.size()) return false;
            a_begin = start;
            a_end = start + ra[i + 1];
            a_pos = a_end;
            i += 2;
            return true;
        }
        return false;
    };
    auto next_b = [&]() -> bool {
        while (j < rb.size()) {
            const std::uint64_t start = b_pos + rb[j];
            if (j + 1 >= rb.size()) return false;
            b_begin = start;
            b_end = start + rb[j + 1];
            b_pos = b_end;
            j += 2;
            return true;
        }
        return false;
    };

    std::uint64_t total = 0;
    bool has_a = next_a();
    bool has_b = next_b();
    while (has_a && has_b) {
        const auto lo = std::max(a_begin, b_begin);
        const auto hi = std::min(a_end, b_end);
        if (lo < hi) total += hi - lo;
        if (a_end < b_end) {
            has_a = next_a();
        } else {
            has_b = next_b();
        }
    }
    return total;
}

std::uint64_t union_area(const BinaryMask& a, const BinaryMask& b) {
    return a.area() + b.area() - intersection_area(a, b);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    check_same_dims(a, b);
    if (a.empty() && b.empty()) {
        throw Error(ErrorCode::UndefinedIoU, "IoU of two empty masks is undefined");
    }
    const auto inter = intersection_area(a, b);
    const auto uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

PackedMask::PackedMask(const BinaryMask& mask)
    : width_(mask.width()), height_(mask.height()), area_(mask.area()), bbox_(mask.bbox()) {
    const std::uint64_t total = static_cast<std::uint64_t>(width_) * height_;
    // Pad to whole 256-bit blocks so vector kernels never need a tail.
    const std::size_t words = static_cast<std::size_t>((total + 255) / 256 * 4);
    words_.assign(words, 0);
    mask.for_each_interval([&](std::uint64_t begin, std::uint64_t end) {
        while (begin < end) {
            const std::uint64_t word = begin / 64;
            const unsigned offset = static_cast<unsigned>(begin % 64);
            const std::uint64_t span = std::min<std::uint64_t>(64 - offset, end - begin);
            const std::uint64_t bits = span == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << span) - 1);
            words_[word] |= bits << offset;
            begin += span;
        }
    });
}

std::uint64_t intersection_area(const PackedMask& a, const PackedMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::DimensionMismatch, "masks have different dimensions");
    }
    if (!a.bbox().intersects(b.bbox())) return 0;
    const auto w = static_cast<std::uint64_t>(a.width());
    const int row0 = std::max(a.bbox().y0, b.bbox().y0);
    const int row1 = std::min(a.bbox().y1, b.bbox().y1);
    const std::size_t first = static_cast<std::size_t>(row0 * w / 64);
    const std::size_t last = static_cast<std::size_t>((row1 * w + 63) / 64);
    return kernels::active().and_popcount(a.words().data() + first, b.words().data() + first,
                                          last - first);
}

Labeling label_components(const Bitmap& bitmap) {
    Labeling out;
    out.width = bitmap.width;
    out.height = bitmap.height;
    out.labels.assign(bitmap.bits.size(), 0);
    std::vector<std::size_t> stack;
    const std::size_t w = static_cast<std::size_t>(bitmap.width);
    const std::size_t h = static_cast<std::size_t>(bitmap.height);
    for (std::size_t start = 0; start < bitmap.bits.size(); ++start) {
        if (!bitmap.bits[start] || out.labels[start] != 0) continue;
        const int label = ++out.count;
        out.labels[start] = label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t r = p / w, c = p % w;
            auto visit = [&](std::size_t q) {
                if (bitmap.bits[q] && out.labels[q] == 0) {
                    out.labels[q] = label;
                    stack.push_back(q);
                }
            };
            if (c > 0) visit(p - 1);
            if (c + 1 < w) visit(p + 1);
            if (r > 0) visit(p - w);
            if (r + 1 < h) visit(p + w);
        }
    }
    return out;
}

}  // namespace ihcq
