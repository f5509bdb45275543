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

#include "ihcq/image.hpp"

#include <algorithm>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "ihcq/error.hpp"

namespace ihcq {

namespace {

RgbImage from_mat(const cv::Mat& bgr) {
    if (bgr.empty() || bgr.type() != CV_8UC3) {
        throw Error(ErrorCode::Io, "image could not be decoded as 8-bit colour");
    }
    RgbImage out(bgr.cols, bgr.rows);
    for (int r = 0; r < bgr.rows; ++r) {
        const auto* src = bgr.ptr<std::uint8_t>(r);
        auto* dst = out.at(r, 0);
        for (int c = 0; c < bgr.cols; ++c) {
            dst[3 * c] = src[3 * c + 2];
            dst[3 * c + 1] = src[3 * c + 1];
            dst[3 * c + 2] = src[3 * c];
        }
    }
    return out;
}

cv::Mat to_mat(const RgbImage& image) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int r = 0; r < image.height; ++r) {
        const auto* src = image.at(r, 0);
        auto* dst = bgr.ptr<std::uint8_t>(r);
        for (int c = 0; c < image.width; ++c) {
            dst[3 * c] = src[3 * c + 2];
            dst[3 * c + 1] = src[3 * c + 1];
            dst[3 * c + 2] = src[3 * c];
        }
    }
    return bgr;
}

std::vector<std::uint8_t> encode(const RgbImage& image, const std::string& ext, const std::vector<int>& params) {
    if (image.width <= 0 || image.height <= 0) throw Error(ErrorCode::InvalidInput, "empty image");
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(ext, to_mat(image), bytes, params)) {
        throw Error(ErrorCode::Io, "image encoding failed");
    }
    return bytes;
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw Error(ErrorCode::Io, "cannot read image: " + path.string());
    return from_mat(m);
}

RgbImage decode_image(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) throw Error(ErrorCode::Io, "empty image data");
    return from_mat(cv::imdecode(bytes, cv::IMREAD_COLOR));
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    // Fixed compression level so the same pixels always give the same bytes.
    return encode(image, ".png", {cv::IMWRITE_PNG_COMPRESSION, 6});
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
    return encode(image, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

RgbImage crop(const RgbImage& image, int x, int y, int w, int h) {
    const int x1 = std::min(image.width, x + w), y1 = std::min(image.height, y + h);
    if (x < 0 || y < 0 || x1 <= x || y1 <= y) throw Error(ErrorCode::InvalidInput, "crop outside image");
    RgbImage out(x1 - x, y1 - y);
    for (int r = y; r < y1; ++r) std::copy_n(image.at(r, x), 3 * (x1 - x), out.at(r - y, 0));
    return out;
}

RgbImage halve(const RgbImage& image) {
    RgbImage out((image.width + 1) / 2, (image.height + 1) / 2);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            unsigned sum[3] = {0, 0, 0};
            unsigned n = 0;
            for (int dr = 0; dr < 2; ++dr) {
                for (int dc = 0; dc < 2; ++dc) {
                    const int rr = 2 * r + dr, cc = 2 * c + dc;
                    if (rr >= image.height || cc >= image.width) continue;
                    const auto* p = image.at(rr, cc);
                    for (int k = 0; k < 3; ++k) sum[k] += p[k];
                    ++n;
                }
            }
            auto* q = out.at(r, c);
            for (int k = 0; k < 3; ++k) q[k] = static_cast<std::uint8_t>((sum[k] + n / 2) / n);
        }
    }
    return out;
}

}  // namespace ihcq
