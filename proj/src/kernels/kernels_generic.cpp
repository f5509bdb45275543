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

#include <bit>

#include "kernels_impl.hpp"

namespace ihcq::kernels::generic_impl {

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
    return total;
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    }
    return total;
}

void od_project(const std::uint8_t* rgb, std::size_t pixels, const float* od_lut,
                const float* unmix, float* out_a, float* out_b) {
    for (std::size_t i = 0; i < pixels; ++i) {
        const float r = od_lut[rgb[3 * i]];
        const float g = od_lut[rgb[3 * i + 1]];
        const float b = od_lut[rgb[3 * i + 2]];
        float a_val = unmix[0] * r;
        a_val = a_val + unmix[1] * g;
        a_val = a_val + unmix[2] * b;
        float b_val = unmix[3] * r;
        b_val = b_val + unmix[4] * g;
        b_val = b_val + unmix[5] * b;
        out_a[i] = a_val > 0.0f ? a_val : 0.0f;
        out_b[i] = b_val > 0.0f ? b_val : 0.0f;
    }
}

}  // namespace ihcq::kernels::generic_impl
