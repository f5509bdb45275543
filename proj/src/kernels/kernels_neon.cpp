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

#include <arm_neon.h>

#include <bit>

#include "kernels_impl.hpp"

namespace ihcq::kernels::neon_impl {

namespace {

inline std::uint64_t count_block(uint8x16_t v) {
    const uint8x16_t bytes = vcntq_u8(v);
    return vaddlvq_u8(bytes);
}

}  // namespace

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        total += count_block(vreinterpretq_u8_u64(vld1q_u64(words + i)));
    }
    for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
    return total;
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t v = vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i));
        total += count_block(vreinterpretq_u8_u64(v));
    }
    for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    return total;
}

void od_project(const std::uint8_t* rgb, std::size_t pixels, const float* od_lut,
                const float* unmix, float* out_a, float* out_b) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= pixels; i += 4) {
        const uint8_t* p = rgb + 3 * i;
        // No gather on NEON: table lookups stay scalar, the arithmetic is vector.
        const float rv[4] = {od_lut[p[0]], od_lut[p[3]], od_lut[p[6]], od_lut[p[9]]};
        const float gv[4] = {od_lut[p[1]], od_lut[p[4]], od_lut[p[7]], od_lut[p[10]]};
        const float bv[4] = {od_lut[p[2]], od_lut[p[5]], od_lut[p[8]], od_lut[p[11]]};
        const float32x4_t r = vld1q_f32(rv), g = vld1q_f32(gv), b = vld1q_f32(bv);

        float32x4_t a_val = vmulq_n_f32(r, unmix[0]);
        a_val = vaddq_f32(a_val, vmulq_n_f32(g, unmix[1]));
        a_val = vaddq_f32(a_val, vmulq_n_f32(b, unmix[2]));
        float32x4_t b_val = vmulq_n_f32(r, unmix[3]);
        b_val = vaddq_f32(b_val, vmulq_n_f32(g, unmix[4]));
        b_val = vaddq_f32(b_val, vmulq_n_f32(b, unmix[5]));
        vst1q_f32(out_a + i, vmaxq_f32(a_val, zero));
        vst1q_f32(out_b + i, vmaxq_f32(b_val, zero));
    }
    if (i < pixels) {
        generic_impl::od_project(rgb + 3 * i, pixels - i, od_lut, unmix, out_a + i, out_b + i);
    }
}

}  // namespace ihcq::kernels::neon_impl
