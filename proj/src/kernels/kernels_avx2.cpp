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

// Compiled with -mavx2 only; callers reach it through kernels::avx2() after a
// runtime CPU check.
#include <immintrin.h>

#include <bit>

#include "kernels_impl.hpp"

namespace ihcq::kernels::avx2_impl {

namespace {

inline __m256i popcount_bytes(__m256i v) {
    const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                            0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low_mask = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, low_mask);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
    return _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
}

inline std::uint64_t horizontal_sum(__m256i acc) {
    return static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 0)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 1)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 2)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 3));
}

}  // namespace

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words + i));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcount_bytes(v), zero));
    }
    std::uint64_t total = horizontal_sum(acc);
    for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
    return total;
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcount_bytes(_mm256_and_si256(va, vb)), zero));
    }
    std::uint64_t total = horizontal_sum(acc);
    for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    return total;
}

void od_project(const std::uint8_t* rgb, std::size_t pixels, const float* od_lut,
                const float* unmix, float* out_a, float* out_b) {
    // Byte shuffles that pull the R, G and B values of 8 interleaved pixels
    // out of bytes [0,16) and [16,24); 0x80 lanes produce zero.
    const __m128i r_lo = _mm_setr_epi8(0, 3, 6, 9, 12, 15, -128, -128, -128, -128, -128, -128, -128, -128, -128, -128);
    const __m128i r_hi = _mm_setr_epi8(-128, -128, -128, -128, -128, -128, 2, 5, -128, -128, -128, -128, -128, -128, -128, -128);
    const __m128i g_lo = _mm_setr_epi8(1, 4, 7, 10, 13, -128, -128, -128, -128, -128, -128, -128, -128, -128, -128, -128);
    const __m128i g_hi = _mm_setr_epi8(-128, -128, -128, -128, -128, 0, 3, 6, -128, -128, -128, -128, -128, -128, -128, -128);
    const __m128i b_lo = _mm_setr_epi8(2, 5, 8, 11, 14, -128, -128, -128, -128, -128, -128, -128, -128, -128, -128, -128);
    const __m128i b_hi = _mm_setr_epi8(-128, -128, -128, -128, -128, 1, 4, 7, -128, -128, -128, -128, -128, -128, -128, -128);

    const __m256 u0 = _mm256_set1_ps(unmix[0]), u1 = _mm256_set1_ps(unmix[1]),
                 u2 = _mm256_set1_ps(unmix[2]), u3 = _mm256_set1_ps(unmix[3]),
                 u4 = _mm256_set1_ps(unmix[4]), u5 = _mm256_set1_ps(unmix[5]);
    const __m256 zero = _mm256_setzero_ps();

    std::size_t i = 0;
    for (; i + 8 <= pixels; i += 8) {
        const std::uint8_t* p = rgb + 3 * i;
        const __m128i lo = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p));
        const __m128i hi = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(p + 16));
        const __m128i r8 = _mm_or_si128(_mm_shuffle_epi8(lo, r_lo), _mm_shuffle_epi8(hi, r_hi));
        const __m128i g8 = _mm_or_si128(_mm_shuffle_epi8(lo, g_lo), _mm_shuffle_epi8(hi, g_hi));
        const __m128i b8 = _mm_or_si128(_mm_shuffle_epi8(lo, b_lo), _mm_shuffle_epi8(hi, b_hi));
        const __m256 r = _mm256_i32gather_ps(od_lut, _mm256_cvtepu8_epi32(r8), 4);
        const __m256 g = _mm256_i32gather_ps(od_lut, _mm256_cvtepu8_epi32(g8), 4);
        const __m256 b = _mm256_i32gather_ps(od_lut, _mm256_cvtepu8_epi32(b8), 4);

        __m256 a_val = _mm256_mul_ps(u0, r);
        a_val = _mm256_add_ps(a_val, _mm256_mul_ps(u1, g));
        a_val = _mm256_add_ps(a_val, _mm256_mul_ps(u2, b));
        __m256 b_val = _mm256_mul_ps(u3, r);
        b_val = _mm256_add_ps(b_val, _mm256_mul_ps(u4, g));
        b_val = _mm256_add_ps(b_val, _mm256_mul_ps(u5, b));
        _mm256_storeu_ps(out_a + i, _mm256_max_ps(a_val, zero));
        _mm256_storeu_ps(out_b + i, _mm256_max_ps(b_val, zero));
    }
    if (i < pixels) {
        generic_impl::od_project(rgb + 3 * i, pixels - i, od_lut, unmix, out_a + i, out_b + i);
    }
}

}  // namespace ihcq::kernels::avx2_impl
