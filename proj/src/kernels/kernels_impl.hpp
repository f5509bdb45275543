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

#include <cstddef>
#include <cstdint>

namespace ihcq::kernels {

#define IHCQ_DECLARE_KERNELS(ns)                                                                \
    namespace ns {                                                                              \
    std::uint64_t popcount(const std::uint64_t* words, std::size_t n);                          \
    std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t n);  \
    void od_project(const std::uint8_t* rgb, std::size_t pixels, const float* od_lut,           \
                    const float* unmix, float* out_a, float* out_b);                            \
    }

IHCQ_DECLARE_KERNELS(generic_impl)
#if defined(IHCQ_HAVE_AVX2)
IHCQ_DECLARE_KERNELS(avx2_impl)
#endif
#if defined(IHCQ_HAVE_NEON)
IHCQ_DECLARE_KERNELS(neon_impl)
#endif

#undef IHCQ_DECLARE_KERNELS

}  // namespace ihcq::kernels
