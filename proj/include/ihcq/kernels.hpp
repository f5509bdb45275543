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
#include <string_view>
#include <vector>

// Data-parallel inner loops with a scalar reference and vector variants.
// Every variant must produce bit-identical results to the generic one;
// tests/unit/test_kernels.cpp enforces this for each table the CPU supports.
namespace ihcq::kernels {

using PopcountFn = std::uint64_t (*)(const std::uint64_t* words, std::size_t n);
using AndPopcountFn = std::uint64_t (*)(const std::uint64_t* a, const std::uint64_t* b,
                                        std::size_t n);
/// For each RGB pixel: od_c = od_lut[value_c], then
///   out_a = max(0, (u[0]*od_r + u[1]*od_g) + u[2]*od_b)
///   out_b = max(0, (u[3]*od_r + u[4]*od_g) + u[5]*od_b)
/// evaluated with that exact association and no fused multiply-add.
using OdProjectFn = void (*)(const std::uint8_t* rgb, std::size_t pixels, const float* od_lut,
                             const float* unmix, float* out_a, float* out_b);

struct KernelTable {
    std::string_view name;
    PopcountFn popcount;
    AndPopcountFn and_popcount;
    OdProjectFn od_project;
};

/// Portable reference implementation.
const KernelTable& generic();

/// Vector tables, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();
const KernelTable* neon();

/// Every table usable on this machine, generic first.
std::vector<const KernelTable*> available();

/// Best supported table, chosen once. IHCQ_SIMD=generic|avx2|neon forces a
/// specific table when it is available.
const KernelTable& active();

}  // namespace ihcq::kernels
