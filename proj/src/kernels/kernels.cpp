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

#include "ihcq/kernels.hpp"

#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace ihcq::kernels {

const KernelTable& generic() {
    static const KernelTable table{"generic", generic_impl::popcount, generic_impl::and_popcount,
                                   generic_impl::od_project};
    return table;
}

const KernelTable* avx2() {
#if defined(IHCQ_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    static const KernelTable table{"avx2", avx2_impl::popcount, avx2_impl::and_popcount,
                                   avx2_impl::od_project};
    return supported ? &table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon() {
#if defined(IHCQ_HAVE_NEON)
    static const KernelTable table{"neon", neon_impl::popcount, neon_impl::and_popcount,
                                   neon_impl::od_project};
    return &table;
#else
    return nullptr;
#endif
}

std::vector<const KernelTable*> available() {
    std::vector<const KernelTable*> out{&generic()};
    if (const auto* t = avx2()) out.push_back(t);
    if (const auto* t = neon()) out.push_back(t);
    return out;
}

namespace {

const KernelTable& select() {
    const auto tables = available();
    if (const char* forced = std::getenv("IHCQ_SIMD")) {
        for (const auto* t : tables) {
            if (t->name == std::string_view(forced)) return *t;
        }
    }
    return *tables.back();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace ihcq::kernels
