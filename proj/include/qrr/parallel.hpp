// Copyright 2026 The qrr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace qrr {

// Seeds are split by hashing (master, label, index) so that every logical
// stream is fixed regardless of how work is scheduled.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(label)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t master, std::string_view label, uint64_t index = 0) {
    return Rng(derive_seed(master, label, index));
}

/// Row count of one sampling block. Each block draws from its own stream
/// seeded by (seed, label, block index), so sample k depends only on the seed
/// and k, never on the worker count or the total number of samples.
inline constexpr std::size_t kSampleBlock = 4096;

/// Worker cap from `QRR_THREADS`, falling back to the hardware count.
inline std::size_t thread_count() {
    if (const char *env = std::getenv("QRR_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs `body(block_index, begin, end)` over fixed-size blocks of [0, count).
/// Block boundaries depend only on `count` and `block`, never on the number
/// of workers, so per-block results reduce identically for any thread count.
template <typename Body>
void parallel_blocks(std::size_t count, std::size_t block, Body &&body) {
    if (count == 0) {
        return;
    }
    block = std::max<std::size_t>(1, block);
    const std::size_t num_blocks = (count + block - 1) / block;
    const std::size_t workers = std::min(thread_count(), num_blocks);
    auto run_block = [&](std::size_t b) {
        const std::size_t begin = b * block;
        body(b, begin, std::min(count, begin + block));
    };
    if (workers <= 1) {
        for (std::size_t b = 0; b < num_blocks; ++b) {
            run_block(b);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < num_blocks; b += workers) {
                    run_block(b);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace qrr
