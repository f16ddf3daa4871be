#pragma once

// Deterministic work splitting.  Items are partitioned into fixed-size blocks
// identified by index; workers claim blocks from an atomic counter and write
// results into per-block slots.  Because the block layout depends only on
// (n_items, block_size) and never on the worker count, a caller that folds
// the per-block results in index order gets bit-identical output for any
// parallelism level.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace purisk {

inline std::size_t block_count(std::size_t n_items, std::size_t block_size) {
    return (n_items + block_size - 1) / block_size;
}

// fn(block_index, begin, end) is invoked once per block, possibly from
// different threads, never twice for the same block.  Exceptions are captured
// and rethrown (the first one) on the calling thread.
inline void parallel_for_blocks(std::size_t n_items, std::size_t block_size, unsigned workers,
                                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n_items == 0) return;
    if (block_size == 0) block_size = 1;
    const std::size_t n_blocks = block_count(n_items, block_size);
    if (workers <= 1 || n_blocks == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::size_t begin = b * block_size;
            const std::size_t end = std::min(n_items, begin + block_size);
            fn(b, begin, end);
        }
        return;
    }
    if (workers > n_blocks) workers = static_cast<unsigned>(n_blocks);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto run = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            const std::size_t begin = b * block_size;
            const std::size_t end = std::min(n_items, begin + block_size);
            try {
                fn(b, begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace purisk
