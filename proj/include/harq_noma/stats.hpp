// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace harq_noma {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// 95% Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t failures, std::uint64_t trials, double z = kZ95) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: trials must be positive");
    if (failures > trials) throw std::invalid_argument("wilson_interval: failures exceed trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(failures) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (failures == 0) ci.low = 0.0;
    if (failures == trials) ci.high = 1.0;
    return ci;
}

/// Binomial standard error sqrt(p(1-p)/n).
inline double binomial_se(double p, std::uint64_t trials) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Counts indices in [0, n) for which `pred(index)` holds. The range is cut
/// into contiguous slices, one per worker; integer addition makes the total
/// independent of the worker count.
template <class Pred>
std::uint64_t parallel_count(std::uint64_t n, unsigned workers, Pred pred) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 4096) {
        std::uint64_t hits = 0;
        for (std::uint64_t t = 0; t < n; ++t) hits += pred(t) ? 1u : 0u;
        return hits;
    }
    std::vector<std::uint64_t> partial(workers, 0);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t begin = n * w / workers;
        const std::uint64_t end = n * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
            std::uint64_t hits = 0;
            for (std::uint64_t t = begin; t < end; ++t) hits += pred(t) ? 1u : 0u;
            partial[w] = hits;
        });
    }
    for (auto& th : pool) th.join();
    std::uint64_t total = 0;
    for (auto h : partial) total += h;
    return total;
}

struct MomentSums {
    double sum = 0.0;
    double sum_sq = 0.0;
};

/// Sums f(i) and f(i)^2 over [0, n). Work is split into fixed-size blocks
/// whose partial sums are combined in block order, so the floating-point
/// result does not depend on the worker count.
template <class F>
MomentSums parallel_moments(std::uint64_t n, unsigned workers, F f) {
    constexpr std::uint64_t kBlock = 1u << 14;
    const std::uint64_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<MomentSums> partial(blocks);
    auto run_block = [&](std::uint64_t b) {
        MomentSums m;
        const std::uint64_t end = std::min(n, (b + 1) * kBlock);
        for (std::uint64_t i = b * kBlock; i < end; ++i) {
            const double v = f(i);
            m.sum += v;
            m.sum_sq += v * v;
        }
        partial[b] = m;
    };
    workers = std::max(1u, workers);
    if (workers == 1 || blocks < 2) {
        for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::uint64_t b = w; b < blocks; b += workers) run_block(b);
            });
        for (auto& th : pool) th.join();
    }
    MomentSums total;
    for (const auto& m : partial) {
        total.sum += m.sum;
        total.sum_sq += m.sum_sq;
    }
    return total;
}

} // namespace harq_noma
