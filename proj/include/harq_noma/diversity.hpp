// SPDX-License-Identifier: Apache-2.0
//
// Closed-form diversity orders and two-point empirical slopes.

#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace harq_noma {

struct DiversityReport {
    HarqScheme scheme = HarqScheme::TypeI;
    Strategy strategy = Strategy::Simple;
    int max_rounds = 0;
    std::vector<int> per_user;                 // d_i, index i-1
    std::vector<std::vector<int>> pairwise;    // d_{i->j}, [i-1][j-1]; -1 below the diagonal
    std::vector<std::optional<double>> empirical;
    std::vector<int> conditional;              // d_{2,l} for l = 1..K (power-efficient only)

    int user(int i) const { return per_user.at(static_cast<std::size_t>(i - 1)); }
    int pair(int i, int j) const {
        return pairwise.at(static_cast<std::size_t>(i - 1)).at(static_cast<std::size_t>(j - 1));
    }
};

namespace detail {

// floor(x), except that values within 1e-9 (relative) of an integer snap to
// it, so 2.9999999999 counts as 3.
inline long snapped_floor(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<long>(r);
    return static_cast<long>(std::floor(x));
}

inline long positive_part(long v) { return v > 0 ? v : 0; }

} // namespace detail

/// Diversity order of decoding a message with ratio `ratio` at rate `rate`
/// after K rounds.
inline int pairwise_diversity(HarqScheme scheme, int rounds, double rate, const PowerRatio& ratio) {
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("rate must be non-negative");
    if (ratio.is_unbounded()) return rounds;
    const double c = ratio.value();
    if (!(c > 0.0)) throw std::invalid_argument("power ratio must be positive");
    const long k = rounds;
    switch (scheme) {
    case HarqScheme::TypeI:
        return static_cast<int>(k * detail::positive_part(1 - detail::snapped_floor(std::expm1(rate * std::numbers::ln2) / c)));
    case HarqScheme::ChaseCombining:
        return static_cast<int>(detail::positive_part(k - detail::snapped_floor(std::expm1(rate * std::numbers::ln2) / c)));
    case HarqScheme::IncrementalRedundancy:
        return static_cast<int>(detail::positive_part(k - detail::snapped_floor(rate / std::log2(1.0 + c))));
    }
    throw std::logic_error("unreachable");
}

inline int pairwise_diversity(HarqScheme scheme, int rounds, double rate, double ratio) {
    return pairwise_diversity(scheme, rounds, rate,
                              std::isinf(ratio) ? PowerRatio::unbounded() : PowerRatio::finite(ratio));
}

/// Diversity of a union of events: the slowest-decaying term wins.
inline int union_diversity(std::span<const int> orders) {
    if (orders.empty()) throw std::invalid_argument("union_diversity: empty list");
    for (int d : orders)
        if (d < 0) throw std::invalid_argument("union_diversity: negative order " + std::to_string(d));
    return *std::min_element(orders.begin(), orders.end());
}

inline int union_diversity(std::initializer_list<int> orders) {
    return union_diversity(std::span<const int>(orders.begin(), orders.size()));
}

/// Per-user orders under the simple strategy: d_M = d_{M->M} and
/// d_i = min(d_{i->i}, d_{i+1}).
inline DiversityReport user_diversity(const SystemConfig& cfg, HarqScheme scheme) {
    const int m = cfg.num_users;
    const PowerRatios ratios = power_ratios(cfg);
    std::vector<int> to_layer(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j)
        to_layer[static_cast<std::size_t>(j - 1)] =
            pairwise_diversity(scheme, cfg.max_rounds, cfg.rate(j), ratios[static_cast<std::size_t>(j - 1)]);

    DiversityReport r;
    r.scheme = scheme;
    r.strategy = Strategy::Simple;
    r.max_rounds = cfg.max_rounds;
    r.per_user.assign(static_cast<std::size_t>(m), 0);
    r.pairwise.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(m), -1));
    r.empirical.assign(static_cast<std::size_t>(m), std::nullopt);
    for (int i = 1; i <= m; ++i)
        for (int j = i; j <= m; ++j)
            r.pairwise[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] =
                to_layer[static_cast<std::size_t>(j - 1)];
    r.per_user[static_cast<std::size_t>(m - 1)] = to_layer[static_cast<std::size_t>(m - 1)];
    for (int i = m - 1; i >= 1; --i)
        r.per_user[static_cast<std::size_t>(i - 1)] =
            std::min(to_layer[static_cast<std::size_t>(i - 1)], r.per_user[static_cast<std::size_t>(i)]);
    return r;
}

/// Order of Pr{user 2 misses x_2 | user 1 finished after l rounds}: l rounds
/// with interference followed by K-l interference-free ones.
inline int conditional_diversity_d2ell(HarqScheme scheme, int rounds, int ell, double rate, const PowerRatio& ratio) {
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (ell < 1 || ell > rounds)
        throw std::out_of_range("l = " + std::to_string(ell) + " outside [1, " + std::to_string(rounds) + "]");
    return pairwise_diversity(scheme, ell, rate, ratio) + (rounds - ell);
}

inline int conditional_diversity_d2ell(HarqScheme scheme, int rounds, int ell, double rate, double ratio) {
    return conditional_diversity_d2ell(scheme, rounds, ell, rate,
                                       std::isinf(ratio) ? PowerRatio::unbounded() : PowerRatio::finite(ratio));
}

/// Orders under the power-efficient strategy (M = 2). They match the simple
/// strategy; the conditional orders d_{2,l} are attached and
/// min_l (d_{1,l-1} + d_{2,l}) = d_2 is checked.
inline DiversityReport power_efficient_diversity(const SystemConfig& cfg, HarqScheme scheme) {
    if (cfg.num_users != 2) throw std::invalid_argument("power-efficient strategy supported for M=2 only");
    DiversityReport r = user_diversity(cfg, scheme);
    r.strategy = Strategy::PowerEfficient;
    const PowerRatio c = power_ratios(cfg)[1];
    const int k = cfg.max_rounds;
    const double r2 = cfg.rate(2);
    auto d1 = [&](int ell) { return ell == 0 ? 0 : std::min(ell, pairwise_diversity(scheme, ell, r2, c)); };
    int best = std::numeric_limits<int>::max();
    for (int ell = 1; ell <= k; ++ell) {
        const int d2l = conditional_diversity_d2ell(scheme, k, ell, r2, c);
        r.conditional.push_back(d2l);
        best = std::min(best, d1(ell - 1) + d2l);
    }
    if (best != r.user(2))
        throw std::logic_error("power-efficient decomposition gives " + std::to_string(best) + ", expected " +
                               std::to_string(r.user(2)));
    return r;
}

/// Two-point slope 10 (log10 p_low - log10 p_high) / delta_db, where p_high
/// is read delta_db above p_low.
inline double empirical_diversity(double p_low, double p_high, double delta_db) {
    if (!(p_low > 0.0) || !(p_high > 0.0) || p_low > 1.0 || p_high > 1.0)
        throw std::domain_error("empirical_diversity: probabilities must lie in (0, 1]");
    if (!(delta_db > 0.0)) throw std::invalid_argument("empirical_diversity: delta_db must be positive");
    return 10.0 * (std::log10(p_low) - std::log10(p_high)) / delta_db;
}

} // namespace harq_noma
