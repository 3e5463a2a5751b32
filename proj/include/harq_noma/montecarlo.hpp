// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo outage estimation. A trial draws K gains per user and declares
// outage for user i when any message j in [i, M] ends below its rate after K
// rounds. Trials are addressed by index, so any two estimates that share a
// seed are evaluated on common random numbers.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "model.hpp"
#include "mutual_info.hpp"
#include "stats.hpp"

namespace harq_noma {

inline constexpr std::uint64_t kDefaultTrials = 10'000'000;

struct OutageEstimate {
    double p_hat = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t seed = 0;

    double standard_error() const { return binomial_se(p_hat, trials); }
};

struct McOptions {
    unsigned workers = default_workers();
};

inline OutageEstimate make_estimate(std::uint64_t failures, std::uint64_t trials, std::uint64_t seed) {
    const Interval ci = wilson_interval(failures, trials);
    return {static_cast<double>(failures) / static_cast<double>(trials), trials, failures, ci.low, ci.high, seed};
}

namespace detail {

inline void check_user(const EffectiveConfig& eff, int user) {
    if (user < 1 || user > eff.num_users())
        throw std::out_of_range("user " + std::to_string(user) + " outside [1, " +
                                std::to_string(eff.num_users()) + "]");
}

inline void check_trials(std::uint64_t trials) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
}

} // namespace detail

/// Outage indicator of one trial under the simple strategy. `rounds`
/// overrides K (used for paired comparisons across round budgets).
inline bool outage_trial(const EffectiveConfig& eff, int user, HarqScheme scheme, std::uint64_t seed,
                         std::uint64_t trial, int rounds = 0) {
    const SystemConfig& cfg = eff.base;
    const int k_max = rounds > 0 ? rounds : cfg.max_rounds;
    thread_local std::vector<double> gains;
    gains.resize(static_cast<std::size_t>(k_max));
    const double mean = eff.mean_gain(user);
    for (int k = 1; k <= k_max; ++k) gains[static_cast<std::size_t>(k - 1)] = sample_gain(seed, trial, user, k, mean);

    const double noise = eff.noise_var(user);
    for (int j = user; j <= cfg.num_users; ++j) {
        const double pj = cfg.power(j);
        const double ij = eff.interference_power(j);
        InfoAccumulator acc(scheme);
        for (double a : gains) acc.add(layer_sinr(a, pj, ij, noise));
        if (acc.bits() < cfg.rate(j)) return true;
    }
    return false;
}

/// First round after which user 1 holds both x_2 and x_1, or 0 if that never
/// happens within K rounds.
inline int power_efficient_decoding_round(const EffectiveConfig& eff, HarqScheme scheme, std::uint64_t seed,
                                          std::uint64_t trial) {
    const SystemConfig& cfg = eff.base;
    InfoAccumulator for_x2(scheme);
    InfoAccumulator for_x1(scheme);
    const double noise = eff.noise_var(1);
    for (int k = 1; k <= cfg.max_rounds; ++k) {
        const double a = sample_gain(seed, trial, 1, k, eff.mean_gain(1));
        for_x2.add(layer_sinr(a, cfg.power(2), cfg.power(1), noise));
        for_x1.add(layer_sinr(a, cfg.power(1), 0.0, noise));
        if (for_x2.bits() >= cfg.rate(2) && for_x1.bits() >= cfg.rate(1)) return k;
    }
    return 0;
}

/// User-2 outage indicator under the power-efficient strategy: once user 1
/// has decoded everything at round l < K, rounds l+1..K carry x_2 alone.
inline bool outage_trial_power_efficient(const EffectiveConfig& eff, HarqScheme scheme, std::uint64_t seed,
                                         std::uint64_t trial) {
    const SystemConfig& cfg = eff.base;
    if (cfg.num_users != 2) throw std::invalid_argument("power-efficient strategy supported for M=2 only");
    const int released = power_efficient_decoding_round(eff, scheme, seed, trial);
    const int shared_rounds = (released == 0) ? cfg.max_rounds : released;
    const double noise = eff.noise_var(2);
    InfoAccumulator acc(scheme);
    for (int k = 1; k <= cfg.max_rounds; ++k) {
        const double a = sample_gain(seed, trial, 2, k, eff.mean_gain(2));
        const double interference = k <= shared_rounds ? cfg.power(1) : 0.0;
        acc.add(layer_sinr(a, cfg.power(2), interference, noise));
    }
    return acc.bits() < cfg.rate(2);
}

inline OutageEstimate estimate_outage(const EffectiveConfig& eff, int user, HarqScheme scheme,
                                      std::uint64_t trials, std::uint64_t seed, const McOptions& opts = {}) {
    detail::check_user(eff, user);
    detail::check_trials(trials);
    const std::uint64_t failures = parallel_count(
        trials, opts.workers, [&](std::uint64_t t) { return outage_trial(eff, user, scheme, seed, t); });
    return make_estimate(failures, trials, seed);
}

inline OutageEstimate estimate_outage(const SystemConfig& cfg, int user, HarqScheme scheme, std::uint64_t trials,
                                      std::uint64_t seed, const McOptions& opts = {}) {
    return estimate_outage(apply_imperfect_csi(cfg), user, scheme, trials, seed, opts);
}

/// User-2 outage under the power-efficient strategy.
inline OutageEstimate estimate_outage_power_efficient(const SystemConfig& cfg, HarqScheme scheme,
                                                      std::uint64_t trials, std::uint64_t seed,
                                                      const McOptions& opts = {}) {
    if (cfg.num_users != 2) throw std::invalid_argument("power-efficient strategy supported for M=2 only");
    if (cfg.strategy != Strategy::PowerEfficient)
        throw std::invalid_argument("config strategy is not power_efficient");
    detail::check_trials(trials);
    const EffectiveConfig eff = apply_imperfect_csi(cfg);
    const std::uint64_t failures = parallel_count(trials, opts.workers, [&](std::uint64_t t) {
        return outage_trial_power_efficient(eff, scheme, seed, t);
    });
    return make_estimate(failures, trials, seed);
}

} // namespace harq_noma
