// SPDX-License-Identifier: Apache-2.0
//
// Rayleigh block fading: one exponential power gain per user per HARQ round,
// independent across rounds. Imperfect CSI is folded into an effective mean
// gain and an inflated noise variance.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace harq_noma {

/// Gains alpha[i][k] for user i = 1..M, round k = 1..K (stored zero-based).
class GainMatrix {
public:
    GainMatrix(int users, int rounds)
        : users_(users), rounds_(rounds), data_(static_cast<std::size_t>(users * rounds), 0.0) {}

    int users() const noexcept { return users_; }
    int rounds() const noexcept { return rounds_; }

    double& at(int user, int round) { return data_[index(user, round)]; }
    double at(int user, int round) const { return data_[index(user, round)]; }

    /// Gains of one user across all rounds.
    std::span<const double> row(int user) const {
        return std::span<const double>(data_).subspan(index(user, 1), static_cast<std::size_t>(rounds_));
    }

    friend bool operator==(const GainMatrix&, const GainMatrix&) = default;

private:
    std::size_t index(int user, int round) const {
        return static_cast<std::size_t>((user - 1) * rounds_ + (round - 1));
    }

    int users_;
    int rounds_;
    std::vector<double> data_;
};

/// Inverse-CDF exponential draw, keyed by (seed, trial, user, round).
/// Extending K or adding users never changes previously drawn entries.
inline double sample_gain(std::uint64_t seed, std::uint64_t trial, int user, int round, double mean_gain) {
    const double u = keyed_uniform(seed, trial, static_cast<std::uint32_t>(user),
                                   static_cast<std::uint32_t>(round));
    return -mean_gain * std::log(u);
}

inline GainMatrix sample_gains(std::span<const double> mean_gains, int rounds, std::uint64_t seed,
                               std::uint64_t trial) {
    const int users = static_cast<int>(mean_gains.size());
    GainMatrix g(users, rounds);
    for (int i = 1; i <= users; ++i)
        for (int k = 1; k <= rounds; ++k)
            g.at(i, k) = sample_gain(seed, trial, i, k, mean_gains[static_cast<std::size_t>(i - 1)]);
    return g;
}

inline GainMatrix sample_gains(const SystemConfig& cfg, std::uint64_t seed, std::uint64_t trial) {
    return sample_gains(cfg.mean_gains, cfg.max_rounds, seed, trial);
}

/// Config as seen by the receivers once the channel estimation error has
/// been moved into the noise term. Also caches the per-layer interference
/// sums used by every SINR evaluation.
struct EffectiveConfig {
    SystemConfig base;
    std::vector<double> mean_gains;       // mean_gain - csi_error_var
    std::vector<double> noise_vars;       // 1 + csi_error_var * total power
    std::vector<double> interference;     // sum_{l<j} P_l, index j-1

    int num_users() const noexcept { return base.num_users; }
    int max_rounds() const noexcept { return base.max_rounds; }
    double mean_gain(int user) const { return mean_gains.at(static_cast<std::size_t>(user - 1)); }
    double noise_var(int user) const { return noise_vars.at(static_cast<std::size_t>(user - 1)); }
    double interference_power(int target) const {
        return interference.at(static_cast<std::size_t>(target - 1));
    }
};

inline EffectiveConfig apply_imperfect_csi(const SystemConfig& cfg) {
    EffectiveConfig eff;
    eff.base = cfg;
    const double total = cfg.total_power();
    for (int i = 1; i <= cfg.num_users; ++i) {
        const double s2 = cfg.csi_error_vars.empty() ? 0.0 : cfg.csi_error_vars[static_cast<std::size_t>(i - 1)];
        const double g = cfg.mean_gain(i) - s2;
        if (!(g > 0.0))
            throw ConfigError("csi_error_vars", "error variance must be below the mean gain of user " +
                                                    std::to_string(i));
        eff.mean_gains.push_back(g);
        eff.noise_vars.push_back(1.0 + s2 * total);
        eff.interference.push_back(cfg.interference_power(i));
    }
    return eff;
}

} // namespace harq_noma
