// SPDX-License-Identifier: Apache-2.0
//
// Per-round SINR under SIC and the accumulated mutual information of the
// three HARQ combining rules.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace harq_noma {

/// SINR of message `target` (1-based) at a receiver with power gain `gain`.
/// Messages 1..target-1 are still undecoded and act as noise.
inline double per_round_sinr(double gain, int target, std::span<const double> powers, double noise_var = 1.0) {
    if (target < 1 || target > static_cast<int>(powers.size()))
        throw std::out_of_range("target message " + std::to_string(target) + " outside [1, " +
                                std::to_string(powers.size()) + "]");
    double interference = 0.0;
    for (int l = 0; l < target - 1; ++l) interference += powers[static_cast<std::size_t>(l)];
    return gain * powers[static_cast<std::size_t>(target - 1)] / (gain * interference + noise_var);
}

/// Same SINR with the interference sum already known.
inline double layer_sinr(double gain, double own_power, double interference_power, double noise_var) {
    return gain * own_power / (gain * interference_power + noise_var);
}

/// SINRs observed by user `observer` for message `target` over K rounds.
struct SinrSequence {
    std::vector<double> values;
    int observer = 0;
    int target = 0;
};

struct AccumulatedInfo {
    double bits = 0.0;
    HarqScheme scheme = HarqScheme::TypeI;
    int rounds_used = 0;
};

/// Running accumulation, one SINR at a time. Used by the simulators to avoid
/// materializing per-trial sequences.
class InfoAccumulator {
public:
    explicit InfoAccumulator(HarqScheme scheme = HarqScheme::TypeI) : scheme_(scheme) {}

    void reset() noexcept {
        state_ = 0.0;
        rounds_ = 0;
    }

    void add(double sinr) noexcept {
        switch (scheme_) {
        case HarqScheme::TypeI: state_ = std::max(state_, sinr); break;
        case HarqScheme::ChaseCombining: state_ += sinr; break;
        case HarqScheme::IncrementalRedundancy: state_ += std::log1p(sinr); break;
        }
        ++rounds_;
    }

    double bits() const noexcept {
        const double nats = scheme_ == HarqScheme::IncrementalRedundancy ? state_ : std::log1p(state_);
        return nats / std::numbers::ln2;
    }

    int rounds() const noexcept { return rounds_; }
    HarqScheme scheme() const noexcept { return scheme_; }

private:
    HarqScheme scheme_;
    double state_ = 0.0;  // max SINR, SINR sum, or nats sum
    int rounds_ = 0;
};

/// Type I: max_k log2(1+g_k); CC: log2(1 + sum_k g_k); IR: sum_k log2(1+g_k).
inline AccumulatedInfo accumulate(HarqScheme scheme, std::span<const double> sinrs) {
    if (sinrs.empty()) throw std::invalid_argument("accumulate: empty SINR sequence");
    InfoAccumulator acc(scheme);
    for (double g : sinrs) acc.add(g);
    return {acc.bits(), scheme, acc.rounds()};
}

inline AccumulatedInfo accumulate(HarqScheme scheme, const SinrSequence& seq) {
    return accumulate(scheme, std::span<const double>(seq.values));
}

/// Accumulation under the power-efficient strategy: rounds 1..l carry the
/// superposed signal (`interfered`), rounds l+1..K carry x_2 alone (`clean`).
/// `rounds` is K and must equal the combined length.
inline AccumulatedInfo accumulate_power_efficient(HarqScheme scheme, std::span<const double> interfered,
                                                  std::span<const double> clean, int rounds) {
    if (static_cast<int>(interfered.size() + clean.size()) != rounds)
        throw std::invalid_argument("accumulate_power_efficient: " + std::to_string(interfered.size()) + " + " +
                                    std::to_string(clean.size()) + " SINRs for K = " + std::to_string(rounds));
    if (rounds < 1) throw std::invalid_argument("accumulate_power_efficient: K must be at least 1");
    InfoAccumulator acc(scheme);
    for (double g : interfered) acc.add(g);
    for (double g : clean) acc.add(g);
    return {acc.bits(), scheme, acc.rounds()};
}

} // namespace harq_noma
