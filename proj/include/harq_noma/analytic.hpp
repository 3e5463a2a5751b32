// SPDX-License-Identifier: Apache-2.0
//
// Analytic outage results.
//
// Type I outage has a closed form. Chase combining and incremental
// redundancy reduce, after the substitution z_k = c / (alpha_k P_1 + 1), to
// the K-fold integrals
//
//   phi_K(g) = int_{[0,c]^K} exp(-(c/s) sum 1/z_k) prod z_k^-2 u(g + sum z_k - K c) dz
//   psi_K(g) = int_{[0,c]^K} exp(-(c/s) sum 1/z_k) prod z_k^-2 u(g - prod (1 + c - z_k)) dz
//
// with s = mean_gain * P_1, and
//
//   p_CC = (c/s)^K e^{K/s} phi_K(2^R - 1),   p_IR = (c/s)^K e^{K/s} psi_K(2^R).
//
// phi/psi are known exactly in a few regimes; elsewhere they are bracketed by
// splitting the last integration variable at a partition point Delta and
// recursing on K-1. All recursion runs on logarithms: (s/c)^K overflows long
// before the outage itself underflows.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "channel.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace harq_noma {

/// Partition rule: maps (current threshold, ratio c) to Delta in (0, c].
template <class P>
concept DeltaPolicy = requires(const P& p, double gamma, double c) {
    { p(gamma, c) } -> std::convertible_to<double>;
};

/// Delta = (c - mod(g, c)) / 2.
struct ChaseDelta {
    double operator()(double gamma, double c) const { return (c - std::fmod(gamma, c)) / 2.0; }
};

/// Delta = (1 + c - exp(mod(ln g, ln(1 + c)))) / 2.
struct IncrementalDelta {
    double operator()(double gamma, double c) const {
        return (1.0 + c - std::exp(std::fmod(std::log(gamma), std::log1p(c)))) / 2.0;
    }
};

/// Delta = fraction * c, whatever the threshold.
struct FixedFractionDelta {
    double fraction = 0.5;
    double operator()(double, double c) const { return fraction * c; }
};

struct PhiParams {
    int rounds = 1;          // K
    double gamma = 0.0;      // threshold: 2^R - 1 for CC, 2^R for IR
    double ratio = 1.0;      // c
    double mean_gain = 1.0;  // effective mean gain of the observing user
    double p1 = 1.0;         // interfering power (P_1 for two users)

    double snr() const { return mean_gain * p1; }
};

enum class BoundQuantity { Phi, Psi, OutageTypeI, OutageCC, OutageIR };

struct BoundInterval {
    double lower = 0.0;
    double upper = 0.0;
    double log_lower = -std::numeric_limits<double>::infinity();
    double log_upper = -std::numeric_limits<double>::infinity();
    BoundQuantity quantity = BoundQuantity::Phi;
    PhiParams params;

    bool exact() const { return log_lower == log_upper; }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LogPair {
    double lo = kNegInf;
    double hi = kNegInf;
};

inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline void check_params(const PhiParams& p) {
    if (p.rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (!(p.ratio > 0.0) || !std::isfinite(p.ratio)) throw std::invalid_argument("ratio must be positive");
    if (!(p.mean_gain > 0.0)) throw std::invalid_argument("mean gain must be positive");
    if (!(p.p1 > 0.0)) throw std::invalid_argument("interfering power must be positive");
}

// log of (s/c)^K e^{-K/s}: the full-cube value of phi/psi.
inline double log_full_cube(int k, double c, double s) {
    return k * (std::log(s) - std::log(c)) - k / s;
}

// log of (s/c)(e^{-1/s} - e^{-(1 + excess)/s}), i.e. one dimension integrated
// from c/(1+excess) to c.
inline double log_single_slab(double c, double s, double excess) {
    return std::log(s) - std::log(c) - 1.0 / s + std::log(-std::expm1(-excess / s));
}

inline bool phi_is_exact(int k, double gamma, double c) { return k == 1 || gamma <= 0.0 || gamma >= k * c; }

inline double phi_log_exact(int k, double gamma, double c, double s) {
    if (gamma <= 0.0) return kNegInf;
    if (gamma >= k * c) return log_full_cube(k, c, s);
    // k == 1, 0 < gamma < c
    return log_single_slab(c, s, gamma / (c - gamma));
}

template <DeltaPolicy Policy>
LogPair phi_log_bounds(int k, double gamma, double c, double s, const Policy& policy) {
    if (phi_is_exact(k, gamma, c)) {
        const double v = phi_log_exact(k, gamma, c, s);
        return {v, v};
    }
    if (gamma < c) {
        const double gk = gamma / k;
        const double lo = -k * c / (s * (c - gk)) + k * std::log(gk / (c * (c - gk)));
        const double hi = -k / s + k * std::log(gamma / (c * (c - gamma)));
        return {lo, hi};
    }
    const double delta = policy(gamma, c);
    if (!(delta > 0.0 && delta <= c))
        throw std::domain_error("partition point " + std::to_string(delta) + " outside (0, " + std::to_string(c) + "]");
    const double step = std::log(s) - std::log(c);
    LogPair out;
    out.lo = step - 1.0 / s + phi_log_bounds(k - 1, gamma - c, c, s, policy).lo;
    const double near = delta < c ? std::log((c - delta) / (c * delta)) + phi_log_bounds(k - 1, gamma, c, s, policy).hi
                                   : kNegInf;
    const double far = step + phi_log_bounds(k - 1, gamma - c + delta, c, s, policy).hi;
    out.hi = -1.0 / s + log_add(near, far);
    return out;
}

inline bool psi_is_exact(int k, double gamma, double c) {
    return k == 1 || gamma <= 1.0 || gamma >= std::pow(1.0 + c, k);
}

inline double psi_log_exact(int k, double gamma, double c, double s) {
    if (gamma <= 1.0) return kNegInf;
    if (gamma >= std::pow(1.0 + c, k)) return log_full_cube(k, c, s);
    return log_single_slab(c, s, (gamma - 1.0) / (1.0 + c - gamma));
}

template <DeltaPolicy Policy>
LogPair psi_log_bounds(int k, double gamma, double c, double s, const Policy& policy) {
    if (psi_is_exact(k, gamma, c)) {
        const double v = psi_log_exact(k, gamma, c, s);
        return {v, v};
    }
    if (gamma < 1.0 + c) {
        const double root = std::pow(gamma, 1.0 / k);
        const double lo = -k * c / (s * (1.0 + c - root)) + k * std::log((root - 1.0) / (c * (1.0 + c - root)));
        const double hi = -k / s + k * std::log((gamma - 1.0) / (c * (1.0 + c - gamma)));
        return {lo, hi};
    }
    const double delta = policy(gamma, c);
    if (!(delta > 0.0 && delta <= c))
        throw std::domain_error("partition point " + std::to_string(delta) + " outside (0, " + std::to_string(c) + "]");
    const double step = std::log(s) - std::log(c);
    LogPair out;
    out.lo = step - 1.0 / s + psi_log_bounds(k - 1, gamma / (1.0 + c), c, s, policy).lo;
    const double near = delta < c ? std::log((c - delta) / (c * delta)) + psi_log_bounds(k - 1, gamma, c, s, policy).hi
                                   : kNegInf;
    const double far = step + psi_log_bounds(k - 1, gamma / (1.0 + c - delta), c, s, policy).hi;
    out.hi = -1.0 / s + log_add(near, far);
    return out;
}

inline BoundInterval make_interval(LogPair lp, BoundQuantity q, const PhiParams& p) {
    BoundInterval b;
    b.log_lower = lp.lo;
    b.log_upper = lp.hi;
    b.lower = std::exp(lp.lo);
    b.upper = std::exp(lp.hi);
    b.quantity = q;
    b.params = p;
    return b;
}

inline BoundInterval probability_interval(double lower, double upper, BoundQuantity q, const PhiParams& p) {
    BoundInterval b;
    b.lower = std::clamp(lower, 0.0, 1.0);
    b.upper = std::clamp(upper, b.lower, 1.0);
    b.log_lower = std::log(b.lower);
    b.log_upper = std::log(b.upper);
    b.quantity = q;
    b.params = p;
    return b;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Type I

/// Closed-form Type I outage of one layer: the receiver sees `own_power` for
/// the wanted message and `interference_power` from undecoded ones.
inline double type_i_outage(int rounds, double rate, double own_power, double interference_power, double mean_gain,
                            double noise_var = 1.0) {
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (!(mean_gain > 0.0)) throw std::invalid_argument("mean gain must be positive");
    if (!(own_power > 0.0) || interference_power < 0.0) throw std::invalid_argument("powers must be positive");
    const double g = std::exp2(rate) - 1.0;
    if (g <= 0.0) return 0.0;
    if (g * interference_power >= own_power) return 1.0;
    const double threshold = g * noise_var / (own_power - g * interference_power);
    return std::pow(-std::expm1(-threshold / mean_gain), rounds);
}

/// Ratio form: layer j with ratio c_j over interfering power `reference`.
/// An unbounded ratio means an interference-free layer of power `reference`.
inline double type_i_outage(int rounds, double rate, const PowerRatio& ratio, double mean_gain, double reference) {
    if (!(reference > 0.0)) throw std::invalid_argument("powers must be positive");
    if (ratio.is_unbounded()) return type_i_outage(rounds, rate, reference, 0.0, mean_gain);
    return type_i_outage(rounds, rate, ratio.value() * reference, reference, mean_gain);
}

/// Exact Type I outage of `user`. Every layer fails together with the
/// largest per-round gain, so the union collapses to the worst threshold.
inline double type_i_user_outage(const EffectiveConfig& eff, int user) {
    const SystemConfig& cfg = eff.base;
    double worst = 0.0;
    for (int j = user; j <= cfg.num_users; ++j) {
        const double g = std::exp2(cfg.rate(j)) - 1.0;
        if (g <= 0.0) continue;
        const double own = cfg.power(j);
        const double interf = eff.interference_power(j);
        if (g * interf >= own) return 1.0;
        worst = std::max(worst, g * eff.noise_var(user) / (own - g * interf));
    }
    if (worst == 0.0) return 0.0;
    return std::pow(-std::expm1(-worst / eff.mean_gain(user)), cfg.max_rounds);
}

// ---------------------------------------------------------------------------
// phi / psi

/// Exact phi_K in its closed regimes: g <= 0, g >= K c, or K = 1.
inline double phi_exact_base(const PhiParams& p) {
    detail::check_params(p);
    if (!detail::phi_is_exact(p.rounds, p.gamma, p.ratio))
        throw std::domain_error("phi_exact_base: (K, gamma) = (" + std::to_string(p.rounds) + ", " +
                                std::to_string(p.gamma) + ") is not a closed-form regime");
    return std::exp(detail::phi_log_exact(p.rounds, p.gamma, p.ratio, p.snr()));
}

template <DeltaPolicy Policy = ChaseDelta>
BoundInterval phi_bounds(const PhiParams& p, const Policy& policy = {}) {
    detail::check_params(p);
    if (p.gamma < 0.0) throw std::invalid_argument("phi_bounds: gamma must be non-negative");
    return detail::make_interval(detail::phi_log_bounds(p.rounds, p.gamma, p.ratio, p.snr(), policy),
                                 BoundQuantity::Phi, p);
}

/// Exact psi_K in its closed regimes: g <= 1, g >= (1+c)^K, or K = 1.
inline double psi_exact_base(const PhiParams& p) {
    detail::check_params(p);
    if (!detail::psi_is_exact(p.rounds, p.gamma, p.ratio))
        throw std::domain_error("psi_exact_base: (K, gamma) = (" + std::to_string(p.rounds) + ", " +
                                std::to_string(p.gamma) + ") is not a closed-form regime");
    return std::exp(detail::psi_log_exact(p.rounds, p.gamma, p.ratio, p.snr()));
}

template <DeltaPolicy Policy = IncrementalDelta>
BoundInterval psi_bounds(const PhiParams& p, const Policy& policy = {}) {
    detail::check_params(p);
    if (p.gamma < 1.0) throw std::invalid_argument("psi_bounds: gamma must be at least 1");
    return detail::make_interval(detail::psi_log_bounds(p.rounds, p.gamma, p.ratio, p.snr(), policy),
                                 BoundQuantity::Psi, p);
}

// ---------------------------------------------------------------------------
// Outage bounds

namespace detail {

// P(Gamma(k, 1) < x), summing whichever tail avoids cancellation.
inline double erlang_cdf(int k, double x) {
    if (x <= 0.0) return 0.0;
    if (x < k) {
        double term = std::exp(k * std::log(x) - x - std::lgamma(k + 1.0));
        double sum = 0.0;
        for (int n = k; n < k + 2000 && term > sum * 1e-17; ++n) {
            sum += term;
            term *= x / (n + 1);
        }
        return std::min(1.0, sum);
    }
    double term = std::exp(-x);
    double sum = 0.0;
    for (int n = 0; n < k; ++n) {
        sum += term;
        term *= x / (n + 1);
    }
    return std::max(0.0, 1.0 - sum);
}

} // namespace detail

/// Outage interval for decoding one message after K rounds. An
/// interference-free layer reduces to conventional HARQ: exact for Type I
/// and CC, bracketed for IR by per-round thresholds 2^R - 1 and 2^{R/K} - 1.
template <DeltaPolicy CcPolicy = ChaseDelta, DeltaPolicy IrPolicy = IncrementalDelta>
BoundInterval layer_outage_bounds(HarqScheme scheme, int rounds, double rate, double own_power,
                                  double interference_power, double mean_gain, double noise_var = 1.0,
                                  const CcPolicy& cc_policy = {}, const IrPolicy& ir_policy = {}) {
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (!(own_power > 0.0) || interference_power < 0.0) throw std::invalid_argument("powers must be positive");
    if (!(mean_gain > 0.0) || !(noise_var > 0.0)) throw std::invalid_argument("mean gain must be positive");
    const double gain = mean_gain / noise_var;
    const double k = rounds;

    if (interference_power == 0.0) {
        PhiParams p{rounds, std::exp2(rate) - 1.0, std::numeric_limits<double>::infinity(), gain, own_power};
        const double x = (std::exp2(rate) - 1.0) / (gain * own_power);
        switch (scheme) {
        case HarqScheme::TypeI: {
            const double v = std::pow(-std::expm1(-x), k);
            return detail::probability_interval(v, v, BoundQuantity::OutageTypeI, p);
        }
        case HarqScheme::ChaseCombining: {
            const double v = detail::erlang_cdf(rounds, x);
            return detail::probability_interval(v, v, BoundQuantity::OutageCC, p);
        }
        case HarqScheme::IncrementalRedundancy: {
            const double xl = std::expm1(rate * std::numbers::ln2 / k) / (gain * own_power);
            p.gamma = std::exp2(rate);
            return detail::probability_interval(std::pow(-std::expm1(-xl), k), std::pow(-std::expm1(-x), k),
                                                BoundQuantity::OutageIR, p);
        }
        }
    }

    const double c = own_power / interference_power;
    const double s = gain * interference_power;
    const double log_prefactor = k * (std::log(c) - std::log(s)) + k / s;
    switch (scheme) {
    case HarqScheme::TypeI: {
        PhiParams p{rounds, std::exp2(rate) - 1.0, c, gain, interference_power};
        const double v = type_i_outage(rounds, rate, own_power, interference_power, gain);
        return detail::probability_interval(v, v, BoundQuantity::OutageTypeI, p);
    }
    case HarqScheme::ChaseCombining: {
        PhiParams p{rounds, std::exp2(rate) - 1.0, c, gain, interference_power};
        if (p.gamma >= k * c) return detail::probability_interval(1.0, 1.0, BoundQuantity::OutageCC, p);
        const auto lp = detail::phi_log_bounds(rounds, p.gamma, c, s, cc_policy);
        return detail::probability_interval(std::exp(log_prefactor + lp.lo), std::exp(log_prefactor + lp.hi),
                                            BoundQuantity::OutageCC, p);
    }
    case HarqScheme::IncrementalRedundancy: {
        PhiParams p{rounds, std::exp2(rate), c, gain, interference_power};
        if (p.gamma >= std::pow(1.0 + c, k)) return detail::probability_interval(1.0, 1.0, BoundQuantity::OutageIR, p);
        const auto lp = detail::psi_log_bounds(rounds, p.gamma, c, s, ir_policy);
        return detail::probability_interval(std::exp(log_prefactor + lp.lo), std::exp(log_prefactor + lp.hi),
                                            BoundQuantity::OutageIR, p);
    }
    }
    throw std::logic_error("unreachable");
}

/// Outage interval of `user`: the union over messages j in [user, M] is
/// bracketed by max_j lower_j and sum_j upper_j.
inline BoundInterval user_outage_bounds(const EffectiveConfig& eff, int user, HarqScheme scheme) {
    const SystemConfig& cfg = eff.base;
    if (user < 1 || user > cfg.num_users) throw std::out_of_range("user " + std::to_string(user) + " out of range");
    double lower = 0.0;
    double upper = 0.0;
    BoundInterval last;
    for (int j = user; j <= cfg.num_users; ++j) {
        last = layer_outage_bounds(scheme, cfg.max_rounds, cfg.rate(j), cfg.power(j), eff.interference_power(j),
                                   eff.mean_gain(user), eff.noise_var(user));
        lower = std::max(lower, last.lower);
        upper += last.upper;
    }
    if (scheme == HarqScheme::TypeI) {
        const double v = type_i_user_outage(eff, user);
        lower = upper = v;
    }
    return detail::probability_interval(lower, upper, last.quantity, last.params);
}

inline BoundInterval cc_outage_bounds(const SystemConfig& cfg, int user) {
    return user_outage_bounds(apply_imperfect_csi(cfg), user, HarqScheme::ChaseCombining);
}

inline BoundInterval ir_outage_bounds(const SystemConfig& cfg, int user) {
    return user_outage_bounds(apply_imperfect_csi(cfg), user, HarqScheme::IncrementalRedundancy);
}

// ---------------------------------------------------------------------------
// Brute-force oracles

struct IntegralEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

namespace detail {

template <class Step>
IntegralEstimate cube_oracle(const PhiParams& p, std::uint64_t samples, std::uint64_t seed, unsigned workers,
                             std::uint32_t stream, Step step) {
    check_params(p);
    if (samples < 1) throw std::invalid_argument("oracle needs at least one sample");
    const int k = p.rounds;
    const double c = p.ratio;
    const double scale = c / p.snr();
    const MomentSums m = parallel_moments(samples, workers, [&](std::uint64_t i) {
        double inv_sum = 0.0;
        double log_prod = 0.0;
        double z_sum = 0.0;
        double shifted_prod = 1.0;
        for (int d = 0; d < k; ++d) {
            const double z = c * keyed_uniform(seed, i, stream, static_cast<std::uint32_t>(d));
            inv_sum += 1.0 / z;
            log_prod += std::log(z);
            z_sum += z;
            shifted_prod *= 1.0 + c - z;
        }
        if (!step(z_sum, shifted_prod)) return 0.0;
        return std::exp(-scale * inv_sum - 2.0 * log_prod);
    });
    const double n = static_cast<double>(samples);
    const double volume = std::pow(c, k);
    const double mean = m.sum / n;
    const double var = std::max(0.0, m.sum_sq / n - mean * mean);
    return {volume * mean, volume * std::sqrt(var / n), samples};
}

} // namespace detail

/// Plain Monte Carlo integration of phi_K over the cube [0, c]^K.
inline IntegralEstimate phi_oracle(const PhiParams& p, std::uint64_t samples, std::uint64_t seed,
                                   unsigned workers = default_workers()) {
    const double shift = p.gamma - p.rounds * p.ratio;
    return detail::cube_oracle(p, samples, seed, workers, 0x9417u,
                               [shift](double z_sum, double) { return shift + z_sum >= 0.0; });
}

/// Plain Monte Carlo integration of psi_K over the cube [0, c]^K.
inline IntegralEstimate psi_oracle(const PhiParams& p, std::uint64_t samples, std::uint64_t seed,
                                   unsigned workers = default_workers()) {
    const double gamma = p.gamma;
    return detail::cube_oracle(p, samples, seed, workers, 0x951u,
                               [gamma](double, double prod) { return gamma >= prod; });
}

} // namespace harq_noma
