// SPDX-License-Identifier: Apache-2.0
//
// Scenario description shared by every other module: users, powers, rates,
// mean channel gains, HARQ round budget and CSI error variances.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace harq_noma {

/// Raised when a configuration violates one of its invariants. `field()`
/// names the offending key as it appears in the JSON config.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class HarqScheme { TypeI, ChaseCombining, IncrementalRedundancy };

inline constexpr HarqScheme kAllSchemes[] = {
    HarqScheme::TypeI, HarqScheme::ChaseCombining, HarqScheme::IncrementalRedundancy};

inline std::string_view to_string(HarqScheme s) {
    switch (s) {
    case HarqScheme::TypeI: return "I";
    case HarqScheme::ChaseCombining: return "CC";
    case HarqScheme::IncrementalRedundancy: return "IR";
    }
    return "?";
}

inline HarqScheme parse_scheme(std::string_view s) {
    if (s == "I") return HarqScheme::TypeI;
    if (s == "CC") return HarqScheme::ChaseCombining;
    if (s == "IR") return HarqScheme::IncrementalRedundancy;
    throw ConfigError("schemes", "unknown HARQ scheme '" + std::string(s) + "' (expected I, CC or IR)");
}

enum class Strategy { Simple, PowerEfficient };

inline std::string_view to_string(Strategy s) {
    return s == Strategy::Simple ? "simple" : "power_efficient";
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "simple" || s == "Simple") return Strategy::Simple;
    if (s == "power_efficient" || s == "PowerEfficient") return Strategy::PowerEfficient;
    throw ConfigError("strategy", "unknown strategy '" + std::string(s) +
                                      "' (expected simple or power_efficient)");
}

/// Extended-real power ratio c_j = P_j / sum_{l<j} P_l. Layer 1 has no
/// interferers and carries the distinguished unbounded value.
class PowerRatio {
public:
    static PowerRatio unbounded() { return PowerRatio(); }

    static PowerRatio finite(double c) {
        if (!(c > 0.0) || !std::isfinite(c))
            throw std::invalid_argument("power ratio must be positive and finite");
        PowerRatio r;
        r.value_ = c;
        return r;
    }

    bool is_unbounded() const noexcept { return !value_.has_value(); }

    /// Finite value; throws for the unbounded ratio.
    double value() const {
        if (!value_) throw std::logic_error("unbounded power ratio has no finite value");
        return *value_;
    }

    friend bool operator==(const PowerRatio&, const PowerRatio&) = default;

private:
    PowerRatio() = default;
    std::optional<double> value_;
};

using PowerRatios = std::vector<PowerRatio>;

/// Full scenario. Indices are zero-based internally; user 1 in the usual
/// notation is element 0. After `validate_config` both `powers` and
/// `ratios` are populated and consistent.
struct SystemConfig {
    int num_users = 0;
    int max_rounds = 0;
    std::vector<double> rates;        // bits/s/Hz
    std::vector<double> mean_gains;   // linear, non-increasing
    std::vector<double> powers;       // watts, linear (absolute form)
    std::optional<double> p1_watts;   // reference power (ratio form)
    std::vector<double> ratios;       // c_2..c_M (ratio form)
    std::vector<double> csi_error_vars;
    Strategy strategy = Strategy::Simple;

    double power(int user) const { return powers.at(static_cast<std::size_t>(user - 1)); }
    double rate(int user) const { return rates.at(static_cast<std::size_t>(user - 1)); }
    double mean_gain(int user) const { return mean_gains.at(static_cast<std::size_t>(user - 1)); }

    double total_power() const {
        double s = 0.0;
        for (double p : powers) s += p;
        return s;
    }

    /// Sum of powers of messages decoded before message j (the interference
    /// seen while decoding x_j).
    double interference_power(int target) const {
        double s = 0.0;
        for (int l = 1; l < target; ++l) s += power(l);
        return s;
    }
};

inline double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }
inline double watts_to_dbw(double w) { return 10.0 * std::log10(w); }

namespace detail {

inline void require_size(const std::vector<double>& v, int m, const char* field) {
    if (static_cast<int>(v.size()) != m)
        throw ConfigError(field, "expected " + std::to_string(m) + " entries, got " +
                                     std::to_string(v.size()));
}

inline void require_positive(const std::vector<double>& v, const char* field) {
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(field, "values must be positive and finite");
}

} // namespace detail

/// Checks every invariant and materializes powers from ratios (or ratios
/// from powers). Returns the normalized copy.
inline SystemConfig validate_config(SystemConfig cfg) {
    const int m = cfg.num_users;
    if (m < 1) throw ConfigError("num_users", "must be at least 1");
    if (cfg.max_rounds < 1) throw ConfigError("max_rounds", "must be at least 1");

    detail::require_size(cfg.rates, m, "rates");
    for (double r : cfg.rates)
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("rates", "rates must be non-negative and finite");

    detail::require_size(cfg.mean_gains, m, "mean_gains");
    detail::require_positive(cfg.mean_gains, "mean_gains");
    for (int i = 1; i < m; ++i)
        if (cfg.mean_gains[i] > cfg.mean_gains[i - 1])
            throw ConfigError("mean_gains", "mean gains must be non-increasing");

    if (!cfg.powers.empty()) {
        detail::require_size(cfg.powers, m, "powers");
        detail::require_positive(cfg.powers, "powers");
        std::vector<double> ratios;
        double acc = cfg.powers[0];
        for (int j = 1; j < m; ++j) {
            ratios.push_back(cfg.powers[j] / acc);
            acc += cfg.powers[j];
        }
        // Both forms are accepted only when they agree (a normalized config).
        if (cfg.p1_watts || !cfg.ratios.empty()) {
            const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
            bool same = cfg.p1_watts && close(*cfg.p1_watts, cfg.powers[0]) && cfg.ratios.size() == ratios.size();
            for (std::size_t j = 0; same && j < ratios.size(); ++j) same = close(cfg.ratios[j], ratios[j]);
            if (!same) throw ConfigError("powers", "give either powers or p1_watts+ratios, not both");
        }
        cfg.ratios = std::move(ratios);
        cfg.p1_watts = cfg.powers[0];
    } else {
        if (!cfg.p1_watts) throw ConfigError("powers", "missing powers or p1_watts");
        if (!(*cfg.p1_watts > 0.0) || !std::isfinite(*cfg.p1_watts))
            throw ConfigError("p1_watts", "must be positive and finite");
        detail::require_size(cfg.ratios, m - 1, "ratios");
        detail::require_positive(cfg.ratios, "ratios");
        cfg.powers.assign(1, *cfg.p1_watts);
        double acc = *cfg.p1_watts;
        for (double c : cfg.ratios) {
            cfg.powers.push_back(c * acc);
            acc += cfg.powers.back();
        }
    }

    if (cfg.csi_error_vars.empty()) cfg.csi_error_vars.assign(static_cast<std::size_t>(m), 0.0);
    detail::require_size(cfg.csi_error_vars, m, "csi_error_vars");
    for (int i = 0; i < m; ++i) {
        const double s2 = cfg.csi_error_vars[i];
        if (!(s2 >= 0.0)) throw ConfigError("csi_error_vars", "variances must be non-negative");
        if (!(s2 < cfg.mean_gains[i]))
            throw ConfigError("csi_error_vars", "error variance must be below the mean gain of user " +
                                                    std::to_string(i + 1));
    }

    if (cfg.strategy == Strategy::PowerEfficient && m != 2)
        throw ConfigError("strategy", "power-efficient strategy supported for M=2 only");

    return cfg;
}

/// c_1 = unbounded; c_j = P_j / sum_{l<j} P_l.
inline PowerRatios power_ratios(const SystemConfig& cfg) {
    PowerRatios out;
    out.reserve(cfg.powers.size());
    out.push_back(PowerRatio::unbounded());
    double acc = cfg.powers.empty() ? 0.0 : cfg.powers[0];
    for (std::size_t j = 1; j < cfg.powers.size(); ++j) {
        out.push_back(PowerRatio::finite(cfg.powers[j] / acc));
        acc += cfg.powers[j];
    }
    return out;
}

/// Rescales every power so that P_1 equals `p1`, keeping all ratios.
inline SystemConfig with_reference_power(const SystemConfig& cfg, double p1) {
    SystemConfig out = cfg;
    const double scale = p1 / cfg.powers.at(0);
    for (double& p : out.powers) p *= scale;
    out.powers[0] = p1;
    out.p1_watts = p1;
    return out;
}

} // namespace harq_noma
