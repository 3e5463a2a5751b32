// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the harq-noma CLI: spec parsing, sweeps, result
// tables and the built-in figure specs.

#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "analytic.hpp"
#include "channel.hpp"
#include "diversity.hpp"
#include "model.hpp"
#include "montecarlo.hpp"

namespace harq_noma {

using json = nlohmann::json;

struct SweepRange {
    double start = -10.0;
    double stop = 40.0;
    double step = 2.0;

    std::vector<double> points() const {
        if (!(step > 0.0)) throw ConfigError("sweep_p1_dbw", "step must be positive");
        if (stop < start) throw ConfigError("sweep_p1_dbw", "stop must not be below start");
        const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.push_back(start + i * step);
        return out;
    }
};

enum OutputFlags : unsigned {
    kOutMc = 1u,
    kOutBounds = 2u,
    kOutClosedForm = 4u,
    kOutDiversity = 8u,
    kOutAll = 15u,
};

inline unsigned parse_output(std::string_view s) {
    if (s == "mc") return kOutMc;
    if (s == "bounds") return kOutBounds;
    if (s == "closed_form") return kOutClosedForm;
    if (s == "diversity") return kOutDiversity;
    if (s == "all") return kOutAll;
    throw ConfigError("outputs", "unknown output '" + std::string(s) + "' (expected mc|bounds|closed_form|diversity|all)");
}

struct ExperimentSpec {
    std::string name;
    SystemConfig base;  // unvalidated: sweep values are substituted per row
    std::vector<HarqScheme> schemes{kAllSchemes[0], kAllSchemes[1], kAllSchemes[2]};
    std::vector<int> users;          // empty: every user
    SweepRange sweep;
    std::vector<double> sweep_r2;    // empty: rates as configured
    std::vector<double> series_ratio;  // empty: ratios as configured
    std::uint64_t trials = kDefaultTrials;
    std::uint64_t seed = 1;
    unsigned outputs = kOutAll;
};

namespace detail {

template <class T>
T json_get(const json& j, const char* field) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, std::string("wrong type: ") + e.what());
    }
}

inline int rate_index_for_r2(const SystemConfig& cfg) { return cfg.num_users >= 2 ? 1 : 0; }

} // namespace detail

inline ExperimentSpec parse_spec(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "spec must be a JSON object");
    static const char* const kKnown[] = {"name",      "num_users",    "max_rounds",   "rates",        "mean_gains",
                                         "powers",    "p1_watts",     "p1_dbw",       "ratios",       "csi_error_vars",
                                         "strategy",  "schemes",      "users",        "sweep_p1_dbw", "sweep_r2",
                                         "series_ratio", "trials",    "seed",         "outputs"};
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : kKnown) known = known || key == k;
        if (!known) throw ConfigError(key, "unknown key");
    }
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ConfigError(key, "missing");
        return j.at(key);
    };

    ExperimentSpec s;
    if (j.contains("name")) s.name = detail::json_get<std::string>(j["name"], "name");
    SystemConfig& c = s.base;
    c.num_users = detail::json_get<int>(need("num_users"), "num_users");
    c.max_rounds = detail::json_get<int>(need("max_rounds"), "max_rounds");
    c.rates = detail::json_get<std::vector<double>>(need("rates"), "rates");
    c.mean_gains = detail::json_get<std::vector<double>>(need("mean_gains"), "mean_gains");
    if (j.contains("powers")) c.powers = detail::json_get<std::vector<double>>(j["powers"], "powers");
    if (j.contains("p1_watts") && j.contains("p1_dbw")) throw ConfigError("p1_dbw", "give p1_watts or p1_dbw, not both");
    if (j.contains("p1_watts")) c.p1_watts = detail::json_get<double>(j["p1_watts"], "p1_watts");
    if (j.contains("p1_dbw")) c.p1_watts = dbw_to_watts(detail::json_get<double>(j["p1_dbw"], "p1_dbw"));
    if (j.contains("ratios")) c.ratios = detail::json_get<std::vector<double>>(j["ratios"], "ratios");
    if (j.contains("csi_error_vars"))
        c.csi_error_vars = detail::json_get<std::vector<double>>(j["csi_error_vars"], "csi_error_vars");
    if (j.contains("strategy")) c.strategy = parse_strategy(detail::json_get<std::string>(j["strategy"], "strategy"));
    // Ratio-form configs get a placeholder P_1; every row overrides it.
    if (c.powers.empty() && !c.p1_watts) c.p1_watts = 1.0;

    if (j.contains("schemes")) {
        s.schemes.clear();
        for (const auto& v : need("schemes")) s.schemes.push_back(parse_scheme(detail::json_get<std::string>(v, "schemes")));
        if (s.schemes.empty()) throw ConfigError("schemes", "must not be empty");
    }
    if (j.contains("users")) s.users = detail::json_get<std::vector<int>>(j["users"], "users");
    if (j.contains("sweep_p1_dbw")) {
        const json& w = j["sweep_p1_dbw"];
        if (!w.is_object()) throw ConfigError("sweep_p1_dbw", "expected {start, stop, step}");
        for (const auto& [key, _] : w.items())
            if (key != "start" && key != "stop" && key != "step") throw ConfigError("sweep_p1_dbw." + key, "unknown key");
        if (w.contains("start")) s.sweep.start = detail::json_get<double>(w["start"], "sweep_p1_dbw.start");
        if (w.contains("stop")) s.sweep.stop = detail::json_get<double>(w["stop"], "sweep_p1_dbw.stop");
        if (w.contains("step")) s.sweep.step = detail::json_get<double>(w["step"], "sweep_p1_dbw.step");
    }
    if (j.contains("sweep_r2")) s.sweep_r2 = detail::json_get<std::vector<double>>(j["sweep_r2"], "sweep_r2");
    if (j.contains("series_ratio"))
        s.series_ratio = detail::json_get<std::vector<double>>(j["series_ratio"], "series_ratio");
    if (j.contains("trials")) {
        const json& t = j["trials"];
        if (!t.is_number_integer() || t.get<std::int64_t>() < 0)
            throw ConfigError("trials", "must be a non-negative integer");
        s.trials = t.get<std::uint64_t>();
    }
    if (j.contains("seed")) s.seed = detail::json_get<std::uint64_t>(j["seed"], "seed");
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        s.outputs = 0;
        if (o.is_string()) {
            s.outputs = parse_output(o.get<std::string>());
        } else {
            for (const auto& v : o) s.outputs |= parse_output(detail::json_get<std::string>(v, "outputs"));
        }
        if (s.outputs == 0) throw ConfigError("outputs", "must not be empty");
    }
    return s;
}

/// Checks spec-level invariants and that every sweep combination yields a
/// valid config.
inline void validate_spec(const ExperimentSpec& s) {
    if (s.trials == 0) throw ConfigError("trials", "must be positive");
    if ((s.outputs & kOutMc) && s.trials < 1000) throw ConfigError("trials", "Monte Carlo outputs need at least 1000 trials");
    (void)s.sweep.points();
    const SystemConfig probe = validate_config(s.base);
    for (int u : s.users)
        if (u < 1 || u > probe.num_users) throw ConfigError("users", "user " + std::to_string(u) + " out of range");
    if (!s.series_ratio.empty() && !s.base.powers.empty())
        throw ConfigError("series_ratio", "needs the p1_watts+ratios power form");
    if (!s.series_ratio.empty() && probe.num_users < 2) throw ConfigError("series_ratio", "needs at least two users");
    for (double c : s.series_ratio)
        if (!(c > 0.0)) throw ConfigError("series_ratio", "ratios must be positive");
    for (double r : s.sweep_r2)
        if (!(r >= 0.0)) throw ConfigError("sweep_r2", "rates must be non-negative");
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    ExperimentSpec s = parse_spec(j);
    validate_spec(s);
    return s;
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
    std::string config_hash;
    HarqScheme scheme = HarqScheme::TypeI;
    Strategy strategy = Strategy::Simple;
    int user = 1;
    std::optional<double> ratio;  // c_2; absent for one user
    double r2 = 0.0;              // rate of user 2 (user 1 for one user)
    double p1_dbw = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    std::optional<double> p_mc;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::optional<double> p_lower;
    std::optional<double> p_upper;
    std::optional<double> p_closed_form;
    std::optional<int> d_closed_form;
    std::optional<double> d_tilde;
    std::optional<bool> sandwich_ok;
};

inline constexpr const char* kCsvHeader =
    "config_hash,scheme,strategy,user,c,r2,p1_dbw,trials,failures,p_mc,ci_low,ci_high,p_lower,p_upper,"
    "p_closed_form,d_closed_form,d_tilde,sandwich_ok";

/// Canonical JSON of a validated config (sorted keys, round-trip doubles).
inline json config_to_json(const SystemConfig& cfg) {
    return json{{"num_users", cfg.num_users},       {"max_rounds", cfg.max_rounds},
                {"rates", cfg.rates},               {"mean_gains", cfg.mean_gains},
                {"powers", cfg.powers},             {"csi_error_vars", cfg.csi_error_vars},
                {"strategy", std::string(to_string(cfg.strategy))}};
}

/// FNV-1a over the canonical JSON, as 16 hex digits.
inline std::string config_hash(const SystemConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

/// One-sided score check of a Monte Carlo estimate against a bound pair:
/// the estimate may undershoot `lower` and overshoot `upper` by three
/// binomial standard errors evaluated at the bound.
inline bool within_sandwich(double p_mc, double lower, double upper, std::uint64_t trials) {
    const double n = static_cast<double>(trials);
    const double lo_slack = 3.0 * std::sqrt(lower * (1.0 - lower) / n);
    const double hi_slack = 3.0 * std::sqrt(upper * (1.0 - upper) / n);
    return p_mc >= lower - lo_slack && p_mc <= upper + hi_slack;
}

struct RunOptions {
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    unsigned workers = default_workers();
};

namespace detail {

inline SystemConfig resolve_row_config(const ExperimentSpec& s, std::optional<double> ratio, std::optional<double> r2,
                                       double p1_dbw) {
    SystemConfig raw = s.base;
    if (ratio) raw.ratios.at(0) = *ratio;
    if (r2) raw.rates.at(static_cast<std::size_t>(rate_index_for_r2(raw))) = *r2;
    const double p1 = dbw_to_watts(p1_dbw);
    if (raw.powers.empty()) {
        raw.p1_watts = p1;
        return validate_config(raw);
    }
    return with_reference_power(validate_config(raw), p1);
}

} // namespace detail

/// Rows ordered by (scheme, user, ratio series, R_2 grid, P_1 grid).
inline std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
    ExperimentSpec s = spec;
    if (opts.trials) s.trials = *opts.trials;
    if (opts.seed) s.seed = *opts.seed;
    validate_spec(s);

    const std::vector<double> grid = s.sweep.points();
    const SystemConfig probe = validate_config(s.base);
    std::vector<int> users = s.users;
    if (users.empty())
        for (int u = 1; u <= probe.num_users; ++u) users.push_back(u);
    std::vector<std::optional<double>> ratios;
    for (double c : s.series_ratio) ratios.emplace_back(c);
    if (ratios.empty()) ratios.emplace_back(std::nullopt);
    std::vector<std::optional<double>> rates;
    for (double r : s.sweep_r2) rates.emplace_back(r);
    if (rates.empty()) rates.emplace_back(std::nullopt);

    const bool want_mc = (s.outputs & kOutMc) != 0;
    const bool want_bounds = (s.outputs & kOutBounds) != 0;
    const bool want_closed = (s.outputs & kOutClosedForm) != 0;
    const bool want_div = (s.outputs & kOutDiversity) != 0;
    const McOptions mc{opts.workers};

    std::vector<ResultRow> rows;
    for (HarqScheme scheme : s.schemes) {
        for (int user : users) {
            for (const auto& ratio : ratios) {
                for (const auto& r2 : rates) {
                    const std::size_t series_begin = rows.size();
                    for (double db : grid) {
                        const SystemConfig cfg = detail::resolve_row_config(s, ratio, r2, db);
                        const EffectiveConfig eff = apply_imperfect_csi(cfg);
                        const bool efficient = cfg.strategy == Strategy::PowerEfficient && user == 2;
                        ResultRow row;
                        row.config_hash = config_hash(cfg);
                        row.scheme = scheme;
                        row.strategy = cfg.strategy;
                        row.user = user;
                        if (cfg.num_users >= 2) row.ratio = cfg.ratios.at(0);
                        row.r2 = cfg.rates.at(static_cast<std::size_t>(detail::rate_index_for_r2(cfg)));
                        row.p1_dbw = db;
                        if (want_mc) {
                            const OutageEstimate e =
                                efficient ? estimate_outage_power_efficient(cfg, scheme, s.trials, s.seed, mc)
                                          : estimate_outage(eff, user, scheme, s.trials, s.seed, mc);
                            row.trials = e.trials;
                            row.failures = e.failures;
                            row.p_mc = e.p_hat;
                            row.ci_low = e.ci_low;
                            row.ci_high = e.ci_high;
                        }
                        // Simple-strategy bounds do not bracket the power-efficient outage.
                        if ((want_bounds || want_closed) && !efficient) {
                            const BoundInterval b = user_outage_bounds(eff, user, scheme);
                            if (want_bounds) {
                                row.p_lower = b.lower;
                                row.p_upper = b.upper;
                            }
                            if (want_closed && b.lower == b.upper) row.p_closed_form = b.lower;
                        }
                        if (want_div) {
                            const DiversityReport d = cfg.strategy == Strategy::PowerEfficient
                                                          ? power_efficient_diversity(cfg, scheme)
                                                          : user_diversity(cfg, scheme);
                            row.d_closed_form = d.user(user);
                        }
                        if (row.p_mc && row.p_lower)
                            row.sandwich_ok = within_sandwich(*row.p_mc, *row.p_lower, *row.p_upper, row.trials);
                        rows.push_back(std::move(row));
                    }
                    for (std::size_t i = series_begin; i + 1 < rows.size(); ++i) {
                        const ResultRow& a = rows[i];
                        const ResultRow& b = rows[i + 1];
                        if (a.p_mc && b.p_mc && *a.p_mc > 0.0 && *b.p_mc > 0.0)
                            rows[i].d_tilde = empirical_diversity(*a.p_mc, *b.p_mc, b.p1_dbw - a.p1_dbw);
                    }
                }
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Formatting

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace detail

inline std::string to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        out << r.config_hash << ',' << to_string(r.scheme) << ',' << to_string(r.strategy) << ',' << r.user << ','
            << detail::fmt_opt(r.ratio) << ',' << detail::fmt_double(r.r2) << ',' << detail::fmt_double(r.p1_dbw)
            << ',' << r.trials << ',' << r.failures << ',' << detail::fmt_opt(r.p_mc) << ','
            << detail::fmt_opt(r.ci_low) << ',' << detail::fmt_opt(r.ci_high) << ',' << detail::fmt_opt(r.p_lower)
            << ',' << detail::fmt_opt(r.p_upper) << ',' << detail::fmt_opt(r.p_closed_form) << ','
            << (r.d_closed_form ? std::to_string(*r.d_closed_form) : std::string()) << ','
            << detail::fmt_opt(r.d_tilde) << ','
            << (r.sandwich_ok ? (*r.sandwich_ok ? "1" : "0") : "") << '\n';
    }
    return out.str();
}

inline json to_json(const std::vector<ResultRow>& rows) {
    json arr = json::array();
    for (const ResultRow& r : rows) {
        arr.push_back({{"config_hash", r.config_hash},
                       {"scheme", std::string(to_string(r.scheme))},
                       {"strategy", std::string(to_string(r.strategy))},
                       {"user", r.user},
                       {"c", detail::opt_json(r.ratio)},
                       {"r2", r.r2},
                       {"p1_dbw", r.p1_dbw},
                       {"trials", r.trials},
                       {"failures", r.failures},
                       {"p_mc", detail::opt_json(r.p_mc)},
                       {"ci_low", detail::opt_json(r.ci_low)},
                       {"ci_high", detail::opt_json(r.ci_high)},
                       {"p_lower", detail::opt_json(r.p_lower)},
                       {"p_upper", detail::opt_json(r.p_upper)},
                       {"p_closed_form", detail::opt_json(r.p_closed_form)},
                       {"d_closed_form", r.d_closed_form ? json(*r.d_closed_form) : json(nullptr)},
                       {"d_tilde", detail::opt_json(r.d_tilde)},
                       {"sandwich_ok", r.sandwich_ok ? json(*r.sandwich_ok) : json(nullptr)}});
    }
    return arr;
}

/// Least-squares slope of -log10(p_mc) against P_1/10 dB over the points of
/// one series with at least `min_failures` failures.
struct SlopeFit {
    HarqScheme scheme = HarqScheme::TypeI;
    int user = 1;
    std::optional<double> ratio;
    double r2 = 0.0;
    int points = 0;
    std::optional<double> slope;
    std::optional<int> d_closed_form;
};

inline std::vector<SlopeFit> fit_slopes(const std::vector<ResultRow>& rows, std::uint64_t min_failures = 10) {
    std::vector<SlopeFit> fits;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t end = i + 1;
        while (end < rows.size() && rows[end].scheme == rows[i].scheme && rows[end].user == rows[i].user &&
               rows[end].ratio == rows[i].ratio && rows[end].r2 == rows[i].r2)
            ++end;
        SlopeFit f{rows[i].scheme, rows[i].user, rows[i].ratio, rows[i].r2, 0, std::nullopt, std::nullopt};
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = i; k < end; ++k) {
            const ResultRow& r = rows[k];
            if (r.d_closed_form) f.d_closed_form = r.d_closed_form;
            if (!r.p_mc || r.failures < min_failures) continue;
            const double x = r.p1_dbw / 10.0;
            const double y = -std::log10(*r.p_mc);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++f.points;
        }
        const double n = f.points;
        if (f.points >= 2 && n * sxx - sx * sx > 0.0) f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        fits.push_back(f);
        i = end;
    }
    return fits;
}

// ---------------------------------------------------------------------------
// Built-in figures

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1", "fig2", "fig3", "fig4", "fig5"};
    return ids;
}

/// Spec JSON of a built-in figure. Two-user figures use K = 4, R = [1, 1],
/// mean gains [2, 1].
inline json builtin_figure(std::string_view id) {
    const json two_user = {{"num_users", 2}, {"max_rounds", 4}, {"rates", {1.0, 1.0}}, {"mean_gains", {2.0, 1.0}},
                           {"p1_watts", 1.0}, {"ratios", {1.0}}, {"strategy", "simple"}};
    json j = two_user;
    if (id == "fig1" || id == "fig2" || id == "fig3") {
        const char* scheme = id == "fig1" ? "I" : (id == "fig2" ? "CC" : "IR");
        j["name"] = std::string(id);
        j["schemes"] = {scheme};
        j["users"] = {2};
        j["series_ratio"] = id == "fig1" ? json{0.8, 1.0, 1.2} : json{0.4, 0.8, 1.2};
        j["sweep_p1_dbw"] = {{"start", -10.0}, {"stop", 40.0}, {"step", 2.0}};
        j["trials"] = 1000000;
        j["seed"] = 1;
        j["outputs"] = "all";
        return j;
    }
    if (id == "fig4") {
        j["name"] = "fig4";
        j["schemes"] = {"I", "CC", "IR"};
        j["users"] = {2};
        j["series_ratio"] = {0.4, 0.8, 1.2, 2.0};
        json r2 = json::array();
        for (int i = 1; i <= 40; ++i) r2.push_back(i / 10.0);
        j["sweep_r2"] = r2;
        j["sweep_p1_dbw"] = {{"start", 0.0}, {"stop", 0.0}, {"step", 1.0}};
        j["seed"] = 1;
        j["outputs"] = "diversity";
        return j;
    }
    if (id == "fig5") {
        return json{{"name", "fig5"},
                    {"num_users", 4},
                    {"max_rounds", 3},
                    {"rates", {2.0, 2.0, 2.0, 2.0}},
                    {"mean_gains", {2.0, 1.0, 0.5, 1.0 / 3.0}},
                    {"p1_watts", 1.0},
                    {"ratios", {2.0, 1.4, 4.0}},
                    {"strategy", "simple"},
                    {"schemes", {"I", "CC", "IR"}},
                    {"sweep_p1_dbw", {{"start", -10.0}, {"stop", 40.0}, {"step", 2.0}}},
                    {"trials", 1000000},
                    {"seed", 1},
                    {"outputs", "all"}};
    }
    std::string valid;
    for (const auto& v : figure_ids()) valid += (valid.empty() ? "" : ", ") + v;
    throw std::invalid_argument("unknown figure '" + std::string(id) + "' (valid: " + valid + ")");
}

} // namespace harq_noma
