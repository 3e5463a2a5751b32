// SPDX-License-Identifier: Apache-2.0
//
// harq-noma: outage and diversity experiments for HARQ-aided downlink NOMA.
//
//   harq-noma run <spec.json>        sweep a spec file
//   harq-noma figure <fig1..fig5>    run a built-in figure spec
//   harq-noma diversity <spec.json>  closed-form diversity orders only
//
// Exit codes: 0 success, 1 bad input or I/O failure, 2 a Monte Carlo
// estimate fell outside its analytic bounds.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "harq_noma/experiment.hpp"

namespace {

using namespace harq_noma;

struct Flags {
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "csv";
    unsigned workers = default_workers();
    bool print_spec = false;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

void report_slopes(const std::vector<ResultRow>& rows) {
    for (const SlopeFit& f : fit_slopes(rows)) {
        if (!f.slope) continue;
        std::fprintf(stderr, "slope %-2s user %d", std::string(to_string(f.scheme)).c_str(), f.user);
        if (f.ratio) std::fprintf(stderr, " c=%g", *f.ratio);
        std::fprintf(stderr, " r2=%g: fitted d=%.2f over %d points", f.r2, *f.slope, f.points);
        if (f.d_closed_form) std::fprintf(stderr, " (closed form %d)", *f.d_closed_form);
        std::fputc('\n', stderr);
    }
}

int sandwich_summary(const std::vector<ResultRow>& rows) {
    int bad = 0;
    for (const ResultRow& r : rows) {
        if (!r.sandwich_ok || *r.sandwich_ok) continue;
        ++bad;
        std::fprintf(stderr, "sandwich violated: %s user %d c=%s p1=%g dBW: p_mc=%.4g not in [%.4g, %.4g] (N=%llu)\n",
                     std::string(to_string(r.scheme)).c_str(), r.user,
                     r.ratio ? std::to_string(*r.ratio).c_str() : "-", r.p1_dbw, *r.p_mc, *r.p_lower, *r.p_upper,
                     static_cast<unsigned long long>(r.trials));
    }
    if (bad > 0) std::fprintf(stderr, "%d of %zu rows outside their bounds\n", bad, rows.size());
    return bad > 0 ? 2 : 0;
}

int execute(ExperimentSpec spec, const Flags& flags, const CLI::App& app) {
    RunOptions opts;
    if (app.count("--trials") > 0) opts.trials = flags.trials;
    if (app.count("--seed") > 0) opts.seed = flags.seed;
    opts.workers = flags.workers;
    if (opts.trials && *opts.trials == 0) throw ConfigError("trials", "must be positive");

    const std::vector<ResultRow> rows = run_experiment(spec, opts);
    if (flags.format == "json")
        write_text(flags.out, to_json(rows).dump(2) + "\n");
    else
        write_text(flags.out, to_csv(rows));
    report_slopes(rows);
    return sandwich_summary(rows);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outage and diversity experiments for HARQ-aided downlink NOMA"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    app.add_option("--trials", flags.trials, "Monte Carlo trials per point (overrides the spec)");
    app.add_option("--seed", flags.seed, "RNG seed (overrides the spec)");
    app.add_option("--out", flags.out, "Output path (default: stdout)");
    app.add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", flags.workers, "Worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);

    std::string spec_path;
    std::string figure_id;
    auto* run = app.add_subcommand("run", "Run the sweep described by a spec file");
    run->add_option("spec", spec_path, "Spec JSON")->required();
    auto* figure = app.add_subcommand("figure", "Run a built-in figure spec");
    figure->add_option("id", figure_id, "fig1 | fig2 | fig3 | fig4 | fig5")->required();
    figure->add_flag("--print-spec", flags.print_spec, "Write the figure's spec JSON instead of running it");
    auto* diversity = app.add_subcommand("diversity", "Closed-form diversity orders for a spec file");
    diversity->add_option("spec", spec_path, "Spec JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return execute(load_spec(spec_path), flags, app);
        if (diversity->parsed()) {
            ExperimentSpec spec = load_spec(spec_path);
            spec.outputs = kOutDiversity;
            return execute(spec, flags, app);
        }
        const json j = builtin_figure(figure_id);
        if (flags.print_spec) {
            write_text(flags.out, j.dump(2) + "\n");
            return 0;
        }
        ExperimentSpec spec = parse_spec(j);
        validate_spec(spec);
        return execute(spec, flags, app);
    } catch (const std::exception& e) {
        const std::string where = spec_path.empty() ? std::string() : spec_path + ": ";
        std::fprintf(stderr, "harq-noma: %s%s\n", where.c_str(), e.what());
        return 1;
    }
}
