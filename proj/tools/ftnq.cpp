// ftnq: information rates of 1-bit oversampled receivers with FTN signaling.
//
// Exit codes: 0 success, 2 usage/config error, 3 estimator refusal, 4 input mismatch.

#include "ftnq/config.hpp"
#include "ftnq/experiments.hpp"
#include "ftnq/information_rate.hpp"
#include "ftnq/pulse_shaping.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace {

constexpr int exit_usage = 2;
constexpr int exit_refusal = 3;
constexpr int exit_mismatch = 4;

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    std::optional<unsigned> replicates;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<std::string> estimator;
    std::optional<std::string> pulse;
    std::optional<double> shape;
    std::optional<double> ratio;
    std::optional<int> span;
    std::optional<int> oversampling;
    std::optional<std::string> alphabet;
    std::optional<double> snr;
    std::optional<std::string> receive;
    std::optional<std::vector<std::string>> grid_alphabets;
    std::optional<std::vector<int>> grid_m;
    std::optional<std::vector<double>> grid_beta;
    std::optional<std::vector<double>> grid_ratio;
    std::optional<std::vector<double>> grid_snr;
};

void add_common(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config_path, "JSON run configuration; flags override its values");
    cmd.add_option("--pulse", f.pulse, "pulse family: gaussian|rrc");
    cmd.add_option("--shape", f.shape, "B3dB*Ts (gaussian) or roll-off beta (rrc)");
    cmd.add_option("--ratio", f.ratio, "signaling ratio Tx/Ts (>= 1)");
    cmd.add_option("--span", f.span, "filter span in symbols (odd)");
    cmd.add_option("-M,--oversampling", f.oversampling, "samples per symbol");
}

void add_estimation(CLI::App& cmd, Flags& f) {
    cmd.add_option("--alphabet", f.alphabet, "4qam|16qam");
    cmd.add_option("--snr", f.snr, "SNR in dB (1/sigma_n^2)");
    cmd.add_option("--receive", f.receive, "receive filter: matched|delta");
    cmd.add_option("--estimator", f.estimator, "mc|enum");
    cmd.add_option("--samples", f.samples, "Monte Carlo symbol periods per rate point");
    cmd.add_option("--replicates", f.replicates, "independent Monte Carlo batches for the standard error");
    cmd.add_option("--seed", f.seed, "top-level random seed");
    cmd.add_option("--workers", f.workers, "worker threads (0 = all cores)");
}

ftnq::RunConfig resolve(const Flags& f) {
    ftnq::RunConfig c = f.config_path.empty() ? ftnq::RunConfig{} : ftnq::load_run_config(f.config_path);
    if (f.pulse) c.pulse.family = ftnq::parse_pulse_family(*f.pulse);
    if (f.shape) c.pulse.shape = *f.shape;
    if (f.ratio) c.pulse.signaling_ratio = *f.ratio;
    if (f.span) c.pulse.span_symbols = *f.span;
    if (f.oversampling) c.pulse.oversampling = *f.oversampling;
    if (f.alphabet) c.alphabet = *f.alphabet;
    if (f.snr) c.snr_db = *f.snr;
    if (f.receive) c.receive = ftnq::parse_receive_filter(*f.receive);
    if (f.estimator) c.estimator = ftnq::parse_estimator(*f.estimator);
    if (f.samples) c.samples = *f.samples;
    if (f.replicates) c.replicates = *f.replicates;
    if (f.seed) c.seed = *f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.out) c.out = *f.out;
    if (f.grid_alphabets || f.grid_m || f.grid_beta || f.grid_ratio || f.grid_snr) {
        ftnq::GridAxes axes = c.grid.value_or(ftnq::GridAxes::defaults());
        if (f.grid_alphabets) axes.alphabets = *f.grid_alphabets;
        if (f.grid_m) axes.oversampling = *f.grid_m;
        if (f.grid_beta) axes.beta = *f.grid_beta;
        if (f.grid_ratio) axes.signaling_ratio = *f.grid_ratio;
        if (f.grid_snr) axes.snr_db = *f.grid_snr;
        c.grid = axes;
    }
    c.validate();
    return c;
}

/// The run configuration minus fields that never affect results.
std::string config_echo(const ftnq::RunConfig& c) {
    auto j = ftnq::to_json(c);
    j.erase("workers");
    j.erase("out");
    return ftnq::config_comment_prefix + j.dump();
}

std::ofstream open_output(const std::string& path) {
    if (path.empty()) throw ftnq::ConfigError("an output path is required (--out)");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ftnq::ConfigError("cannot write '" + path + "'");
    return os;
}

int cmd_taps(const Flags& f, bool combined) {
    const auto cfg = resolve(f);
    const auto taps = combined ? ftnq::combined_response(cfg.pulse, cfg.receive) : ftnq::discretize(cfg.pulse);
    auto os = open_output(cfg.out);
    os << config_echo(cfg) << '\n' << "index,t,value\n";
    char buf[96];
    for (std::size_t i = 0; i < taps.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, taps.time(i), taps[i]);
        os << buf;
    }
    std::printf("taps: %zu\nenergy: %.12f\nbandwidth_3db: %.6f\n", taps.size(), ftnq::tap_energy(taps.taps),
                ftnq::bandwidth_3db(taps));
    return 0;
}

int cmd_rate(const Flags& f) {
    const auto cfg = resolve(f);
    const auto result = ftnq::rate_for_config(cfg.channel(), cfg.rate_options());
    std::cout << ftnq::to_json(result).dump() << '\n';
    return 0;
}

int cmd_sweep(const Flags& f) {
    const auto cfg = resolve(f);
    if (cfg.out.empty()) throw ftnq::ConfigError("sweep needs an output path (--out)");
    const auto grid = cfg.sweep_grid();
    std::cerr << "sweep: " << grid.size() << " cells -> " << cfg.out << '\n';

    ftnq::SweepOptions opt;
    opt.workers = cfg.workers;
    opt.out_path = cfg.out;
    opt.note = [](const std::string& s) { std::cerr << "note: " << s << '\n'; };
    opt.progress = [](std::size_t done, std::size_t total, const ftnq::RateResult& r) {
        std::cerr << '[' << done << '/' << total << "] " << r.alphabet << " M=" << r.M
                  << " beta=" << ftnq::format_double(r.shape) << " ratio=" << ftnq::format_double(r.signaling_ratio)
                  << " snr=" << ftnq::format_double(r.snr_db) << " rate=" << ftnq::format_double(r.rate_bpcu)
                  << (r.error.empty() ? "" : " error: " + r.error) << '\n';
    };
    const auto results = ftnq::run_sweep(grid, opt);

    // I_3dB optimum per (alphabet, M, SNR) slice.
    std::map<std::tuple<std::string, int, double>, std::vector<ftnq::RateResult>> slices;
    for (const auto& r : results) slices[{r.alphabet, r.M, r.snr_db}].push_back(r);
    for (const auto& [key, rows] : slices) {
        try {
            const auto best = ftnq::find_optimum(rows, ftnq::Objective::Rate3dB, std::get<2>(key));
            std::cerr << "optimum I3dB " << std::get<0>(key) << " M=" << std::get<1>(key)
                      << " snr=" << ftnq::format_double(std::get<2>(key)) << ": beta=" << ftnq::format_double(best.beta)
                      << " ratio=" << ftnq::format_double(best.ratio) << " value=" << ftnq::format_double(best.value)
                      << '\n';
        } catch (const ftnq::ConfigError&) {
        }
    }
    return 0;
}

struct RegionFlags {
    std::string in4;
    std::string in16;
    double snr = 25.0;
    std::optional<int> oversampling;
    std::string out;
};

std::vector<ftnq::RateResult> select(const std::vector<ftnq::RateResult>& rows, const std::string& alphabet,
                                     const std::optional<int>& m, const std::string& path) {
    std::vector<ftnq::RateResult> out;
    for (const auto& r : rows)
        if (r.alphabet == alphabet && (!m || r.M == *m)) out.push_back(r);
    if (out.empty()) throw ftnq::GridMismatch("'" + path + "' holds no " + alphabet + " results for the requested M");
    return out;
}

int cmd_regions(const RegionFlags& f) {
    const auto a = ftnq::read_sweep(f.in4);
    const auto b = ftnq::read_sweep(f.in16);
    const auto map = ftnq::region_compare(select(a.results, "4qam", f.oversampling, f.in4),
                                          select(b.results, "16qam", f.oversampling, f.in16), f.snr);
    auto os = open_output(f.out);
    nlohmann::json echo{{"in_4qam", f.in4}, {"in_16qam", f.in16}, {"snr_db", f.snr}, {"M", map.M}};
    os << ftnq::config_comment_prefix << echo.dump() << '\n';
    ftnq::write_region_csv(os, map);
    std::cerr << "regions: FourQAM=" << map.count(ftnq::Winner::FourQAM)
              << " SixteenQAM=" << map.count(ftnq::Winner::SixteenQAM) << " Tie=" << map.count(ftnq::Winner::Tie)
              << '\n';
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Information rates for 1-bit quantized, oversampled receivers with faster-than-Nyquist signaling"};
    app.require_subcommand(1);

    Flags flags;
    bool combined = false;
    auto* taps = app.add_subcommand("taps", "write the discretized pulse (or combined response) as CSV");
    add_common(*taps, flags);
    taps->add_option("--receive", flags.receive, "receive filter for --combined: matched|delta");
    taps->add_option("--out", flags.out, "output CSV path")->required();
    taps->add_flag("--combined", combined, "dump the combined response h = v*g instead of v");

    auto* rate = app.add_subcommand("rate", "information rate of one configuration, as JSON");
    add_common(*rate, flags);
    add_estimation(*rate, flags);

    auto* sweep = app.add_subcommand("sweep", "rate over a parameter grid, streamed to CSV or JSON lines");
    add_common(*sweep, flags);
    add_estimation(*sweep, flags);
    sweep->add_option("--out", flags.out, "output path (.csv or .jsonl)");
    sweep->add_option("--grid-alphabets", flags.grid_alphabets, "alphabet axis");
    sweep->add_option("--grid-M", flags.grid_m, "oversampling axis");
    sweep->add_option("--grid-beta", flags.grid_beta, "shape/roll-off axis");
    sweep->add_option("--grid-ratio", flags.grid_ratio, "Tx/Ts axis");
    sweep->add_option("--grid-snr", flags.grid_snr, "SNR axis in dB");

    RegionFlags region;
    auto* regions = app.add_subcommand("regions", "compare 4-QAM and 16-QAM sweeps cell by cell on I_3dB");
    regions->add_option("--in4", region.in4, "4-QAM sweep output")->required();
    regions->add_option("--in16", region.in16, "16-QAM sweep output")->required();
    regions->add_option("--snr", region.snr, "SNR slice in dB");
    regions->add_option("-M,--oversampling", region.oversampling, "oversampling slice");
    regions->add_option("--out", region.out, "region map CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        if (*taps) return cmd_taps(flags, combined);
        if (*rate) return cmd_rate(flags);
        if (*sweep) return cmd_sweep(flags);
        return cmd_regions(region);
    } catch (const ftnq::EstimatorRefusal& e) {
        const nlohmann::json err{{"error", "estimator_refusal"},
                                 {"message", e.what()},
                                 {"required", e.required()},
                                 {"budget", e.budget()}};
        std::cout << err.dump() << '\n';
        std::cerr << "error: " << e.what() << '\n';
        return exit_refusal;
    } catch (const ftnq::QuadratureError& e) {
        const nlohmann::json err{{"error", "quadrature"}, {"message", e.what()}, {"achieved", e.achieved_tolerance()}};
        std::cout << err.dump() << '\n';
        std::cerr << "error: " << e.what() << '\n';
        return exit_refusal;
    } catch (const ftnq::GridMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_mismatch;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
