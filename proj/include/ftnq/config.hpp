#pragma once

// Versioned run configuration shared by every CLI subcommand. Serialized as a JSON
// document; unknown keys are rejected so typos cannot silently fall back to defaults.

#include "ftnq/errors.hpp"
#include "ftnq/experiments.hpp"
#include "ftnq/information_rate.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ftnq {

inline constexpr int config_schema_version = 1;

struct GridAxes {
    std::vector<std::string> alphabets;
    std::vector<int> oversampling;
    std::vector<double> beta;
    std::vector<double> signaling_ratio;
    std::vector<double> snr_db;

    bool operator==(const GridAxes&) const = default;

    static GridAxes defaults() {
        const SweepGrid g;
        return {g.alphabets, g.oversampling, g.beta, g.signaling_ratio, g.snr_db};
    }
};

struct RunConfig {
    int schema_version = config_schema_version;
    PulseSpec pulse;
    ReceiveFilter receive = ReceiveFilter::Matched;
    std::string alphabet = "4qam";
    double snr_db = 10.0;
    Estimator estimator = Estimator::MonteCarlo;
    std::uint64_t samples = 1'000'000;
    unsigned replicates = 10;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::string out;
    std::optional<GridAxes> grid;

    bool operator==(const RunConfig& o) const {
        return schema_version == o.schema_version && pulse.family == o.pulse.family && pulse.shape == o.pulse.shape &&
               pulse.signaling_ratio == o.pulse.signaling_ratio && pulse.span_symbols == o.pulse.span_symbols &&
               pulse.oversampling == o.pulse.oversampling && receive == o.receive && alphabet == o.alphabet &&
               snr_db == o.snr_db && estimator == o.estimator && samples == o.samples &&
               replicates == o.replicates && seed == o.seed && workers == o.workers && out == o.out &&
               grid == o.grid;
    }

    ChannelConfig channel() const {
        ChannelConfig c;
        c.pulse = pulse;
        c.receive = receive;
        c.alphabet = ComponentAlphabet::from_name(alphabet);
        c.snr_db = snr_db;
        return c;
    }

    RateOptions rate_options() const {
        RateOptions o;
        o.estimator = estimator;
        o.samples = samples;
        o.replicates = replicates;
        o.seed = seed;
        o.workers = workers;
        return o;
    }

    /// Sweep over `grid` (the figure-default axes when absent) with this run's pulse
    /// family, span, receive filter and estimator settings.
    SweepGrid sweep_grid() const {
        const GridAxes axes = grid.value_or(GridAxes::defaults());
        SweepGrid g;
        g.alphabets = axes.alphabets;
        g.oversampling = axes.oversampling;
        g.beta = axes.beta;
        g.signaling_ratio = axes.signaling_ratio;
        g.snr_db = axes.snr_db;
        g.family = pulse.family;
        g.span_symbols = pulse.span_symbols;
        g.receive = receive;
        g.estimator = rate_options();
        return g;
    }

    void validate() const {
        if (schema_version != config_schema_version)
            throw ConfigError("unsupported config schema_version " + std::to_string(schema_version));
        pulse.validate();
        (void)ComponentAlphabet::from_name(alphabet);
        if (estimator == Estimator::MonteCarlo && samples < 1) throw ConfigError("samples must be >= 1");
        if (replicates < 1) throw ConfigError("replicates must be >= 1");
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) throw ConfigError("unknown field '" + item.key() + "' in " + where);
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& dst) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        dst = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["schema_version"] = c.schema_version;
    j["pulse"] = {{"family", std::string(to_string(c.pulse.family))},
                  {"shape", c.pulse.shape},
                  {"signaling_ratio", c.pulse.signaling_ratio},
                  {"span_symbols", c.pulse.span_symbols},
                  {"oversampling", c.pulse.oversampling}};
    j["receive_filter"] = std::string(to_string(c.receive));
    j["alphabet"] = c.alphabet;
    j["snr_db"] = c.snr_db;
    j["estimator"] = std::string(to_string(c.estimator));
    j["samples"] = c.samples;
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out"] = c.out;
    if (c.grid) {
        j["grid"] = {{"alphabets", c.grid->alphabets},
                     {"oversampling", c.grid->oversampling},
                     {"beta", c.grid->beta},
                     {"signaling_ratio", c.grid->signaling_ratio},
                     {"snr_db", c.grid->snr_db}};
    }
    return j;
}

/// Overlays the fields present in `j` onto `base`.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
    using detail::read_field;
    detail::reject_unknown(j,
                           {"schema_version", "pulse", "receive_filter", "alphabet", "snr_db", "estimator", "samples",
                            "replicates", "seed", "workers", "out", "grid"},
                           "config");
    read_field(j, "schema_version", base.schema_version);
    if (const auto it = j.find("pulse"); it != j.end()) {
        detail::reject_unknown(*it, {"family", "shape", "signaling_ratio", "span_symbols", "oversampling"}, "pulse");
        std::string family(to_string(base.pulse.family));
        read_field(*it, "family", family);
        base.pulse.family = parse_pulse_family(family);
        read_field(*it, "shape", base.pulse.shape);
        read_field(*it, "signaling_ratio", base.pulse.signaling_ratio);
        read_field(*it, "span_symbols", base.pulse.span_symbols);
        read_field(*it, "oversampling", base.pulse.oversampling);
    }
    std::string receive(to_string(base.receive));
    read_field(j, "receive_filter", receive);
    base.receive = parse_receive_filter(receive);
    read_field(j, "alphabet", base.alphabet);
    read_field(j, "snr_db", base.snr_db);
    std::string estimator(to_string(base.estimator));
    read_field(j, "estimator", estimator);
    base.estimator = parse_estimator(estimator);
    read_field(j, "samples", base.samples);
    read_field(j, "replicates", base.replicates);
    read_field(j, "seed", base.seed);
    read_field(j, "workers", base.workers);
    read_field(j, "out", base.out);
    if (const auto it = j.find("grid"); it != j.end()) {
        detail::reject_unknown(*it, {"alphabets", "oversampling", "beta", "signaling_ratio", "snr_db"}, "grid");
        GridAxes axes = base.grid.value_or(GridAxes::defaults());
        read_field(*it, "alphabets", axes.alphabets);
        read_field(*it, "oversampling", axes.oversampling);
        read_field(*it, "beta", axes.beta);
        read_field(*it, "signaling_ratio", axes.signaling_ratio);
        read_field(*it, "snr_db", axes.snr_db);
        base.grid = axes;
    }
    return base;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return run_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace ftnq
