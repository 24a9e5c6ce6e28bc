#pragma once

// Parameter sweeps over (alphabet, M, shape, Tx/Ts, SNR), argmax search on the
// (shape, Tx/Ts) plane and 4-QAM vs 16-QAM region maps.

#include "ftnq/errors.hpp"
#include "ftnq/information_rate.hpp"
#include "ftnq/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ftnq {

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::vector<double> linear_axis(int first_tenths, int last_tenths, int step_tenths) {
    std::vector<double> out;
    for (int i = first_tenths; i <= last_tenths; i += step_tenths) out.push_back(i / 10.0);
    return out;
}

struct SweepGrid {
    std::vector<std::string> alphabets{"4qam", "16qam"};
    std::vector<int> oversampling{1, 4};
    /// Pulse shape parameter (roll-off for RRC).
    std::vector<double> beta = linear_axis(0, 10, 1);
    std::vector<double> signaling_ratio = linear_axis(10, 20, 1);
    std::vector<double> snr_db = linear_axis(0, 300, 50);
    PulseFamily family = PulseFamily::RootRaisedCosine;
    int span_symbols = 9;
    ReceiveFilter receive = ReceiveFilter::Matched;
    RateOptions estimator;

    std::size_t size() const {
        return alphabets.size() * oversampling.size() * beta.size() * signaling_ratio.size() * snr_db.size();
    }

    void validate() const {
        if (alphabets.empty() || oversampling.empty() || beta.empty() || signaling_ratio.empty() || snr_db.empty())
            throw ConfigError("every sweep axis needs at least one value");
        for (double r : signaling_ratio)
            if (!(r >= 1.0)) throw ConfigError("sweep signaling ratios must be >= 1");
        for (const auto& a : alphabets) (void)ComponentAlphabet::from_name(a);
        for (const auto& c : cells()) c.pulse.validate();
    }

    /// Cells in lexicographic order: alphabet, M, beta, ratio, SNR (last varies fastest).
    std::vector<ChannelConfig> cells() const {
        std::vector<ChannelConfig> out;
        out.reserve(size());
        for (const auto& a : alphabets)
            for (int m : oversampling)
                for (double b : beta)
                    for (double r : signaling_ratio)
                        for (double s : snr_db) {
                            ChannelConfig c;
                            c.pulse = {family, b, r, span_symbols, m};
                            c.receive = receive;
                            c.alphabet = ComponentAlphabet::from_name(a);
                            c.snr_db = s;
                            out.push_back(std::move(c));
                        }
        return out;
    }

    /// Reproducibility record echoed into sweep outputs (worker count omitted).
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["alphabets"] = alphabets;
        j["oversampling"] = oversampling;
        j["beta"] = beta;
        j["signaling_ratio"] = signaling_ratio;
        j["snr_db"] = snr_db;
        j["pulse"] = std::string(to_string(family));
        j["span_symbols"] = span_symbols;
        j["receive_filter"] = std::string(to_string(receive));
        j["estimator"] = std::string(to_string(estimator.estimator));
        j["samples"] = estimator.samples;
        j["replicates"] = estimator.replicates;
        j["seed"] = estimator.seed;
        return j;
    }
};

enum class OutputFormat { Csv, JsonLines };

inline OutputFormat output_format_for(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    return ext == ".jsonl" || ext == ".ndjson" ? OutputFormat::JsonLines : OutputFormat::Csv;
}

inline constexpr const char* sweep_csv_header = "alphabet,M,pulse,beta,ratio,snr_db,rate_bpcu,rate_3db,stderr,samples,seed";

inline std::string sweep_csv_row(const RateResult& r) {
    std::ostringstream os;
    os << r.alphabet << ',' << r.M << ',' << to_string(r.pulse) << ',' << format_double(r.shape) << ','
       << format_double(r.signaling_ratio) << ',' << format_double(r.snr_db) << ',' << format_double(r.rate_bpcu)
       << ',' << format_double(r.rate_3db) << ',' << format_double(r.stderr_bpcu) << ',' << r.samples << ','
       << r.seed;
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("malformed number '" + s + "'");
    return v;
}

/// Parses one sweep CSV row. Fields not present in the row (span, receive filter,
/// replicates, estimator) come from `context`, the echoed configuration.
inline RateResult parse_sweep_csv_row(const std::string& line, const nlohmann::json& context) {
    const auto f = split_csv(line);
    if (f.size() != 11) throw ConfigError("sweep CSV row has " + std::to_string(f.size()) + " fields, expected 11");
    RateResult r;
    try {
        r.alphabet = f[0];
        r.M = std::stoi(f[1]);
        r.pulse = parse_pulse_family(f[2]);
        r.shape = parse_double(f[3]);
        r.signaling_ratio = parse_double(f[4]);
        r.snr_db = parse_double(f[5]);
        r.rate_bpcu = parse_double(f[6]);
        r.rate_3db = parse_double(f[7]);
        r.stderr_bpcu = parse_double(f[8]);
        r.samples = std::stoull(f[9]);
        r.seed = std::stoull(f[10]);
    } catch (const std::logic_error& e) {
        throw ConfigError(std::string("malformed sweep CSV row: ") + e.what());
    }
    r.rate_per_component = r.rate_bpcu / 2.0;
    if (context.is_object()) {
        r.span_symbols = context.value("span_symbols", 9);
        r.receive = parse_receive_filter(context.value("receive_filter", std::string("matched")));
        r.estimator = parse_estimator(context.value("estimator", std::string("mc")));
        r.replicates = context.value("replicates", 1u);
    }
    if (std::isnan(r.rate_bpcu)) r.error = "cell failed";
    return r;
}

inline ChannelConfig channel_config_of(const RateResult& r) {
    ChannelConfig c;
    c.pulse = {r.pulse, r.shape, r.signaling_ratio, r.span_symbols, r.M};
    c.receive = r.receive;
    c.alphabet = ComponentAlphabet::from_name(r.alphabet);
    c.snr_db = r.snr_db;
    return c;
}

inline RateOptions rate_options_of(const RateResult& r) {
    RateOptions o;
    o.estimator = r.estimator;
    o.samples = r.samples;
    o.seed = r.seed;
    o.replicates = r.replicates;
    return o;
}

struct SweepFile {
    nlohmann::json config;
    std::vector<RateResult> results;
};

inline constexpr const char* config_comment_prefix = "# config: ";

/// Reads a sweep output (CSV or JSON lines) written by run_sweep.
inline SweepFile read_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep file '" + path + "'");
    const auto format = output_format_for(path);
    SweepFile out;
    std::string line;
    bool header_seen = format == OutputFormat::JsonLines;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind(config_comment_prefix, 0) == 0) {
            out.config = nlohmann::json::parse(line.substr(std::string(config_comment_prefix).size()));
            continue;
        }
        if (line[0] == '#') continue;
        if (!header_seen) {
            if (line != sweep_csv_header) throw ConfigError("'" + path + "' is not a sweep CSV (bad header)");
            header_seen = true;
            continue;
        }
        if (format == OutputFormat::JsonLines) {
            try {
                out.results.push_back(rate_result_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("malformed JSON line in sweep file: ") + e.what());
            }
        } else {
            out.results.push_back(parse_sweep_csv_row(line, out.config));
        }
    }
    return out;
}

struct SweepOptions {
    unsigned workers = 1;
    /// Empty: results are only returned.
    std::string out_path;
    /// Called after each computed cell with (cells finished, total cells, result).
    std::function<void(std::size_t, std::size_t, const RateResult&)> progress;
    /// Receives human-readable notes (resume information).
    std::function<void(const std::string&)> note;
};

namespace detail {

inline std::string render_row(const RateResult& r, OutputFormat f) {
    return f == OutputFormat::Csv ? sweep_csv_row(r) : to_json(r).dump();
}

inline RateResult failed_cell(const ChannelConfig& c, const RateOptions& o, const std::string& what) {
    RateResult r;
    r.rate_bpcu = r.rate_per_component = r.rate_3db = r.stderr_bpcu = std::nan("");
    r.alphabet = c.alphabet.name;
    r.M = c.pulse.oversampling;
    r.pulse = c.pulse.family;
    r.shape = c.pulse.shape;
    r.signaling_ratio = c.pulse.signaling_ratio;
    r.span_symbols = c.pulse.span_symbols;
    r.receive = c.receive;
    r.snr_db = c.snr_db;
    r.estimator = o.estimator;
    r.samples = o.estimator == Estimator::MonteCarlo ? o.samples : 0;
    r.seed = o.estimator == Estimator::MonteCarlo ? o.seed : 0;
    r.replicates = o.estimator == Estimator::MonteCarlo ? std::max(1u, o.replicates) : 1;
    r.fingerprint = fingerprint(config_record(c, o));
    r.error = what;
    return r;
}

} // namespace detail

/// Evaluates every grid cell and returns results in grid order.
///
/// With an output path the rows are streamed to disk in grid order as they become
/// available. If the file already holds rows from the same configuration, cells whose
/// fingerprints are present are not recomputed; the finished file is identical to
/// that of an uninterrupted run. Per-cell failures become NaN rows carrying the error.
inline std::vector<RateResult> run_sweep(const SweepGrid& grid, const SweepOptions& opt = {}) {
    grid.validate();
    const auto cells = grid.cells();
    const std::size_t n = cells.size();
    RateOptions cell_opt = grid.estimator;
    cell_opt.workers = 1;

    std::vector<std::string> fps(n);
    for (std::size_t i = 0; i < n; ++i) fps[i] = fingerprint(config_record(cells[i], cell_opt));

    const nlohmann::json echo = grid.to_json();
    const std::string echo_line = config_comment_prefix + echo.dump();
    const auto format = opt.out_path.empty() ? OutputFormat::Csv : output_format_for(opt.out_path);

    std::vector<std::optional<RateResult>> results(n);
    std::vector<std::optional<std::string>> lines(n);

    // Resume: collect completed rows from an existing output of the same configuration.
    std::size_t prefix = 0;
    bool append = false;
    const bool existing = !opt.out_path.empty() && std::filesystem::exists(opt.out_path) &&
                          std::filesystem::file_size(opt.out_path) > 0;
    if (existing) {
        std::ifstream in(opt.out_path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::vector<std::string> file_lines;
        std::size_t pos = 0;
        while (pos < content.size()) {
            const auto nl = content.find('\n', pos);
            if (nl == std::string::npos) break; // partial trailing line from an interruption
            file_lines.push_back(content.substr(pos, nl - pos));
            pos = nl + 1;
        }
        if (file_lines.empty() || file_lines[0] != echo_line)
            throw ConfigError("'" + opt.out_path + "' exists but was produced by a different configuration");
        std::size_t first_row = 1;
        if (format == OutputFormat::Csv) {
            if (file_lines.size() < 2 || file_lines[1] != sweep_csv_header)
                throw ConfigError("'" + opt.out_path + "' has no sweep CSV header");
            first_row = 2;
        }
        std::map<std::string, std::pair<RateResult, std::string>> done;
        for (std::size_t i = first_row; i < file_lines.size(); ++i) {
            RateResult r = format == OutputFormat::Csv
                               ? parse_sweep_csv_row(file_lines[i], echo)
                               : rate_result_from_json(nlohmann::json::parse(file_lines[i]));
            if (format == OutputFormat::Csv) r.fingerprint = fingerprint(config_record(channel_config_of(r), rate_options_of(r)));
            std::string key = r.fingerprint;
            done.emplace(std::move(key), std::make_pair(std::move(r), file_lines[i]));
        }
        std::size_t reused = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto it = done.find(fps[i]);
            if (it == done.end()) continue;
            results[i] = it->second.first;
            results[i]->fingerprint = fps[i];
            lines[i] = it->second.second;
            ++reused;
        }
        while (prefix < n && lines[prefix] && prefix + first_row < file_lines.size() &&
               file_lines[prefix + first_row] == *lines[prefix])
            ++prefix;
        // Append in place only when the file is exactly header + an in-order prefix.
        append = prefix == reused && file_lines.size() == first_row + prefix;
        if (append && pos != content.size()) std::filesystem::resize_file(opt.out_path, pos);
        if (opt.note)
            opt.note("resuming '" + opt.out_path + "': " + std::to_string(reused) + " of " + std::to_string(n) +
                     " cells already complete");
    }

    std::ofstream out;
    std::string tmp_path;
    std::size_t next_to_write = 0;
    if (!opt.out_path.empty()) {
        if (append) {
            out.open(opt.out_path, std::ios::binary | std::ios::app);
            next_to_write = prefix;
        } else {
            // Rewrites of an existing file go through a temporary so its rows survive an interruption.
            if (existing) tmp_path = opt.out_path + ".partial";
            out.open(existing ? tmp_path : opt.out_path, std::ios::binary | std::ios::trunc);
            out << echo_line << '\n';
            if (format == OutputFormat::Csv) out << sweep_csv_header << '\n';
        }
        if (!out) throw ConfigError("cannot write '" + opt.out_path + "'");
    }

    std::mutex write_mutex;
    std::size_t finished = 0;
    auto flush_ready = [&] {
        if (!out.is_open()) return;
        while (next_to_write < n && lines[next_to_write]) out << *lines[next_to_write++] << '\n';
        out.flush();
    };
    {
        std::lock_guard lock(write_mutex);
        flush_ready();
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < n; ++i)
        if (!results[i]) todo.push_back(i);

    parallel_for(todo.size(), opt.workers, [&](std::size_t k) {
        const std::size_t i = todo[k];
        RateResult r;
        try {
            r = rate_for_config(cells[i], cell_opt);
        } catch (const std::exception& e) {
            r = detail::failed_cell(cells[i], cell_opt, e.what());
        }
        std::lock_guard lock(write_mutex);
        lines[i] = detail::render_row(r, format);
        results[i] = std::move(r);
        ++finished;
        if (opt.progress) opt.progress(finished, todo.size(), *results[i]);
        flush_ready();
    });

    if (out.is_open()) {
        out.close();
        if (!tmp_path.empty()) std::filesystem::rename(tmp_path, opt.out_path);
    }
    std::vector<RateResult> ordered;
    ordered.reserve(n);
    for (auto& r : results) ordered.push_back(std::move(*r));
    return ordered;
}

enum class Objective { Rate, Rate3dB };

struct Optimum {
    double beta = 0.0;
    double ratio = 1.0;
    double value = 0.0;
    double stderr_value = 0.0;
};

namespace detail {

inline bool same_value(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

inline std::vector<const RateResult*> at_snr(const std::vector<RateResult>& results, double snr_db) {
    std::vector<const RateResult*> out;
    for (const auto& r : results)
        if (same_value(r.snr_db, snr_db)) out.push_back(&r);
    return out;
}

inline std::string cell_name(double b, double r) { return "(beta=" + format_double(b) + ", ratio=" + format_double(r) + ")"; }

} // namespace detail

/// Argmax of I or I_3dB over the (beta, ratio) plane at one SNR. Exact ties go to the
/// smaller ratio, then the smaller beta.
inline Optimum find_optimum(const std::vector<RateResult>& results, Objective objective, double snr_db) {
    const auto rows = detail::at_snr(results, snr_db);
    if (rows.empty()) throw ConfigError("no results at SNR " + format_double(snr_db) + " dB");
    for (const auto* r : rows)
        if (r->alphabet != rows.front()->alphabet || r->M != rows.front()->M)
            throw ConfigError("find_optimum needs results for a single alphabet and oversampling factor");

    std::set<double> betas, ratios;
    std::map<std::pair<double, double>, const RateResult*> cell;
    for (const auto* r : rows) {
        betas.insert(r->shape);
        ratios.insert(r->signaling_ratio);
        cell[{r->signaling_ratio, r->shape}] = r;
    }
    std::string missing;
    for (double r : ratios)
        for (double b : betas)
            if (!cell.count({r, b})) missing += " " + detail::cell_name(b, r);
    if (!missing.empty()) throw ConfigError("incomplete (beta, ratio) grid; missing cells:" + missing);

    std::optional<Optimum> best;
    for (const auto& [key, r] : cell) { // ordered by ratio, then beta
        if (!r->error.empty() || std::isnan(r->rate_bpcu)) continue;
        const double v = objective == Objective::Rate ? r->rate_bpcu : r->rate_3db;
        const double se = objective == Objective::Rate ? r->stderr_bpcu : r->stderr_bpcu * r->signaling_ratio;
        if (!best || v > best->value) best = Optimum{r->shape, r->signaling_ratio, v, se};
    }
    if (!best) throw ConfigError("every cell at this SNR failed");
    return *best;
}

enum class Winner { FourQAM, SixteenQAM, Tie };

inline std::string_view to_string(Winner w) {
    switch (w) {
    case Winner::FourQAM: return "FourQAM";
    case Winner::SixteenQAM: return "SixteenQAM";
    default: return "Tie";
    }
}

struct RegionCell {
    double beta = 0.0;
    double ratio = 1.0;
    Winner winner = Winner::Tie;
    /// I_3dB(16-QAM) - I_3dB(4-QAM); positive favors 16-QAM.
    double margin = 0.0;
    double stderr_margin = 0.0;
    /// Conventional FTN region for RRC pulses: Tx/Ts > 1 + beta.
    bool ftn = false;
};

struct RegionMap {
    double snr_db = 0.0;
    int M = 1;
    std::vector<RegionCell> cells;

    std::size_t count(Winner w) const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [w](const RegionCell& c) { return c.winner == w; }));
    }
};

/// Cell-by-cell comparison of I_3dB; a cell is a Tie when the margin is within three
/// combined standard errors.
inline RegionMap region_compare(const std::vector<RateResult>& results_4qam,
                                const std::vector<RateResult>& results_16qam, double snr_db) {
    const auto a = detail::at_snr(results_4qam, snr_db);
    const auto b = detail::at_snr(results_16qam, snr_db);
    if (a.empty() || b.empty()) throw GridMismatch("no results at SNR " + format_double(snr_db) + " dB");

    auto index = [](const std::vector<const RateResult*>& rows) {
        std::map<std::pair<double, double>, const RateResult*> m;
        for (const auto* r : rows) {
            if (!m.emplace(std::make_pair(r->shape, r->signaling_ratio), r).second)
                throw GridMismatch("duplicate cell " + detail::cell_name(r->shape, r->signaling_ratio) +
                                   " (mixed oversampling factors?)");
        }
        return m;
    };
    const auto ma = index(a);
    const auto mb = index(b);
    if (ma.size() != mb.size()) throw GridMismatch("the two sweeps cover different (beta, ratio) grids");

    RegionMap map;
    map.snr_db = snr_db;
    map.M = a.front()->M;
    for (const auto& [key, ra] : ma) {
        const auto it = mb.find(key);
        if (it == mb.end()) throw GridMismatch("cell " + detail::cell_name(key.first, key.second) + " missing from the 16-QAM sweep");
        const RateResult* rb = it->second;
        if (ra->M != rb->M || ra->M != map.M) throw GridMismatch("oversampling factors differ between sweeps");
        if (ra->samples != rb->samples || ra->seed != rb->seed || ra->estimator != rb->estimator)
            throw GridMismatch("estimator settings differ between sweeps");
        if (ra->pulse != rb->pulse || ra->span_symbols != rb->span_symbols)
            throw GridMismatch("pulse settings differ between sweeps");

        RegionCell c;
        c.beta = key.first;
        c.ratio = key.second;
        c.margin = rb->rate_3db - ra->rate_3db;
        c.stderr_margin = std::hypot(ra->stderr_bpcu, rb->stderr_bpcu) * c.ratio;
        if (std::abs(c.margin) <= 3.0 * c.stderr_margin || std::isnan(c.margin)) c.winner = Winner::Tie;
        else c.winner = c.margin > 0 ? Winner::SixteenQAM : Winner::FourQAM;
        c.ftn = c.ratio > 1.0 + c.beta;
        map.cells.push_back(c);
    }
    return map;
}

inline void write_region_csv(std::ostream& os, const RegionMap& map) {
    os << "beta,ratio,winner,margin,ftn_flag\n";
    for (const auto& c : map.cells)
        os << format_double(c.beta) << ',' << format_double(c.ratio) << ',' << to_string(c.winner) << ','
           << format_double(c.margin) << ',' << (c.ftn ? 1 : 0) << '\n';
}

} // namespace ftnq
