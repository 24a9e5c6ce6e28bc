#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string tmp(const std::string& name) {
    fs::create_directories(FTNQ_TEST_TMP);
    const auto p = (fs::path(FTNQ_TEST_TMP) / ("cli_" + name)).string();
    fs::remove(p);
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Run cli(const std::string& args) {
    const auto err_path = tmp("stderr.txt");
    const std::string cmd = std::string("\"") + FTNQ_CLI_PATH + "\" " + args + " 2>\"" + err_path + "\"";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

} // namespace

TEST_CASE("cli taps") {
    const auto out = tmp("taps.csv");
    const auto r = cli("taps --shape 0.3 -M 4 --out \"" + out + "\"");
    REQUIRE(r.code == 0);
    const auto text = slurp(out);
    CHECK(count_lines(text) == 2 + 36);
    CHECK(text.rfind("# config: ", 0) == 0);
    CHECK(text.find("\nindex,t,value\n0,-4.375,") != std::string::npos);
    CHECK(r.out.find("energy: 1.000000000000") != std::string::npos);

    const auto comb = tmp("combined.csv");
    CHECK(cli("taps --combined -M 2 --out \"" + comb + "\"").code == 0);
    CHECK(count_lines(slurp(comb)) == 2 + 18);

    CHECK(cli("taps --shape 0.3").code == 2);
    CHECK(cli("taps --shape 1.5 --out \"" + tmp("bad.csv") + "\"").code == 2);
    CHECK(cli("taps --pulse sinc --out \"" + tmp("bad.csv") + "\"").code == 2);
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("cli rate") {
    const std::string base = "rate --alphabet 4qam -M 2 --shape 0.5 --ratio 1.2 --samples 20000";
    const auto a = cli(base + " --snr 10 --seed 5 --workers 1");
    const auto b = cli(base + " --snr 10 --seed 5 --workers 4");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["seed"] == 5);
    CHECK(j["samples"] == 20000);
    CHECK(j["rate_3db"].get<double>() == Catch::Approx(1.2 * j["rate_bpcu"].get<double>()));

    const auto quiet = nlohmann::json::parse(cli(base + " --snr -40").out);
    CHECK(quiet["rate_bpcu"].get<double>() < 0.01);
    const auto loud = nlohmann::json::parse(cli("rate --alphabet 4qam --ratio 1 --samples 20000 --snr 30").out);
    CHECK(loud["rate_bpcu"].get<double>() == Catch::Approx(2.0).margin(0.01));

    const auto en = cli("rate --alphabet 4qam -M 1 --estimator enum --snr 10");
    REQUIRE(en.code == 0);
    CHECK(nlohmann::json::parse(en.out)["estimator"] == "enum");
}

TEST_CASE("cli estimator refusal") {
    const auto r = cli("rate --alphabet 16qam -M 4 --span 9 --estimator enum --snr 10");
    CHECK(r.code == 3);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["error"] == "estimator_refusal");
    CHECK(j.contains("required"));
    CHECK(j.contains("budget"));
}

TEST_CASE("cli sweep and resume") {
    const auto out = tmp("sweep.csv");
    const std::string args = "sweep --grid-alphabets 4qam --grid-M 2 --grid-beta 0.5 --grid-ratio 1 1.5 --grid-snr 10 "
                             "--samples 5000 --out \"" + out + "\"";
    const auto first = cli(args);
    REQUIRE(first.code == 0);
    const auto text = slurp(out);
    CHECK(count_lines(text) == 4);
    CHECK(first.err.find("optimum I3dB 4qam M=2 snr=10") != std::string::npos);

    const auto again = cli(args);
    CHECK(again.code == 0);
    CHECK(again.err.find("note: resuming") != std::string::npos);
    CHECK(again.err.find("2 of 2") != std::string::npos);
    CHECK(slurp(out) == text);

    CHECK(cli("sweep --grid-alphabets 4qam --samples 10").code == 2);
    CHECK(cli(args + " --seed 9").code == 2);
}

TEST_CASE("cli regions") {
    const std::string common = "--grid-M 2 --grid-beta 0.5 --grid-ratio 1 1.5 --grid-snr 25 --samples 5000";
    const auto s4 = tmp("r4.jsonl"), s16 = tmp("r16.jsonl"), odd = tmp("rodd.jsonl"), map = tmp("map.csv");
    REQUIRE(cli("sweep --grid-alphabets 4qam " + common + " --out \"" + s4 + "\"").code == 0);
    REQUIRE(cli("sweep --grid-alphabets 16qam " + common + " --out \"" + s16 + "\"").code == 0);
    REQUIRE(cli("sweep --grid-alphabets 16qam --grid-M 2 --grid-beta 0.5 --grid-ratio 1 --grid-snr 25 --samples 5000 "
                "--out \"" + odd + "\"")
                .code == 0);

    const auto ok = cli("regions --in4 \"" + s4 + "\" --in16 \"" + s16 + "\" --snr 25 --out \"" + map + "\"");
    REQUIRE(ok.code == 0);
    const auto text = slurp(map);
    CHECK(text.find("beta,ratio,winner,margin,ftn_flag\n") != std::string::npos);
    CHECK(count_lines(text) == 4);

    CHECK(cli("regions --in4 \"" + s4 + "\" --in16 \"" + odd + "\" --snr 25 --out \"" + map + "\"").code == 4);
    CHECK(cli("regions --in4 \"" + s4 + "\" --in16 \"" + s16 + "\" --snr 10 --out \"" + map + "\"").code == 4);
    CHECK(cli("regions --in4 \"" + s16 + "\" --in16 \"" + s16 + "\" --out \"" + map + "\"").code == 4);
    CHECK(cli("regions --in4 missing.csv --in16 \"" + s16 + "\" --out \"" + map + "\"").code == 2);
}

TEST_CASE("cli config files") {
    const auto cfg = tmp("cfg.json");
    std::ofstream(cfg) << R"({"alphabet": "4qam", "snr_db": 30, "samples": 20000, "pulse": {"oversampling": 2}})";
    const auto r = cli("rate --config \"" + cfg + "\"");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["M"] == 2);
    CHECK(j["snr_db"] == 30.0);

    j = nlohmann::json::parse(cli("rate --config \"" + cfg + "\" --snr 5 -M 1").out);
    CHECK(j["M"] == 1);
    CHECK(j["snr_db"] == 5.0);

    const auto bad = tmp("bad.json");
    std::ofstream(bad) << R"({"snr": 30})";
    const auto e = cli("rate --config \"" + bad + "\"");
    CHECK(e.code == 2);
    CHECK(e.err.find("unknown field 'snr'") != std::string::npos);
    std::ofstream(bad) << "{not json";
    CHECK(cli("rate --config \"" + bad + "\"").code == 2);
    CHECK(cli("rate --config /nonexistent.json").code == 2);
}
