#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cli.hpp"

using namespace pulsekit;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args)
{
    args.insert(args.begin(), "pulsekit");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch()
{
    const auto d = fs::temp_directory_path() / "pulsekit_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string write_config(const std::string& name, const std::string& text)
{
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string write_system(const std::string& name, const ReactionSystem& s)
{
    return write_config(name, cli::dump(cli::system_to_json(s)));
}

ReactionSystem quadratic_constant_system()
{
    ReactionSystem s;
    s.params = SystemParams{0.5, 1.0, 1.0, 0.5, 4.0, 0.1};
    s.G1 = BivariatePoly({{0, 0, -1.0}, {0, 2, 1.0}});
    s.G2 = BivariatePoly({{0, 0, 1.0}});
    return s;
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("parse errors carry line and column")
    {
        const std::string text = "{\n  \"mu\": 0.1,\n  \"alpha\": ,\n}";
        try {
            cli::parse_config(text);
            FAIL("expected a parse error");
        } catch (const cli::ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(e.column() == 12);
        }
    }

    TEST_CASE("config validation")
    {
        CHECK_THROWS_AS(cli::parse_config(R"({"mu": 0.1})"), Error);
        CHECK_THROWS_AS(cli::parse_config(R"({"mu": -0.1, "alpha": 2, "beta": 2, "b": 0.5, "D": 4, "epsilon": 0.1,
                                            "G1": [], "G2": []})"),
                        Error);
        CHECK_THROWS_AS(cli::parse_config(R"({"mu": 0.1, "alpha": 2, "beta": 2, "b": 0.5, "D": 4, "epsilon": 0.1,
                                            "G1": [{"p": -1, "q": 0, "c": 1}], "G2": []})"),
                        Error);
        CHECK_THROWS_AS(cli::parse_config(R"({"mu": "x", "alpha": 2, "beta": 2, "b": 0.5, "D": 4, "epsilon": 0.1,
                                            "G1": [], "G2": []})"),
                        Error);
    }

    TEST_CASE("system JSON round trip")
    {
        const auto s = cli::cubic_example(0.1, -0.001);
        const auto back = cli::parse_config(cli::dump(cli::system_to_json(s)));
        CHECK(back.params.mu == s.params.mu);
        CHECK(back.params.b == s.params.b);
        CHECK(back.G1.terms().size() == s.G1.terms().size());
        CHECK(back.G1(1.3, -0.7) == s.G1(1.3, -0.7));
        CHECK(back.G2(1.3, -0.7) == s.G2(1.3, -0.7));
    }

    TEST_CASE("dump prints full precision and maps non-finite to null")
    {
        cli::Json j;
        j["x"] = 0.1;
        j["n"] = 3;
        j["bad"] = std::numeric_limits<Real>::quiet_NaN();
        j["list"] = cli::Json::array({1.5, -std::numeric_limits<Real>::infinity()});
        const auto s = cli::dump(j, -1);
        CHECK(s.find("0.10000000000000001") != std::string::npos);
        CHECK(s.find("\"n\":3") != std::string::npos);
        CHECK(s.find("\"bad\":null") != std::string::npos);
        CHECK(s.find("[1.5,null]") != std::string::npos);
        // keys keep insertion order
        CHECK(s.find("\"x\"") < s.find("\"n\""));
        CHECK(nlohmann::json::parse(cli::dump(j))["x"].get<Real>() == 0.1);
    }

    TEST_CASE("exit codes")
    {
        CHECK(call({}).code == cli::usage);
        CHECK(call({"analyze"}).code == cli::usage);
        CHECK(call({"--config", "/nonexistent/pulsekit.json", "analyze"}).code == cli::usage);
        const auto bad = write_config("bad.json", "{\n  \"mu\": ,\n}");
        const auto r = call({"--config", bad, "analyze"});
        CHECK(r.code == cli::usage);
        CHECK(r.err.find("line 2, column 9") != std::string::npos);
        CHECK(call({"--config", bad, "no-such-command"}).code == cli::usage);
        // three pulses at the scan start and no seed
        const auto folded = write_system("folded.json", cli::cubic_example(0.1, 0.001));
        CHECK(call({"--config", folded, "hopf"}).code == cli::solver);
        const auto ok = write_system("stable.json", cli::cubic_example(0.2, 0.0));
        CHECK(call({"--config", ok, "analyze"}).code == cli::ok);
    }

    TEST_CASE("analyze reports the stable pulse")
    {
        const auto cfg = write_system("stable.json", cli::cubic_example(0.2, 0.0));
        const auto r = call({"--config", cfg, "analyze"});
        REQUIRE(r.code == cli::ok);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["command"] == "analyze");
        CHECK(j["family"] == "linear");
        REQUIRE(j["pulses"].size() == 1);
        CHECK(j["pulses"][0]["residual"].get<Real>() < 1e-10);
        CHECK(j["stability"][0]["stable"] == true);
        CHECK(j["stability"][0]["leading_eigenvalue"]["re"].get<Real>() < 0.0);
    }

    TEST_CASE("output is deterministic")
    {
        const auto cfg = write_system("stable.json", cli::cubic_example(0.2, 0.0));
        CHECK(call({"--config", cfg, "analyze"}).out == call({"--config", cfg, "analyze"}).out);
        CHECK(call({"--config", cfg, "normal-form"}).out == call({"--config", cfg, "normal-form"}).out);
    }

    TEST_CASE("affine system has a degenerate normal form")
    {
        const auto cfg = write_system("linear.json", cli::cubic_example(0.13, 0.0));
        const auto r = call({"--config", cfg, "normal-form"});
        REQUIRE(r.code == cli::ok);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["normal_form"]["classification"] == "degenerate");
        CHECK(j["normal_form"]["b"]["re"].get<Real>() == 0.0);
        CHECK(j["normal_form"]["a"]["re"].get<Real>() == -1.0);
        CHECK(j["normal_form"]["predicted_amplitude"].is_null());
    }

    TEST_CASE("cubic correction: perturbative mode classifies by the sign of nu")
    {
        for (Real nu : {-0.001, 0.001}) {
            const auto cfg = write_system("cubic.json", cli::cubic_example(0.137, nu));
            const auto r = call({"--config", cfg, "normal-form", "--mode", "perturbative"});
            REQUIRE(r.code == cli::ok);
            const auto j = nlohmann::json::parse(r.out);
            CHECK(j["normal_form"]["classification"] == (nu < 0 ? "supercritical" : "subcritical"));
        }
    }

    TEST_CASE("no Hopf point: empty list with a note")
    {
        const auto cfg = write_system("quad.json", quadratic_constant_system());
        const auto r = call({"--config", cfg, "hopf", "--mu-min", "0.1", "--mu-max", "5", "--steps", "50",
                             "--seed", "1.2817", "-3.48175"});
        REQUIRE(r.code == cli::ok);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["hopf"].empty());
        CHECK(j["note"].is_string());
    }

    TEST_CASE("simulate writes CSV artifacts")
    {
        const auto dir = scratch() / "sim";
        fs::remove_all(dir);
        const auto cfg = write_system("stable.json", cli::cubic_example(0.2, 0.0));
        const auto r = call({"--config", cfg, "--out-dir", dir.string(), "--emit-csv", "simulate", "--t-end", "2",
                             "--mesh", "graded"});
        REQUIRE(r.code == cli::ok);
        CHECK(fs::exists(dir / "series.csv"));
        CHECK(fs::exists(dir / "snapshot.csv"));
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["simulation"]["final_time"].get<Real>() == doctest::Approx(2.0));
        CHECK(call({"--config", cfg, "simulate", "--mesh", "hexagonal"}).code == cli::usage);
    }

    TEST_CASE("reproduce without simulation")
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = call({"reproduce-paper-example", "--skip-simulation"});
        CHECK(std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count() < 10.0);
        const auto j = nlohmann::json::parse(r.out);
        REQUIRE(j["paper_comparison"].is_array());
        int failed = 0;
        for (const auto& row : j["paper_comparison"]) {
            const std::string name = row["quantity"];
            if (name.rfind("b_", 0) != 0)
                CHECK_MESSAGE(row["pass"] == true, name);
            failed += row["pass"] == false;
        }
        CHECK(j["all_within_tolerance"] == (failed == 0));
        CHECK(r.code == (failed ? cli::tolerance : cli::ok));
    }

    TEST_CASE("sweep is independent of the thread count")
    {
        const auto cfg = write_system("stable.json", cli::cubic_example(0.2, 0.0));
        const std::vector<std::string> args{"--config", cfg, "sweep", "--mu-from", "0.1", "--mu-to", "0.3",
                                            "--steps", "6"};
        ::setenv("PULSEKIT_THREADS", "1", 1);
        const auto one = call(args);
        ::setenv("PULSEKIT_THREADS", "4", 1);
        const auto four = call(args);
        ::unsetenv("PULSEKIT_THREADS");
        REQUIRE(one.code == cli::ok);
        CHECK(one.out == four.out);
        const auto j = nlohmann::json::parse(one.out);
        REQUIRE(j["sweep"].size() == 7);
        CHECK(j["sweep"][0]["stable"] == false);
        CHECK(j["sweep"][6]["stable"] == true);
    }
}
