#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using eolsr::cli::run;

namespace
{
    fs::path fresh_dir(const std::string& name)
    {
        const char* base = std::getenv("EOLSR_TEST_TMP");
        const fs::path root = base ? fs::path(base) : fs::temp_directory_path() / "eolsr_cli_tests";
        const fs::path dir = root / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    struct Result
    {
        int code;
        std::string out;
        std::string err;
    };

    Result invoke(std::vector<std::string> args)
    {
        args.insert(args.begin(), "eolsr");
        std::ostringstream out;
        std::ostringstream err;
        const int code = run(args, out, err);
        return {code, out.str(), err.str()};
    }

    std::string slurp(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }

    std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

    // A small scenario generated through the CLI itself.
    fs::path make_scenario(const fs::path& dir, const std::string& name = "sc")
    {
        const auto r = invoke({"gen", "--area", "400x300", "--vehicles", "8", "--flows", "3", "--duration", "60",
                               "--flow-start", "20", "--flow-duration", "20", "--name", name, "--out", dir.string()});
        REQUIRE(r.code == 0);
        return dir / (name + ".json");
    }

    void check_manifest(const fs::path& dir, const std::string& command)
    {
        const auto path = dir / (command + ".manifest.json");
        REQUIRE(fs::exists(path));
        const auto doc = nlohmann::json::parse(slurp(path));
        CHECK(doc.at("command") == command);
        CHECK(doc.contains("seed"));
        CHECK(doc.contains("version"));
        CHECK(doc.contains("start_time"));
        CHECK(doc.contains("end_time"));
        CHECK(doc.at("outputs").is_array());
    }
} // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"gen", "--area", "400x300", "--flows", "10"}).code == 2);
    CHECK(invoke({"gen", "--area", "banana", "--vehicles", "3"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("gen is deterministic and writes a manifest")
{
    const auto a = fresh_dir("gen_a");
    const auto b = fresh_dir("gen_b");
    make_scenario(a);
    make_scenario(b);
    CHECK(slurp(a / "sc.json") == slurp(b / "sc.json"));
    CHECK(slurp(a / "sc.trace.csv") == slurp(b / "sc.trace.csv"));
    check_manifest(a, "gen");

    const auto c = fresh_dir("gen_count");
    const auto r = invoke({"gen", "--vehicles", "4", "--flows", "2", "--duration", "30", "--flow-start", "5",
                           "--flow-duration", "10", "--count", "3", "--out", c.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(c / "scenario_000.json"));
    CHECK(fs::exists(c / "scenario_002.json"));
    CHECK(slurp(c / "scenario_000.json") != slurp(c / "scenario_001.json"));

    const auto d = fresh_dir("gen_bad");
    CHECK(invoke({"gen", "--vehicles", "2", "--flows", "5", "--out", d.string()}).code == 2);
}

TEST_CASE("simulate writes metrics and optional gaps")
{
    const auto dir = fresh_dir("simulate");
    const auto sc = make_scenario(dir);
    const auto r = invoke({"simulate", "--scenario", sc.string(), "--best", "--compare-rfc", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(dir / "metrics.csv");
    CHECK(lines(csv) == 3);
    CHECK(csv.find("rfc") != std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(doc.contains("gaps"));
    check_manifest(dir, "simulate");

    CHECK(invoke({"simulate", "--scenario", (dir / "nope.json").string(), "--rfc", "--out", dir.string()}).code == 2);
    CHECK(invoke({"simulate", "--scenario", sc.string(), "--rfc", "--best", "--out", dir.string()}).code == 2);

    const auto bad = dir / "bad_config.json";
    std::ofstream(bad) << R"({"hello_interval": 99, "refresh_interval": 2, "tc_interval": 5, "willingness": 3,
        "neighb_hold_time": 6, "top_hold_time": 15, "mid_hold_time": 15, "dup_hold_time": 30})";
    CHECK(invoke({"simulate", "--scenario", sc.string(), "--config", bad.string(), "--out", dir.string()}).code == 3);
}

TEST_CASE("tune is reproducible across worker counts")
{
    const auto base = fresh_dir("tune");
    const auto sc = make_scenario(base);
    const auto a = base / "w1";
    const auto b = base / "w2";
    const std::vector<std::string> common{"tune", "--scenario", sc.string(), "--pop", "4", "--gens", "1", "--seed", "9"};
    auto with = [&](const fs::path& out, const std::string& workers) {
        auto args = common;
        args.insert(args.end(), {"--workers", workers, "--out", out.string()});
        return invoke(args);
    };
    REQUIRE(with(a, "1").code == 0);
    REQUIRE(with(b, "2").code == 0);
    CHECK(slurp(a / "best_config.json") == slurp(b / "best_config.json"));
    CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
    CHECK(lines(slurp(a / "history.csv")) == 3);
    check_manifest(a, "tune");

    const auto zero = base / "g0";
    CHECK(invoke({"tune", "--scenario", sc.string(), "--pop", "4", "--gens", "0", "--out", zero.string()}).code == 0);
    CHECK(lines(slurp(zero / "history.csv")) == 2);
    CHECK(invoke({"tune", "--scenario", sc.string(), "--pop", "1", "--out", zero.string()}).code == 2);
}

TEST_CASE("validate reports over a scenario directory")
{
    const auto base = fresh_dir("validate");
    const auto scenarios = base / "scenarios";
    fs::create_directories(scenarios);
    make_scenario(scenarios, "one");
    const auto out = base / "out";
    const auto r = invoke({"validate", "--scenarios", scenarios.string(), "--rfc", "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(out / "report.csv");
    CHECK(csv.find("rfc") != std::string::npos);
    CHECK(fs::exists(out / "report.txt"));
    check_manifest(out, "validate");

    const auto empty = base / "empty";
    fs::create_directories(empty);
    CHECK(invoke({"validate", "--scenarios", empty.string(), "--rfc", "--out", out.string()}).code == 2);
    CHECK(invoke({"validate", "--scenarios", scenarios.string(), "--config", (base / "missing.json").string(),
                  "--out", out.string()})
              .code == 2);
    CHECK(invoke({"validate", "--scenarios", scenarios.string(), "--out", out.string()}).code == 2);
}

TEST_CASE("bench with a single worker count")
{
    const auto base = fresh_dir("bench");
    const auto sc = make_scenario(base);
    const auto out = base / "out";
    const auto r = invoke({"bench", "--workers", "1", "--scenario", sc.string(), "--reps", "1", "--pop", "4",
                           "--gens", "1", "--pad-ms", "0", "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(out / "bench.csv");
    CHECK(lines(csv) == 2);
    CHECK(csv.find("\n1,") != std::string::npos);
    check_manifest(out, "bench");
}

TEST_CASE("the output directory comes from --out, then the environment")
{
    const auto env_dir = fresh_dir("env_out");
    const auto flag_dir = fresh_dir("flag_out");
    ::setenv(eolsr::cli::kOutDirEnv, env_dir.string().c_str(), 1);
    CHECK(invoke({"gen", "--vehicles", "3", "--duration", "20"}).code == 0);
    CHECK(fs::exists(env_dir / "scenario.json"));
    CHECK(invoke({"gen", "--vehicles", "3", "--duration", "20", "--out", flag_dir.string()}).code == 0);
    CHECK(fs::exists(flag_dir / "scenario.json"));
    CHECK(fs::exists(flag_dir / "gen.manifest.json"));
    ::unsetenv(eolsr::cli::kOutDirEnv);
}
