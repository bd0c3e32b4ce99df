#include "eolsr/error.hpp"
#include "eolsr/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace eolsr;

namespace
{
    MobilityTrace parse(const std::string& text)
    {
        std::istringstream in(text);
        return load_trace(in);
    }

    std::filesystem::path temp_dir(const std::string& name)
    {
        auto dir = std::filesystem::temp_directory_path() / ("eolsr_scenario_" + name);
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }
} // namespace

TEST_CASE("load_trace accepts a minimal file")
{
    const auto t = parse("0,0,10,20\n0,1,50,60\n");
    CHECK(t.node_count() == 2);
    CHECK(t.duration() == 0.0);
    CHECK(t.samples().size() == 2);
}

TEST_CASE("load_trace skips an optional header and re-sorts rows")
{
    const auto t = parse("time_s,node_id,x_m,y_m\n5,1,1,1\n0,1,0,0\n0,0,2,2\n");
    REQUIRE(t.samples().size() == 3);
    CHECK(t.samples()[0] == TraceSample{0.0, 0, 2.0, 2.0});
    CHECK(t.samples()[1] == TraceSample{0.0, 1, 0.0, 0.0});
    CHECK(t.samples()[2] == TraceSample{5.0, 1, 1.0, 1.0});
}

TEST_CASE("load_trace rejects duplicates and missing t=0 samples")
{
    CHECK_THROWS_AS(parse("0,0,1,1\n0,0,2,2\n"), ValidationError);
    CHECK_THROWS_AS(parse("0,0,1,1\n3,1,2,2\n"), ValidationError);
}

TEST_CASE("load_trace reports the failing line")
{
    try
    {
        parse("0,0,1,1\n0,1,abc,2\n");
        FAIL("expected a parse error");
    }
    catch (const ParseError& e)
    {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("0,0,1\n"), ParseError);
}

TEST_CASE("a 180 s trace with 1 s sampling for 20 nodes is accepted")
{
    std::ostringstream os;
    for (int t = 0; t <= 180; ++t)
    {
        for (int n = 0; n < 20; ++n)
        {
            os << t << ',' << n << ',' << n * 10 << ',' << t << '\n';
        }
    }
    const auto trace = parse(os.str());
    CHECK(trace.samples().size() == 20u * 181u);
    CHECK(trace.node_count() == 20);
    CHECK(trace.duration() == 180.0);
}

TEST_CASE("position_at interpolates and holds after the last sample")
{
    const auto t = parse("0,0,0,0\n10,0,100,50\n0,1,7,7\n");
    CHECK(t.position_at(0, 0.0) == Vec2{0.0, 0.0});
    CHECK(t.position_at(0, 10.0) == Vec2{100.0, 50.0});
    CHECK(t.position_at(0, 4.0).x == doctest::Approx(40.0));
    CHECK(t.position_at(0, 4.0).y == doctest::Approx(20.0));
    CHECK(t.position_at(0, 25.0) == Vec2{100.0, 50.0});
    CHECK(t.position_at(1, 3.0) == Vec2{7.0, 7.0});
    CHECK_THROWS_AS(t.position_at(2, 0.0), LookupError);
    CHECK_THROWS_AS(t.position_at(-1, 0.0), LookupError);
}

TEST_CASE("trace CSV round-trips")
{
    GridSpec spec;
    spec.vehicle_count = 5;
    spec.duration = 20.0;
    CbrFlow flow;
    flow.duration = 10.0;
    const auto sc = generate_grid_scenario(spec, 2, flow, 9);
    std::ostringstream os;
    write_trace(os, sc.trace);
    CHECK(parse(os.str()) == sc.trace);
}

TEST_CASE("generate_grid_scenario: single vehicle and no flows")
{
    GridSpec spec;
    spec.vehicle_count = 1;
    spec.duration = 30.0;
    const auto sc = generate_grid_scenario(spec, 0, CbrFlow{}, 1);
    CHECK(sc.node_count() == 1);
    CHECK(sc.flows.empty());
    CHECK(sc.trace.duration() == 30.0);
    CHECK(sc.trace.samples().size() == 31);
}

TEST_CASE("generate_grid_scenario is deterministic per seed")
{
    GridSpec spec;
    CbrFlow flow;
    flow.start = 60.0;
    const auto a = generate_grid_scenario(spec, 10, flow, 42);
    const auto b = generate_grid_scenario(spec, 10, flow, 42);
    const auto c = generate_grid_scenario(spec, 10, flow, 43);
    CHECK(a == b);
    CHECK_FALSE(a.trace == c.trace);

    const auto dir = temp_dir("determinism");
    save_scenario(a, dir / "a", "s");
    save_scenario(b, dir / "b", "s");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir / "a" / "s.json") == slurp(dir / "b" / "s.json"));
    CHECK(slurp(dir / "a" / "s.trace.csv") == slurp(dir / "b" / "s.trace.csv"));
}

TEST_CASE("generate_grid_scenario produces the small urban shape")
{
    GridSpec spec;
    spec.area = {400.0, 300.0};
    spec.vehicle_count = 20;
    CbrFlow flow;
    flow.packet_size = 512;
    const auto sc = generate_grid_scenario(spec, 10, flow, 1);
    CHECK(sc.area.width * sc.area.height == doctest::Approx(120000.0));
    CHECK(sc.node_count() == 20);
    CHECK(sc.flows.size() == 10);
    CHECK(sc.radio_range == 500.0);
    CHECK(sc.bandwidth == 6e6);
    for (const auto& f : sc.flows)
    {
        CHECK(f.source != f.destination);
        CHECK(f.packet_size == 512);
    }
}

TEST_CASE("generate_grid_scenario rejects impossible flow counts and bad specs")
{
    GridSpec spec;
    spec.vehicle_count = 3;
    CHECK_NOTHROW(generate_grid_scenario(spec, 6, CbrFlow{}, 1));
    CHECK_THROWS_AS(generate_grid_scenario(spec, 7, CbrFlow{}, 1), ConfigError);
    spec.rows = 1;
    CHECK_THROWS_AS(generate_grid_scenario(spec, 0, CbrFlow{}, 1), ConfigError);
    spec.rows = 4;
    spec.speed_min = 20.0;
    spec.speed_max = 10.0;
    CHECK_THROWS_AS(generate_grid_scenario(spec, 0, CbrFlow{}, 1), ConfigError);
}

TEST_CASE("generated traces satisfy the trace invariants for many seeds")
{
    GridSpec spec;
    spec.vehicle_count = 8;
    spec.duration = 60.0;
    for (std::uint64_t seed = 0; seed < 25; ++seed)
    {
        const auto sc = generate_grid_scenario(spec, 4, CbrFlow{}, seed);
        CHECK(sc.trace.within(sc.area));
        const auto& s = sc.trace.samples();
        for (std::size_t i = 1; i < s.size(); ++i)
        {
            const bool ordered = s[i - 1].time < s[i].time || (s[i - 1].time == s[i].time && s[i - 1].node < s[i].node);
            CHECK(ordered);
        }
        // Continuity: no vehicle moves faster than the maximum speed between samples.
        for (int n = 0; n < sc.node_count(); ++n)
        {
            for (double t = 0.0; t + 1.0 <= spec.duration; t += 1.0)
            {
                const Vec2 a = sc.trace.position_at(n, t);
                const Vec2 b = sc.trace.position_at(n, t + 1.0);
                CHECK(std::hypot(b.x - a.x, b.y - a.y) <= spec.speed_max * 1.0 + 1e-9);
            }
        }
    }
}

TEST_CASE("scenario files round-trip through JSON and CSV")
{
    GridSpec spec;
    spec.vehicle_count = 6;
    spec.duration = 40.0;
    CbrFlow flow;
    flow.start = 5.0;
    flow.duration = 20.0;
    RadioParams radio;
    radio.loss_model = LossModel::bernoulli(0.2);
    auto sc = generate_grid_scenario(spec, 3, flow, 5, radio);
    sc.name = "roundtrip";
    sc.scenario_class = "small";
    const auto dir = temp_dir("roundtrip");
    const auto path = save_scenario(sc, dir, "rt");
    const auto loaded = load_scenario_file(path);
    CHECK(loaded.name == sc.name);
    CHECK(loaded.scenario_class == sc.scenario_class);
    CHECK(loaded.trace == sc.trace);
    CHECK(loaded.flows == sc.flows);
    CHECK(loaded.loss_model == sc.loss_model);
    CHECK(loaded.radio_range == sc.radio_range);
    CHECK(loaded.sim_duration == sc.sim_duration);
    CHECK_THROWS_AS(load_scenario_file(dir / "missing.json"), ConfigError);
}

TEST_CASE("scenario validation catches bad flows")
{
    GridSpec spec;
    spec.vehicle_count = 3;
    auto sc = generate_grid_scenario(spec, 1, CbrFlow{}, 1);
    sc.flows.front().destination = sc.flows.front().source;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = generate_grid_scenario(spec, 1, CbrFlow{}, 1);
    sc.flows.front().destination = 17;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc = generate_grid_scenario(spec, 1, CbrFlow{}, 1);
    sc.flows.front().start = 170.0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
}

TEST_CASE("Bernoulli loss grows linearly with distance")
{
    const auto m = LossModel::bernoulli(0.4);
    CHECK(m.loss_probability(0.0, 500.0) == 0.0);
    CHECK(m.loss_probability(250.0, 500.0) == doctest::Approx(0.2));
    CHECK(m.loss_probability(500.0, 500.0) == doctest::Approx(0.4));
    CHECK(LossModel::ideal().loss_probability(500.0, 500.0) == 0.0);
}
