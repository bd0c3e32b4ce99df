#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace eolsr
{
    using NodeId = int;

    struct Vec2
    {
        double x = 0.0;
        double y = 0.0;

        friend bool operator==(const Vec2&, const Vec2&) = default;
    };

    struct Area
    {
        double width = 0.0;
        double height = 0.0;

        bool contains(Vec2 p) const noexcept { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height; }

        friend bool operator==(const Area&, const Area&) = default;
    };

    struct TraceSample
    {
        double time = 0.0;
        NodeId node = 0;
        double x = 0.0;
        double y = 0.0;

        friend bool operator==(const TraceSample&, const TraceSample&) = default;
    };

    // Sampled vehicle positions. Immutable after construction; node ids are 0..node_count-1.
    class MobilityTrace
    {
    public:
        MobilityTrace() = default;

        // Sorts by (time, node) and validates: no duplicate (time, node), every node
        // in 0..max_id has a sample at t = 0, all values finite.
        static MobilityTrace from_samples(std::vector<TraceSample> samples);

        int node_count() const noexcept { return node_count_; }
        double duration() const noexcept { return duration_; }
        const std::vector<TraceSample>& samples() const noexcept { return samples_; }

        // Linear interpolation between bracketing samples, held after the last one.
        // Throws LookupError for an unknown node, ValidationError for t < 0.
        Vec2 position_at(NodeId node, double t) const;

        // True when every sample lies inside the area.
        bool within(const Area& area) const noexcept;

        friend bool operator==(const MobilityTrace& a, const MobilityTrace& b) { return a.samples_ == b.samples_; }

    private:
        struct Point
        {
            double t;
            Vec2 pos;
        };

        std::vector<TraceSample> samples_;
        std::vector<std::vector<Point>> per_node_;
        int node_count_ = 0;
        double duration_ = 0.0;
    };

    // Parses `time_s,node_id,x_m,y_m` rows; a leading non-numeric header row is skipped.
    MobilityTrace load_trace(std::istream& in);
    MobilityTrace load_trace_file(const std::filesystem::path& path);
    void write_trace(std::ostream& out, const MobilityTrace& trace);

    inline Vec2 position_at(const MobilityTrace& trace, NodeId node, double t) { return trace.position_at(node, t); }

    struct CbrFlow
    {
        NodeId source = 0;
        NodeId destination = 1;
        int packet_size = 512; // bytes
        double rate = 1.0;     // packets per second
        double start = 0.0;
        double duration = 60.0;

        double end() const noexcept { return start + duration; }

        friend bool operator==(const CbrFlow&, const CbrFlow&) = default;
    };

    struct LossModel
    {
        enum class Kind
        {
            Ideal,
            Bernoulli
        };

        Kind kind = Kind::Ideal;
        // Loss probability at exactly radio range; scales linearly from 0 at distance 0.
        double p_at_max_range = 0.0;

        static LossModel ideal() { return {}; }
        static LossModel bernoulli(double p) { return {Kind::Bernoulli, p}; }

        double loss_probability(double distance, double range) const noexcept
        {
            return kind == Kind::Ideal ? 0.0 : p_at_max_range * distance / range;
        }

        friend bool operator==(const LossModel&, const LossModel&) = default;
    };

    struct Scenario
    {
        std::string name;
        // Free-form grouping label used by validation reports (e.g. "U2").
        std::string scenario_class;
        Area area;
        MobilityTrace trace;
        std::vector<CbrFlow> flows;
        double radio_range = 500.0;    // m
        double bandwidth = 6e6;        // bit/s
        double sim_duration = 180.0;   // s
        LossModel loss_model;

        int node_count() const noexcept { return trace.node_count(); }

        // Throws ValidationError when any Scenario invariant fails.
        void validate() const;

        friend bool operator==(const Scenario&, const Scenario&) = default;
    };

    struct GridSpec
    {
        Area area{400.0, 300.0};
        int rows = 4; // horizontal streets
        int cols = 4; // vertical streets
        int vehicle_count = 20;
        double speed_min = 5.0; // m/s
        double speed_max = 15.0;
        double pause_time = 2.0; // s at each intersection
        double sample_step = 1.0;
        double duration = 180.0;

        void validate() const;
    };

    struct RadioParams
    {
        double range = 500.0;
        double bandwidth = 6e6;
        LossModel loss_model;
    };

    // Manhattan-grid mobility with random turns and intersection pauses, plus
    // `flow_count` CBR flows between distinct random (source, destination) pairs
    // that copy size/rate/start/duration from `flow_template`.
    Scenario generate_grid_scenario(const GridSpec& spec, int flow_count, const CbrFlow& flow_template,
                                    std::uint64_t seed, const RadioParams& radio = {});

    // Scenario file: JSON document referencing a trace CSV (relative paths resolve
    // against the JSON file's directory).
    Scenario load_scenario_file(const std::filesystem::path& path);
    // Writes `<stem>.json` and `<stem>.trace.csv` into `dir`; returns the JSON path.
    std::filesystem::path save_scenario(const Scenario& scenario, const std::filesystem::path& dir,
                                        const std::string& stem);
} // namespace eolsr
