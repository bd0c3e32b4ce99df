#include "eolsr/scenario.hpp"

#include "eolsr/error.hpp"
#include "eolsr/rng.hpp"
#include "eolsr/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace eolsr
{
    namespace
    {
        constexpr double kTimeEps = 1e-9;

        bool finite(const TraceSample& s) { return std::isfinite(s.time) && std::isfinite(s.x) && std::isfinite(s.y); }
    } // namespace

    // ---------------------------------------------------------------- trace

    MobilityTrace MobilityTrace::from_samples(std::vector<TraceSample> samples)
    {
        std::sort(samples.begin(), samples.end(), [](const TraceSample& a, const TraceSample& b) {
            return a.time != b.time ? a.time < b.time : a.node < b.node;
        });

        MobilityTrace trace;
        int max_id = -1;
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            const auto& s = samples[i];
            if (!finite(s))
            {
                throw ValidationError("trace sample has a non-finite value");
            }
            if (s.node < 0)
            {
                throw ValidationError("negative node id " + std::to_string(s.node));
            }
            if (s.time < 0.0)
            {
                throw ValidationError("negative sample time for node " + std::to_string(s.node));
            }
            if (i > 0 && samples[i - 1].time == s.time && samples[i - 1].node == s.node)
            {
                throw ValidationError("duplicate sample for node " + std::to_string(s.node) + " at t=" +
                                      text::format_double(s.time));
            }
            max_id = std::max(max_id, s.node);
        }

        trace.node_count_ = max_id + 1;
        trace.per_node_.resize(static_cast<std::size_t>(trace.node_count_));
        for (const auto& s : samples)
        {
            trace.per_node_[static_cast<std::size_t>(s.node)].push_back({s.time, {s.x, s.y}});
            trace.duration_ = std::max(trace.duration_, s.time);
        }
        for (int n = 0; n < trace.node_count_; ++n)
        {
            const auto& pts = trace.per_node_[static_cast<std::size_t>(n)];
            if (pts.empty() || pts.front().t != 0.0)
            {
                throw ValidationError("node " + std::to_string(n) + " has no sample at t=0");
            }
        }
        trace.samples_ = std::move(samples);
        return trace;
    }

    Vec2 MobilityTrace::position_at(NodeId node, double t) const
    {
        if (node < 0 || node >= node_count_)
        {
            throw LookupError("unknown node id " + std::to_string(node));
        }
        if (t < 0.0)
        {
            throw ValidationError("position requested at negative time");
        }
        const auto& pts = per_node_[static_cast<std::size_t>(node)];
        auto it = std::upper_bound(pts.begin(), pts.end(), t, [](double v, const Point& p) { return v < p.t; });
        if (it == pts.end())
        {
            return pts.back().pos;
        }
        const Point& hi = *it;
        const Point& lo = *(it - 1);
        if (lo.t == t)
        {
            return lo.pos;
        }
        const double f = (t - lo.t) / (hi.t - lo.t);
        return {lo.pos.x + f * (hi.pos.x - lo.pos.x), lo.pos.y + f * (hi.pos.y - lo.pos.y)};
    }

    bool MobilityTrace::within(const Area& area) const noexcept
    {
        return std::all_of(samples_.begin(), samples_.end(), [&](const TraceSample& s) { return area.contains({s.x, s.y}); });
    }

    MobilityTrace load_trace(std::istream& in)
    {
        std::vector<TraceSample> samples;
        std::string line;
        std::size_t line_no = 0;
        bool first_content = true;
        while (std::getline(in, line))
        {
            ++line_no;
            auto row = text::trim(line);
            if (row.empty())
            {
                continue;
            }
            auto fields = text::split(row, ',');
            if (first_content)
            {
                first_content = false;
                if (!text::parse_number<double>(fields[0]))
                {
                    continue; // header
                }
            }
            if (fields.size() != 4)
            {
                throw ParseError(line_no, "expected 4 fields (time_s,node_id,x_m,y_m), got " + std::to_string(fields.size()));
            }
            auto t = text::parse_number<double>(fields[0]);
            auto n = text::parse_number<int>(fields[1]);
            auto x = text::parse_number<double>(fields[2]);
            auto y = text::parse_number<double>(fields[3]);
            if (!t || !n || !x || !y)
            {
                throw ParseError(line_no, "malformed numeric field in '" + std::string(row) + "'");
            }
            samples.push_back({*t, *n, *x, *y});
        }
        return MobilityTrace::from_samples(std::move(samples));
    }

    MobilityTrace load_trace_file(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open trace file " + path.string());
        }
        return load_trace(in);
    }

    void write_trace(std::ostream& out, const MobilityTrace& trace)
    {
        out << "time_s,node_id,x_m,y_m\n";
        for (const auto& s : trace.samples())
        {
            out << text::format_double(s.time) << ',' << s.node << ',' << text::format_double(s.x) << ','
                << text::format_double(s.y) << '\n';
        }
    }

    // ------------------------------------------------------------- scenario

    void Scenario::validate() const
    {
        if (!(radio_range > 0.0))
        {
            throw ValidationError("radio_range must be positive");
        }
        if (!(bandwidth > 0.0))
        {
            throw ValidationError("bandwidth must be positive");
        }
        if (!(sim_duration > 0.0))
        {
            throw ValidationError("sim_duration must be positive");
        }
        if (!(area.width > 0.0 && area.height > 0.0))
        {
            throw ValidationError("area must have positive width and height");
        }
        if (trace.node_count() < 1)
        {
            throw ValidationError("scenario has no nodes");
        }
        if (!trace.within(area))
        {
            throw ValidationError("trace leaves the declared area");
        }
        if (loss_model.kind == LossModel::Kind::Bernoulli &&
            !(loss_model.p_at_max_range >= 0.0 && loss_model.p_at_max_range <= 1.0))
        {
            throw ValidationError("loss probability must lie in [0, 1]");
        }
        for (const auto& f : flows)
        {
            const auto n = trace.node_count();
            if (f.source < 0 || f.source >= n || f.destination < 0 || f.destination >= n)
            {
                throw ValidationError("flow references an unknown node");
            }
            if (f.source == f.destination)
            {
                throw ValidationError("flow source equals destination");
            }
            if (f.packet_size <= 0 || !(f.rate > 0.0) || !(f.start >= 0.0) || !(f.duration >= 0.0))
            {
                throw ValidationError("flow needs packet_size > 0, rate > 0, start >= 0, duration >= 0");
            }
            if (f.end() > sim_duration + kTimeEps)
            {
                throw ValidationError("flow ends after sim_duration");
            }
        }
    }

    void GridSpec::validate() const
    {
        if (rows < 2 || cols < 2)
        {
            throw ConfigError("grid needs at least 2 rows and 2 columns of streets");
        }
        if (vehicle_count < 1)
        {
            throw ConfigError("vehicle_count must be at least 1");
        }
        if (!(speed_min > 0.0) || speed_min > speed_max)
        {
            throw ConfigError("speed range must satisfy 0 < min <= max");
        }
        if (!(area.width > 0.0 && area.height > 0.0))
        {
            throw ConfigError("area must have positive width and height");
        }
        if (!(sample_step > 0.0) || !(duration >= 0.0) || !(pause_time >= 0.0))
        {
            throw ConfigError("sample_step must be positive; duration and pause_time non-negative");
        }
    }

    namespace
    {
        // A vehicle driving along grid streets.
        class GridVehicle
        {
        public:
            GridVehicle(const GridSpec& spec, Rng& rng) : spec_(spec)
            {
                from_ = {static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.cols))),
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.rows)))};
                to_ = pick_next(from_, {-1, -1}, rng);
                speed_ = rng.uniform(spec.speed_min, spec.speed_max);
                travelled_ = rng.uniform() * segment_length();
            }

            Vec2 position() const
            {
                const Vec2 a = coord(from_);
                const Vec2 b = coord(to_);
                const double len = segment_length();
                const double f = len > 0.0 ? travelled_ / len : 0.0;
                return {std::clamp(a.x + f * (b.x - a.x), 0.0, spec_.area.width),
                        std::clamp(a.y + f * (b.y - a.y), 0.0, spec_.area.height)};
            }

            void advance(double dt, Rng& rng)
            {
                while (dt > 0.0)
                {
                    if (pause_left_ > 0.0)
                    {
                        const double use = std::min(pause_left_, dt);
                        pause_left_ -= use;
                        dt -= use;
                        continue;
                    }
                    const double remaining = segment_length() - travelled_;
                    const double time_to_end = remaining / speed_;
                    if (dt < time_to_end)
                    {
                        travelled_ += speed_ * dt;
                        return;
                    }
                    dt -= time_to_end;
                    // Arrived at the intersection: pause, then turn.
                    const Cell prev = from_;
                    from_ = to_;
                    to_ = pick_next(from_, prev, rng);
                    travelled_ = 0.0;
                    speed_ = rng.uniform(spec_.speed_min, spec_.speed_max);
                    pause_left_ = spec_.pause_time;
                }
            }

        private:
            struct Cell
            {
                int col;
                int row;
                bool operator==(const Cell&) const = default;
            };

            Vec2 coord(Cell c) const
            {
                return {spec_.area.width * c.col / (spec_.cols - 1), spec_.area.height * c.row / (spec_.rows - 1)};
            }

            double segment_length() const
            {
                const Vec2 a = coord(from_);
                const Vec2 b = coord(to_);
                return std::hypot(b.x - a.x, b.y - a.y);
            }

            // Uniform over adjacent intersections, excluding a U-turn unless it is the only exit.
            Cell pick_next(Cell at, Cell came_from, Rng& rng) const
            {
                std::vector<Cell> options;
                const Cell candidates[] = {{at.col - 1, at.row}, {at.col + 1, at.row}, {at.col, at.row - 1}, {at.col, at.row + 1}};
                for (const auto& c : candidates)
                {
                    if (c.col >= 0 && c.col < spec_.cols && c.row >= 0 && c.row < spec_.rows && !(c == came_from))
                    {
                        options.push_back(c);
                    }
                }
                if (options.empty())
                {
                    return came_from;
                }
                return options[rng.below(options.size())];
            }

            const GridSpec& spec_;
            Cell from_{0, 0};
            Cell to_{0, 0};
            double speed_ = 0.0;
            double travelled_ = 0.0;
            double pause_left_ = 0.0;
        };
    } // namespace

    Scenario generate_grid_scenario(const GridSpec& spec, int flow_count, const CbrFlow& flow_template,
                                    std::uint64_t seed, const RadioParams& radio)
    {
        spec.validate();
        const auto n = static_cast<std::int64_t>(spec.vehicle_count);
        if (flow_count < 0 || flow_count > n * (n - 1))
        {
            throw ConfigError("cannot place " + std::to_string(flow_count) + " flows among " + std::to_string(n) +
                              " vehicles");
        }

        Rng mobility_rng(substream(seed, "mobility"));
        std::vector<GridVehicle> vehicles;
        vehicles.reserve(static_cast<std::size_t>(n));
        for (int v = 0; v < spec.vehicle_count; ++v)
        {
            vehicles.emplace_back(spec, mobility_rng);
        }

        std::vector<double> times;
        for (std::int64_t k = 0;; ++k)
        {
            const double t = static_cast<double>(k) * spec.sample_step;
            if (t >= spec.duration - kTimeEps)
            {
                break;
            }
            times.push_back(t);
        }
        times.push_back(spec.duration);

        std::vector<TraceSample> samples;
        samples.reserve(times.size() * static_cast<std::size_t>(n));
        double now = 0.0;
        for (double t : times)
        {
            for (auto& v : vehicles)
            {
                v.advance(t - now, mobility_rng);
            }
            now = t;
            for (int v = 0; v < spec.vehicle_count; ++v)
            {
                const Vec2 p = vehicles[static_cast<std::size_t>(v)].position();
                samples.push_back({t, v, p.x, p.y});
            }
        }

        Scenario sc;
        sc.area = spec.area;
        sc.trace = MobilityTrace::from_samples(std::move(samples));
        sc.radio_range = radio.range;
        sc.bandwidth = radio.bandwidth;
        sc.loss_model = radio.loss_model;
        sc.sim_duration = spec.duration;

        Rng flow_rng(substream(seed, "flows"));
        std::set<std::pair<NodeId, NodeId>> used;
        while (static_cast<int>(sc.flows.size()) < flow_count)
        {
            const auto src = static_cast<NodeId>(flow_rng.below(static_cast<std::uint64_t>(n)));
            const auto dst = static_cast<NodeId>(flow_rng.below(static_cast<std::uint64_t>(n)));
            if (src == dst || !used.insert({src, dst}).second)
            {
                continue;
            }
            CbrFlow f = flow_template;
            f.source = src;
            f.destination = dst;
            sc.flows.push_back(f);
        }
        sc.validate();
        return sc;
    }

    // ----------------------------------------------------------------- JSON

    namespace
    {
        using nlohmann::json;

        json loss_to_json(const LossModel& m)
        {
            if (m.kind == LossModel::Kind::Ideal)
            {
                return json{{"kind", "ideal"}};
            }
            return json{{"kind", "bernoulli"}, {"p_at_max_range", m.p_at_max_range}};
        }

        LossModel loss_from_json(const json& j)
        {
            if (j.is_string())
            {
                if (j.get<std::string>() == "ideal")
                {
                    return LossModel::ideal();
                }
                throw ConfigError("unknown loss model '" + j.get<std::string>() + "'");
            }
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "ideal")
            {
                return LossModel::ideal();
            }
            if (kind == "bernoulli")
            {
                return LossModel::bernoulli(j.at("p_at_max_range").get<double>());
            }
            throw ConfigError("unknown loss model '" + kind + "'");
        }
    } // namespace

    Scenario load_scenario_file(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open scenario file " + path.string());
        }
        Scenario sc;
        try
        {
            const json j = json::parse(in);
            sc.name = j.value("name", path.stem().string());
            sc.scenario_class = j.value("class", std::string{});
            const auto& area = j.at("area");
            sc.area = {area.at("width_m").get<double>(), area.at("height_m").get<double>()};
            sc.radio_range = j.at("radio_range_m").get<double>();
            sc.bandwidth = j.at("bandwidth_bps").get<double>();
            sc.sim_duration = j.at("duration_s").get<double>();
            sc.loss_model = loss_from_json(j.at("loss_model"));
            std::filesystem::path trace_path = j.at("trace_file").get<std::string>();
            if (trace_path.is_relative())
            {
                trace_path = path.parent_path() / trace_path;
            }
            sc.trace = load_trace_file(trace_path);
            for (const auto& f : j.at("flows"))
            {
                CbrFlow flow;
                flow.source = f.at("source").get<int>();
                flow.destination = f.at("destination").get<int>();
                flow.packet_size = f.at("packet_size").get<int>();
                flow.rate = f.at("rate").get<double>();
                flow.start = f.at("start").get<double>();
                flow.duration = f.at("duration").get<double>();
                sc.flows.push_back(flow);
            }
        }
        catch (const json::exception& e)
        {
            throw ConfigError("invalid scenario file " + path.string() + ": " + e.what());
        }
        sc.validate();
        return sc;
    }

    std::filesystem::path save_scenario(const Scenario& scenario, const std::filesystem::path& dir,
                                        const std::string& stem)
    {
        std::filesystem::create_directories(dir);
        const std::string trace_name = stem + ".trace.csv";
        {
            std::ofstream out(dir / trace_name);
            if (!out)
            {
                throw ConfigError("cannot write " + (dir / trace_name).string());
            }
            write_trace(out, scenario.trace);
        }

        json flows = json::array();
        for (const auto& f : scenario.flows)
        {
            flows.push_back({{"source", f.source},
                             {"destination", f.destination},
                             {"packet_size", f.packet_size},
                             {"rate", f.rate},
                             {"start", f.start},
                             {"duration", f.duration}});
        }
        json j{{"name", scenario.name.empty() ? stem : scenario.name},
               {"class", scenario.scenario_class},
               {"area", {{"width_m", scenario.area.width}, {"height_m", scenario.area.height}}},
               {"radio_range_m", scenario.radio_range},
               {"bandwidth_bps", scenario.bandwidth},
               {"duration_s", scenario.sim_duration},
               {"loss_model", loss_to_json(scenario.loss_model)},
               {"trace_file", trace_name},
               {"flows", flows}};
        const auto json_path = dir / (stem + ".json");
        std::ofstream out(json_path);
        if (!out)
        {
            throw ConfigError("cannot write " + json_path.string());
        }
        out << j.dump(2) << '\n';
        return json_path;
    }
} // namespace eolsr
