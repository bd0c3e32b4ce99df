#include "cli.hpp"

#include "eolsr/analysis.hpp"
#include "eolsr/error.hpp"
#include "eolsr/evo.hpp"
#include "eolsr/olsr.hpp"
#include "eolsr/report.hpp"
#include "eolsr/rng.hpp"
#include "eolsr/scenario.hpp"
#include "eolsr/sim.hpp"
#include "eolsr/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef EOLSR_VERSION
#define EOLSR_VERSION "unknown"
#endif

namespace eolsr::cli
{
    namespace fs = std::filesystem;
    using ojson = nlohmann::ordered_json;

    namespace
    {
        // Bad invocation that CLI11 cannot detect (missing files, empty inputs).
        class UsageError : public std::runtime_error
        {
        public:
            using std::runtime_error::runtime_error;
        };

        struct Common
        {
            std::uint64_t seed = 1;
            std::string out;
            int workers = 1;
        };

        std::string utc_now()
        {
            const auto now = std::chrono::system_clock::now();
            const std::time_t t = std::chrono::system_clock::to_time_t(now);
            std::tm tm{};
            gmtime_r(&t, &tm);
            std::ostringstream os;
            os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
            return os.str();
        }

        std::string sha256_file(const fs::path& path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw UsageError("cannot read " + path.string());
            }
            EVP_MD_CTX* ctx = EVP_MD_CTX_new();
            EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
            char buf[1 << 14];
            while (in.read(buf, sizeof buf) || in.gcount() > 0)
            {
                EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
            }
            unsigned char digest[EVP_MAX_MD_SIZE];
            unsigned int len = 0;
            EVP_DigestFinal_ex(ctx, digest, &len);
            EVP_MD_CTX_free(ctx);
            std::ostringstream os;
            for (unsigned int i = 0; i < len; ++i)
            {
                os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
            }
            return os.str();
        }

        void require_file(const fs::path& path, const char* what)
        {
            std::error_code ec;
            if (!fs::is_regular_file(path, ec))
            {
                throw UsageError(std::string(what) + " not found: " + path.string());
            }
        }

        // Snapshot of every option the command knows about, parsed or defaulted.
        ojson option_snapshot(const CLI::App& app)
        {
            ojson j = ojson::object();
            for (const CLI::Option* opt : app.get_options())
            {
                const std::string name = opt->get_single_name();
                if (name.empty() || name == "help")
                {
                    continue;
                }
                if (opt->count() > 0)
                {
                    const auto& results = opt->results();
                    j[name] = results.size() == 1 ? ojson(results.front()) : ojson(results);
                }
                else if (!opt->get_default_str().empty())
                {
                    j[name] = opt->get_default_str();
                }
                else
                {
                    j[name] = nullptr;
                }
            }
            return j;
        }

        class Manifest
        {
        public:
            Manifest(std::string command, const std::vector<std::string>& argv, std::uint64_t seed)
                : command_(std::move(command)), argv_(argv), seed_(seed), start_(utc_now())
            {
            }

            void set_config(ojson config) { config_ = std::move(config); }
            void add_input(const fs::path& path) { inputs_[path.string()] = sha256_file(path); }
            void add_output(const fs::path& path) { outputs_.push_back(path.string()); }
            void note(const std::string& key, ojson value) { extra_[key] = std::move(value); }

            fs::path write(const fs::path& dir) const
            {
                ojson j;
                j["command"] = command_;
                j["argv"] = argv_;
                j["version"] = EOLSR_VERSION;
                j["seed"] = seed_;
                j["config"] = config_;
                j["inputs"] = inputs_;
                j["outputs"] = outputs_;
                j["start_time"] = start_;
                j["end_time"] = utc_now();
                for (const auto& [k, v] : extra_.items())
                {
                    j[k] = v;
                }
                const fs::path path = dir / (command_ + ".manifest.json");
                std::ofstream(path) << j.dump(2) << '\n';
                return path;
            }

        private:
            std::string command_;
            std::vector<std::string> argv_;
            std::uint64_t seed_;
            std::string start_;
            ojson config_ = ojson::object();
            ojson inputs_ = ojson::object();
            std::vector<std::string> outputs_;
            ojson extra_ = ojson::object();
        };

        fs::path resolve_out_dir(const Common& common)
        {
            fs::path dir = ".";
            if (!common.out.empty())
            {
                dir = common.out;
            }
            else if (const char* env = std::getenv(kOutDirEnv); env && *env)
            {
                dir = env;
            }
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec || !fs::is_directory(dir))
            {
                throw UsageError("cannot create output directory " + dir.string());
            }
            return dir;
        }

        fs::path write_output(Manifest& manifest, const fs::path& dir, const std::string& name,
                              const std::string& content)
        {
            const fs::path path = dir / name;
            std::ofstream out(path, std::ios::binary);
            if (!out)
            {
                throw UsageError("cannot write " + path.string());
            }
            out << content;
            manifest.add_output(path);
            return path;
        }

        // The scenario JSON and the trace it references.
        std::vector<fs::path> scenario_inputs(const fs::path& json_path)
        {
            std::vector<fs::path> paths{json_path};
            std::ifstream in(json_path);
            const auto j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_object() && j.contains("trace_file") && j["trace_file"].is_string())
            {
                fs::path trace = j["trace_file"].get<std::string>();
                if (trace.is_relative())
                {
                    trace = json_path.parent_path() / trace;
                }
                std::error_code ec;
                if (fs::is_regular_file(trace, ec))
                {
                    paths.push_back(trace);
                }
            }
            return paths;
        }

        Scenario load_scenario_input(const fs::path& path, Manifest& manifest)
        {
            require_file(path, "scenario file");
            Scenario s = load_scenario_file(path);
            for (const auto& p : scenario_inputs(path))
            {
                manifest.add_input(p);
            }
            return s;
        }

        olsr::OlsrConfig load_config_input(const fs::path& path, Manifest& manifest)
        {
            require_file(path, "config file");
            auto config = olsr::load_config_file(path);
            manifest.add_input(path);
            return config;
        }

        std::pair<double, double> parse_area(const std::string& text)
        {
            const auto parts = text::split(text, 'x');
            if (parts.size() != 2)
            {
                throw UsageError("--area expects WIDTHxHEIGHT, got '" + text + "'");
            }
            const auto w = text::parse_number<double>(text::trim(parts[0]));
            const auto h = text::parse_number<double>(text::trim(parts[1]));
            if (!w || !h || *w <= 0.0 || *h <= 0.0)
            {
                throw UsageError("--area expects positive WIDTHxHEIGHT, got '" + text + "'");
            }
            return {*w, *h};
        }

        ojson parse_json(const std::string& text) { return ojson::parse(text); }

        ojson context_json(const evo::FitnessContext& ctx)
        {
            return ojson{{"e_rfc_mj", ctx.e_rfc},      {"pdr_rfc", ctx.pdr_rfc}, {"w1", ctx.w1},
                         {"w2", ctx.w2},               {"delta", ctx.delta},     {"pdr_max", ctx.pdr_max},
                         {"admission", ctx.admission}};
        }

        // ---------------------------------------------------------------- gen

        struct GenArgs
        {
            std::string area = "400x300";
            int vehicles = 0;
            int flows = 0;
            int rows = 4;
            int cols = 4;
            double speed_min = 5.0;
            double speed_max = 15.0;
            double pause = 2.0;
            double step = 1.0;
            double duration = 180.0;
            int packet_size = 512;
            double rate = 1.0;
            double flow_start = 60.0;
            double flow_duration = 60.0;
            double range = 500.0;
            double bandwidth = 6e6;
            std::optional<double> loss_p;
            std::string scenario_class;
            std::string name = "scenario";
            int count = 1;
        };

        void add_gen(CLI::App& sub, GenArgs& a)
        {
            sub.add_option("--area", a.area, "Area as WIDTHxHEIGHT in meters")->capture_default_str();
            sub.add_option("--vehicles", a.vehicles, "Number of vehicles")->required()->check(CLI::PositiveNumber);
            sub.add_option("--flows", a.flows, "Number of CBR flows")->capture_default_str()->check(CLI::NonNegativeNumber);
            sub.add_option("--rows", a.rows, "Horizontal streets")->capture_default_str();
            sub.add_option("--cols", a.cols, "Vertical streets")->capture_default_str();
            sub.add_option("--speed-min", a.speed_min, "Minimum speed, m/s")->capture_default_str();
            sub.add_option("--speed-max", a.speed_max, "Maximum speed, m/s")->capture_default_str();
            sub.add_option("--pause", a.pause, "Pause at intersections, s")->capture_default_str();
            sub.add_option("--step", a.step, "Trace sampling step, s")->capture_default_str();
            sub.add_option("--duration", a.duration, "Simulated duration, s")->capture_default_str();
            sub.add_option("--packet-size", a.packet_size, "CBR packet size, bytes")->capture_default_str();
            sub.add_option("--rate", a.rate, "CBR rate, packets/s")->capture_default_str();
            sub.add_option("--flow-start", a.flow_start, "CBR start time, s")->capture_default_str();
            sub.add_option("--flow-duration", a.flow_duration, "CBR duration, s")->capture_default_str();
            sub.add_option("--range", a.range, "Radio range, m")->capture_default_str();
            sub.add_option("--bandwidth", a.bandwidth, "Channel bandwidth, bit/s")->capture_default_str();
            sub.add_option("--loss-p", a.loss_p, "Bernoulli loss probability at maximum range");
            sub.add_option("--class", a.scenario_class, "Scenario class label used to group reports");
            sub.add_option("--name", a.name, "Output file stem")->capture_default_str();
            sub.add_option("--count", a.count, "Number of scenarios to generate")
                ->capture_default_str()
                ->check(CLI::PositiveNumber);
        }

        int cmd_gen(const GenArgs& a, const Common& common, Manifest& manifest, std::ostream& out)
        {
            const auto [w, h] = parse_area(a.area);
            GridSpec spec;
            spec.area = {w, h};
            spec.rows = a.rows;
            spec.cols = a.cols;
            spec.vehicle_count = a.vehicles;
            spec.speed_min = a.speed_min;
            spec.speed_max = a.speed_max;
            spec.pause_time = a.pause;
            spec.sample_step = a.step;
            spec.duration = a.duration;

            CbrFlow flow;
            flow.packet_size = a.packet_size;
            flow.rate = a.rate;
            flow.start = a.flow_start;
            flow.duration = a.flow_duration;

            RadioParams radio;
            radio.range = a.range;
            radio.bandwidth = a.bandwidth;
            if (a.loss_p)
            {
                radio.loss_model = LossModel::bernoulli(*a.loss_p);
            }

            const fs::path dir = resolve_out_dir(common);
            const std::uint64_t base = substream(common.seed, "scenario");
            for (int i = 0; i < a.count; ++i)
            {
                const std::uint64_t seed = a.count == 1 ? base : derive_seed({base, static_cast<std::uint64_t>(i)});
                Scenario s = generate_grid_scenario(spec, a.flows, flow, seed, radio);
                std::string stem = a.name;
                if (a.count > 1)
                {
                    std::ostringstream os;
                    os << a.name << '_' << std::setw(3) << std::setfill('0') << i;
                    stem = os.str();
                }
                s.name = stem;
                s.scenario_class = a.scenario_class;
                const fs::path json = save_scenario(s, dir, stem);
                manifest.add_output(json);
                manifest.add_output(dir / (stem + ".trace.csv"));
                out << "wrote " << json.string() << " (" << s.node_count() << " vehicles, " << s.flows.size()
                    << " flows)\n";
            }
            return kExitOk;
        }

        // ----------------------------------------------------------- simulate

        struct SimulateArgs
        {
            std::string scenario;
            std::string config;
            bool rfc = false;
            bool best = false;
            bool compare_rfc = false;
            bool no_flows = false;
        };

        void add_simulate(CLI::App& sub, SimulateArgs& a)
        {
            sub.add_option("--scenario", a.scenario, "Scenario JSON file")->required();
            auto* config = sub.add_option("--config", a.config, "OLSR configuration JSON file");
            auto* rfc = sub.add_flag("--rfc", a.rfc, "Use the RFC 3626 default configuration");
            auto* best = sub.add_flag("--best", a.best, "Use the built-in energy-aware reference configuration");
            config->excludes(rfc)->excludes(best);
            rfc->excludes(best);
            sub.add_flag("--compare-rfc", a.compare_rfc, "Also run the RFC default and report gaps");
            sub.add_flag("--no-flows", a.no_flows, "Allow scenarios without data flows");
        }

        int cmd_simulate(const SimulateArgs& a, const Common& common, Manifest& manifest, std::ostream& out)
        {
            const Scenario scenario = load_scenario_input(a.scenario, manifest);
            olsr::OlsrConfig config = olsr::rfc_default();
            std::string config_id = "rfc";
            if (!a.config.empty())
            {
                config = load_config_input(a.config, manifest);
                config_id = fs::path(a.config).stem().string();
            }
            else if (a.best)
            {
                config = olsr::reference_best();
                config_id = "best";
            }
            const fs::path dir = resolve_out_dir(common);

            sim::SimOptions options;
            options.allow_no_flows = a.no_flows;
            const std::string scenario_id = scenario.name.empty() ? fs::path(a.scenario).stem().string() : scenario.name;

            std::string csv = sim::metrics_csv_header() + "\n";
            ojson runs = ojson::array();
            ojson doc;
            if (a.compare_rfc)
            {
                const auto cmp = sim::compare_against_reference(scenario, config, sim::default_nic(), common.seed, options);
                const sim::MetricsRowId cand{scenario_id, config_id, common.seed};
                const sim::MetricsRowId ref{scenario_id, "rfc", common.seed};
                csv += sim::metrics_csv_row(cand, cmp.candidate) + "\n";
                csv += sim::metrics_csv_row(ref, cmp.reference) + "\n";
                runs.push_back(parse_json(sim::metrics_json(cand, cmp.candidate)));
                runs.push_back(parse_json(sim::metrics_json(ref, cmp.reference)));
                doc["runs"] = runs;
                doc["gaps"] = {{"energy", cmp.gaps.energy}, {"pdr", cmp.gaps.pdr}};
                out << config_id << ": E_total=" << text::format_fixed(cmp.candidate.energy.e_total(), 2) << " mJ"
                    << ", rfc E_total=" << text::format_fixed(cmp.reference.energy.e_total(), 2) << " mJ"
                    << ", gap_energy=" << text::format_fixed(100.0 * cmp.gaps.energy, 2) << "%"
                    << ", gap_pdr=" << text::format_fixed(-100.0 * cmp.gaps.pdr, 2) << "%\n";
            }
            else
            {
                const auto m = sim::run_simulation(scenario, config, sim::default_nic(), common.seed, options);
                const sim::MetricsRowId id{scenario_id, config_id, common.seed};
                csv += sim::metrics_csv_row(id, m) + "\n";
                runs.push_back(parse_json(sim::metrics_json(id, m)));
                doc["runs"] = runs;
                out << config_id << ": E_total=" << text::format_fixed(m.energy.e_total(), 2) << " mJ"
                    << ", PDR=" << (m.pdr ? text::format_fixed(*m.pdr, 2) : std::string("n/a")) << "\n";
            }
            write_output(manifest, dir, "metrics.csv", csv);
            write_output(manifest, dir, "metrics.json", doc.dump(2) + "\n");
            return kExitOk;
        }

        // --------------------------------------------------------------- tune

        struct TuneArgs
        {
            std::string scenario;
            int pop = 24;
            int gens = 100;
            double pc = 0.7;
            double pm = 0.25;
            int elitism = 1;
            bool grid = false;
            std::vector<double> pc_list{0.5, 0.7, 0.9};
            std::vector<double> pm_list{0.06125, 0.125, 0.25};
            int reps = 3;
        };

        void add_tune(CLI::App& sub, TuneArgs& a)
        {
            sub.add_option("--scenario", a.scenario, "Scenario JSON file")->required();
            sub.add_option("--pop", a.pop, "Population size")->capture_default_str();
            sub.add_option("--gens", a.gens, "Generations")->capture_default_str();
            sub.add_option("--pc", a.pc, "Crossover probability")->capture_default_str();
            sub.add_option("--pm", a.pm, "Mutation probability")->capture_default_str();
            sub.add_option("--elitism", a.elitism, "Elite individuals kept per generation")->capture_default_str();
            sub.add_flag("--grid", a.grid, "Sweep every (p_c, p_m) pair instead of a single run");
            sub.add_option("--pc-list", a.pc_list, "Crossover probabilities for --grid")
                ->delimiter(',')
                ->capture_default_str();
            sub.add_option("--pm-list", a.pm_list, "Mutation probabilities for --grid")
                ->delimiter(',')
                ->capture_default_str();
            sub.add_option("--reps", a.reps, "Repetitions per grid cell")->capture_default_str();
        }

        int cmd_tune(const TuneArgs& a, const Common& common, Manifest& manifest, std::ostream& out)
        {
            const Scenario scenario = load_scenario_input(a.scenario, manifest);
            const fs::path dir = resolve_out_dir(common);
            const auto nic = sim::default_nic();

            evo::GaSettings settings;
            settings.pop_size = a.pop;
            settings.generations = a.gens;
            settings.p_c = a.pc;
            settings.p_m = a.pm;
            settings.workers = common.workers;
            settings.master_seed = common.seed;
            settings.elitism = a.elitism;
            settings.validate();

            const auto ctx = evo::calibrate_context(scenario, nic, evo::calibration_seed(common.seed));
            manifest.note("fitness_context", context_json(ctx));
            out << "calibrated: E_rfc=" << text::format_fixed(ctx.e_rfc, 2) << " mJ, PDR_rfc="
                << text::format_fixed(ctx.pdr_rfc, 2) << "\n";

            const auto& space = olsr::ParamSpace::standard();
            const evo::SimulationEvaluator evaluator(scenario, nic, ctx);
            if (a.grid)
            {
                if (a.pc_list.empty() || a.pm_list.empty() || a.reps < 1)
                {
                    throw UsageError("--grid needs non-empty --pc-list/--pm-list and --reps >= 1");
                }
                const auto rows = evo::parameter_setting_grid(a.pc_list, a.pm_list, a.reps, settings, space,
                                                              evaluator, ctx);
                write_output(manifest, dir, "grid.csv", evo::grid_csv(rows));
                const auto best = std::min_element(rows.begin(), rows.end(),
                                                   [](const auto& x, const auto& y) { return x.avg_f < y.avg_f; });
                out << "best setting: p_c=" << text::format_double(best->p_c)
                    << " p_m=" << text::format_double(best->p_m) << " avg_f=" << text::format_fixed(best->avg_f, 4)
                    << "\n";
                return kExitOk;
            }

            const auto result = evo::evolve(settings, space, evaluator);
            // Report the best configuration that met the PDR threshold; fall back to
            // the unconstrained minimum when no evaluated configuration did.
            const evo::Individual& chosen = result.best_admissible ? *result.best_admissible : result.best;
            const auto config = olsr::decode_genome(chosen.genes, space);
            write_output(manifest, dir, "best_config.json", olsr::config_to_json(config) + "\n");
            write_output(manifest, dir, "history.csv", evo::history_csv(result.history));
            manifest.note("best_config_admissible", result.best_admissible.has_value());
            ojson unconstrained;
            unconstrained["config"] = ojson::parse(olsr::config_to_json(olsr::decode_genome(result.best.genes, space)));
            unconstrained["f"] = result.best.f();
            manifest.note("unconstrained_best", unconstrained);
            auto report = [&](const char* label, const evo::FitnessRecord& rec) {
                out << label << ": F=" << text::format_fixed(rec.f, 4)
                    << " gap_energy=" << text::format_fixed(100.0 * analysis::gap_energy(rec.energy, ctx.e_rfc), 2)
                    << "% gap_pdr=" << text::format_fixed(-100.0 * analysis::gap_pdr(rec.pdr, ctx.pdr_rfc), 2)
                    << "%\n";
            };
            report(result.best_admissible ? "best admissible" : "best (no admissible configuration found)",
                   *chosen.fitness);
            if (result.best_admissible)
            {
                report("unconstrained best", *result.best.fitness);
            }
            return kExitOk;
        }

        // ----------------------------------------------------------- validate

        struct ValidateArgs
        {
            std::string scenarios;
            std::vector<std::string> configs;
            bool rfc = false;
            bool best = false;
            int seeds = 1;
        };

        void add_validate(CLI::App& sub, ValidateArgs& a)
        {
            sub.add_option("--scenarios", a.scenarios, "Directory of scenario JSON files")->required();
            sub.add_option("--config", a.configs, "Configuration JSON file (repeatable)");
            sub.add_flag("--rfc", a.rfc, "Include the RFC 3626 default configuration");
            sub.add_flag("--best", a.best, "Include the built-in energy-aware reference configuration");
            sub.add_option("--seeds", a.seeds, "Simulation seeds per scenario")
                ->capture_default_str()
                ->check(CLI::PositiveNumber);
        }

        int cmd_validate(const ValidateArgs& a, const Common& common, Manifest& manifest, std::ostream& out)
        {
            std::error_code ec;
            if (!fs::is_directory(a.scenarios, ec))
            {
                throw UsageError("scenario directory not found: " + a.scenarios);
            }
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(a.scenarios))
            {
                const auto name = entry.path().filename().string();
                if (entry.is_regular_file() && entry.path().extension() == ".json" &&
                    !name.ends_with(".manifest.json"))
                {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            if (files.empty())
            {
                throw UsageError("no scenario files in " + a.scenarios);
            }

            std::vector<analysis::NamedConfig> configs;
            if (a.rfc)
            {
                configs.push_back({"rfc", olsr::rfc_default()});
            }
            if (a.best)
            {
                configs.push_back({"best", olsr::reference_best()});
            }
            for (const auto& path : a.configs)
            {
                configs.push_back({fs::path(path).stem().string(), load_config_input(path, manifest)});
            }
            if (configs.empty())
            {
                throw UsageError("validate needs at least one of --config, --rfc, --best");
            }

            std::vector<Scenario> scenarios;
            for (const auto& f : files)
            {
                scenarios.push_back(load_scenario_input(f, manifest));
            }
            std::vector<std::uint64_t> seeds;
            const std::uint64_t base = substream(common.seed, "simulation");
            for (int k = 0; k < a.seeds; ++k)
            {
                seeds.push_back(derive_seed({base, static_cast<std::uint64_t>(k)}));
            }

            const fs::path dir = resolve_out_dir(common);
            const auto report = analysis::validation_report(configs, scenarios, sim::default_nic(), seeds,
                                                            common.workers);
            write_output(manifest, dir, "report.csv", analysis::report_csv(report));
            const std::string table = analysis::report_text(report);
            write_output(manifest, dir, "report.txt", table);
            manifest.note("failed_cells", report.failed_cells);
            out << table;
            return report.failed_cells == 0 ? kExitOk : kExitDomain;
        }

        // -------------------------------------------------------------- bench

        struct BenchArgs
        {
            std::string scenario;
            std::vector<int> workers{1, 2, 4, 8};
            int reps = 3;
            int pop = 24;
            int gens = 5;
            int pad_ms = 100;
        };

        void add_bench(CLI::App& sub, BenchArgs& a)
        {
            // --workers here is a list; the common single-value flag does not apply.
            sub.add_option("--workers", a.workers, "Worker counts to time, comma separated")
                ->delimiter(',')
                ->capture_default_str()
                ->check(CLI::PositiveNumber);
            sub.add_option("--scenario", a.scenario, "Scenario JSON file (default: a generated 400x300 m, 20-vehicle scenario)");
            sub.add_option("--reps", a.reps, "Repetitions per worker count")->capture_default_str()->check(CLI::PositiveNumber);
            sub.add_option("--pop", a.pop, "Population size")->capture_default_str();
            sub.add_option("--gens", a.gens, "Generations")->capture_default_str();
            sub.add_option("--pad-ms", a.pad_ms, "Minimum wall time per evaluation, ms")
                ->capture_default_str()
                ->check(CLI::NonNegativeNumber);
        }

        int cmd_bench(BenchArgs a, const Common& common, Manifest& manifest, std::ostream& out)
        {
            Scenario scenario;
            if (!a.scenario.empty())
            {
                scenario = load_scenario_input(a.scenario, manifest);
            }
            else
            {
                GridSpec spec;
                CbrFlow flow;
                flow.start = 60.0;
                scenario = generate_grid_scenario(spec, 10, flow, substream(common.seed, "scenario"));
            }
            std::vector<int> workers;
            for (int m : a.workers)
            {
                if (std::find(workers.begin(), workers.end(), m) == workers.end())
                {
                    workers.push_back(m);
                }
            }
            if (std::find(workers.begin(), workers.end(), 1) == workers.end())
            {
                workers.insert(workers.begin(), 1);
            }

            const fs::path dir = resolve_out_dir(common);
            const auto nic = sim::default_nic();
            const auto ctx = evo::calibrate_context(scenario, nic, evo::calibration_seed(common.seed));
            const evo::SimulationEvaluator evaluator(scenario, nic, ctx, std::chrono::milliseconds{a.pad_ms});
            const auto& space = olsr::ParamSpace::standard();

            std::vector<double> means;
            std::optional<olsr::Genome> reference_best;
            bool identical = true;
            for (int m : workers)
            {
                evo::GaSettings settings;
                settings.pop_size = a.pop;
                settings.generations = a.gens;
                settings.workers = m;
                settings.master_seed = common.seed;
                settings.validate();
                double total = 0.0;
                for (int r = 0; r < a.reps; ++r)
                {
                    const auto t0 = std::chrono::steady_clock::now();
                    const auto result = evo::evolve(settings, space, evaluator);
                    total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    if (!reference_best)
                    {
                        reference_best = result.best.genes;
                    }
                    identical = identical && result.best.genes == *reference_best;
                }
                means.push_back(total / a.reps);
                out << "m=" << m << " mean_time=" << text::format_fixed(means.back(), 3) << " s\n";
            }
            const auto points = analysis::bench_table(workers, means, a.reps);
            write_output(manifest, dir, "bench.csv", analysis::bench_csv(points));
            manifest.note("best_identical_across_workers", identical);
            if (!identical)
            {
                throw ValidationError("best configuration differs between worker counts");
            }
            return kExitOk;
        }

        int map_exception(std::ostream& err)
        {
            try
            {
                throw;
            }
            catch (const UsageError& e)
            {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            catch (const ConfigError& e)
            {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            catch (const ParseError& e)
            {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            catch (const std::exception& e)
            {
                err << "error: " << e.what() << '\n';
                return kExitDomain;
            }
        }
    } // namespace

    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
    {
        CLI::App app{"Energy-aware OLSR tuning for vehicular networks", "eolsr"};
        app.require_subcommand(1);
        app.failure_message(CLI::FailureMessage::help);
        app.set_version_flag("--version", EOLSR_VERSION);

        Common common;
        auto add_common = [&](CLI::App& sub, bool workers) {
            sub.add_option("--seed", common.seed, "Master seed")->capture_default_str();
            sub.add_option("--out", common.out,
                           std::string("Output directory (default: $") + kOutDirEnv + " or the current directory)");
            if (workers)
            {
                sub.add_option("--workers", common.workers, "Worker threads")
                    ->capture_default_str()
                    ->check(CLI::PositiveNumber);
            }
        };

        GenArgs gen;
        auto* gen_cmd = app.add_subcommand("gen", "Generate grid-mobility scenarios");
        add_common(*gen_cmd, true);
        add_gen(*gen_cmd, gen);

        SimulateArgs simulate;
        auto* sim_cmd = app.add_subcommand("simulate", "Run one simulation and report metrics");
        add_common(*sim_cmd, true);
        add_simulate(*sim_cmd, simulate);

        TuneArgs tune;
        auto* tune_cmd = app.add_subcommand("tune", "Search for an energy-aware configuration");
        add_common(*tune_cmd, true);
        add_tune(*tune_cmd, tune);

        ValidateArgs validate;
        auto* validate_cmd = app.add_subcommand("validate", "Compare configurations over a set of scenarios");
        add_common(*validate_cmd, true);
        add_validate(*validate_cmd, validate);

        BenchArgs bench;
        auto* bench_cmd = app.add_subcommand("bench", "Measure parallel speedup of the tuner");
        add_common(*bench_cmd, false);
        add_bench(*bench_cmd, bench);

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty())
        {
            reversed.pop_back(); // program name
        }
        try
        {
            app.parse(reversed);
        }
        catch (const CLI::ParseError& e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }

        CLI::App* sub = app.get_subcommands().front();
        Manifest manifest(sub->get_name(), args, common.seed);
        manifest.set_config(option_snapshot(*sub));
        try
        {
            int code = kExitOk;
            if (sub == gen_cmd)
            {
                code = cmd_gen(gen, common, manifest, out);
            }
            else if (sub == sim_cmd)
            {
                code = cmd_simulate(simulate, common, manifest, out);
            }
            else if (sub == tune_cmd)
            {
                code = cmd_tune(tune, common, manifest, out);
            }
            else if (sub == validate_cmd)
            {
                code = cmd_validate(validate, common, manifest, out);
            }
            else
            {
                code = cmd_bench(bench, common, manifest, out);
            }
            manifest.write(resolve_out_dir(common));
            return code;
        }
        catch (...)
        {
            return map_exception(err);
        }
    }
} // namespace eolsr::cli
