#include "eolsr/analysis.hpp"
#include "eolsr/error.hpp"
#include "eolsr/evo.hpp"
#include "eolsr/olsr.hpp"
#include "eolsr/scenario.hpp"
#include "eolsr/sim.hpp"

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace eolsr;

namespace
{
    py::dict metrics_dict(const sim::SimMetrics& m)
    {
        py::dict d;
        auto opt = [](const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); };
        d["pdr"] = opt(m.pdr);
        d["e2ed_ms"] = opt(m.e2ed);
        d["nrl"] = opt(m.nrl);
        d["hops"] = opt(m.hops);
        d["e_sent_mj"] = m.energy.e_sent();
        d["e_recv_mj"] = m.energy.e_recv();
        d["e_total_mj"] = m.energy.e_total();
        d["e_total_per_vehicle_mj"] = m.energy.e_total_per_vehicle();
        d["data_sent"] = m.data_sent;
        d["data_delivered"] = m.data_delivered;
        d["control_tx"] = m.control_transmissions;
        d["control_energy_mj"] = m.control_energy;
        return d;
    }

    py::dict rank_dict(const analysis::RankTestResult& r)
    {
        py::dict d;
        d["statistic"] = r.statistic;
        d["p_value"] = r.p_value ? py::cast(*r.p_value) : py::none();
        d["avg_ranks"] = r.avg_ranks;
        d["w_plus"] = r.w_plus;
        d["w_minus"] = r.w_minus;
        d["n_nonzero"] = r.n_nonzero;
        return d;
    }
} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Energy-aware OLSR simulation and tuning";

    auto base = py::register_exception<Error>(m, "EolsrError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<LookupError>(m, "NodeLookupError", base.ptr());

    py::class_<olsr::OlsrConfig>(m, "OlsrConfig")
        .def(py::init<>())
        .def_readwrite("hello_interval", &olsr::OlsrConfig::hello_interval)
        .def_readwrite("refresh_interval", &olsr::OlsrConfig::refresh_interval)
        .def_readwrite("tc_interval", &olsr::OlsrConfig::tc_interval)
        .def_readwrite("willingness", &olsr::OlsrConfig::willingness)
        .def_readwrite("neighb_hold_time", &olsr::OlsrConfig::neighb_hold_time)
        .def_readwrite("top_hold_time", &olsr::OlsrConfig::top_hold_time)
        .def_readwrite("mid_hold_time", &olsr::OlsrConfig::mid_hold_time)
        .def_readwrite("dup_hold_time", &olsr::OlsrConfig::dup_hold_time)
        .def("validate", &olsr::OlsrConfig::validate)
        .def("to_json", [](const olsr::OlsrConfig& c) { return olsr::config_to_json(c); })
        .def_static("from_json", &olsr::config_from_json)
        .def(py::self == py::self)
        .def("__repr__", [](const olsr::OlsrConfig& c) { return "OlsrConfig(" + olsr::config_to_json(c) + ")"; });

    m.def("rfc_default", &olsr::rfc_default);
    m.def("reference_best", &olsr::reference_best);
    m.def("load_config", &olsr::load_config_file, py::arg("path"));

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readonly("scenario_class", &Scenario::scenario_class)
        .def_readonly("radio_range", &Scenario::radio_range)
        .def_readonly("sim_duration", &Scenario::sim_duration)
        .def_property_readonly("node_count", &Scenario::node_count)
        .def_property_readonly("flow_count", [](const Scenario& s) { return s.flows.size(); })
        .def_property_readonly("area", [](const Scenario& s) { return std::make_pair(s.area.width, s.area.height); })
        .def("position", [](const Scenario& s, NodeId node, double t) {
            const Vec2 p = s.trace.position_at(node, t);
            return std::make_pair(p.x, p.y);
        })
        .def(
            "save", [](const Scenario& s, const std::filesystem::path& dir, const std::string& stem) {
                return save_scenario(s, dir, stem);
            },
            py::arg("dir"), py::arg("stem"));

    m.def("load_scenario", &load_scenario_file, py::arg("path"));
    m.def(
        "generate_grid_scenario",
        [](double width, double height, int vehicles, int flows, std::uint64_t seed, int rows, int cols,
           double duration, double rate, double flow_start, double flow_duration, int packet_size) {
            GridSpec spec;
            spec.area = {width, height};
            spec.vehicle_count = vehicles;
            spec.rows = rows;
            spec.cols = cols;
            spec.duration = duration;
            CbrFlow flow;
            flow.rate = rate;
            flow.start = flow_start;
            flow.duration = flow_duration;
            flow.packet_size = packet_size;
            return generate_grid_scenario(spec, flows, flow, seed);
        },
        py::arg("width"), py::arg("height"), py::arg("vehicles"), py::arg("flows") = 0, py::arg("seed") = 1,
        py::arg("rows") = 4, py::arg("cols") = 4, py::arg("duration") = 180.0, py::arg("rate") = 1.0,
        py::arg("flow_start") = 60.0, py::arg("flow_duration") = 60.0, py::arg("packet_size") = 512);

    m.def(
        "simulate",
        [](const Scenario& s, const olsr::OlsrConfig& c, std::uint64_t seed, bool allow_no_flows) {
            sim::SimOptions options;
            options.allow_no_flows = allow_no_flows;
            sim::SimMetrics metrics;
            {
                py::gil_scoped_release release;
                metrics = sim::run_simulation(s, c, sim::default_nic(), seed, options);
            }
            return metrics_dict(metrics);
        },
        py::arg("scenario"), py::arg("config"), py::arg("seed") = 1, py::arg("allow_no_flows") = false);
    m.def(
        "compare_against_reference",
        [](const Scenario& s, const olsr::OlsrConfig& c, std::uint64_t seed) {
            std::optional<sim::Comparison> cmp;
            {
                py::gil_scoped_release release;
                cmp = sim::compare_against_reference(s, c, sim::default_nic(), seed);
            }
            py::dict d;
            d["candidate"] = metrics_dict(cmp->candidate);
            d["reference"] = metrics_dict(cmp->reference);
            d["gap_energy"] = cmp->gaps.energy;
            d["gap_pdr"] = cmp->gaps.pdr;
            return d;
        },
        py::arg("scenario"), py::arg("config"), py::arg("seed") = 1);

    m.def("packet_airtime", &sim::packet_airtime, py::arg("size_bits"), py::arg("bandwidth_bps") = 6e6);
    m.def("energy_send", [](double bits) { return sim::energy_send(sim::default_nic(), bits); }, py::arg("size_bits"));
    m.def("energy_recv", [](double bits) { return sim::energy_recv(sim::default_nic(), bits); }, py::arg("size_bits"));
    m.def(
        "broadcast_energy", [](double bits, int r) { return sim::broadcast_energy(sim::default_nic(), bits, r); },
        py::arg("size_bits"), py::arg("receivers"));

    py::class_<evo::FitnessContext>(m, "FitnessContext")
        .def(py::init([](double e_rfc, double pdr_rfc) {
                 evo::FitnessContext ctx;
                 ctx.e_rfc = e_rfc;
                 ctx.pdr_rfc = pdr_rfc;
                 ctx.validate();
                 return ctx;
             }),
             py::arg("e_rfc"), py::arg("pdr_rfc"))
        .def_readonly("e_rfc", &evo::FitnessContext::e_rfc)
        .def_readonly("pdr_rfc", &evo::FitnessContext::pdr_rfc)
        .def("pdr_threshold", &evo::FitnessContext::pdr_threshold);

    m.def("fitness", &evo::fitness, py::arg("energy"), py::arg("pdr"), py::arg("ctx"));
    m.def("penalized_fitness", &evo::penalized_fitness, py::arg("energy"), py::arg("pdr"), py::arg("ctx"));
    m.def("calibrate_context", [](const Scenario& s, std::uint64_t seed) {
        return evo::calibrate_context(s, sim::default_nic(), evo::calibration_seed(seed));
    }, py::arg("scenario"), py::arg("seed") = 1);
    m.def(
        "tune",
        [](const Scenario& s, int pop, int gens, double p_c, double p_m, int workers, std::uint64_t seed) {
            evo::GaSettings settings;
            settings.pop_size = pop;
            settings.generations = gens;
            settings.p_c = p_c;
            settings.p_m = p_m;
            settings.workers = workers;
            settings.master_seed = seed;
            settings.validate();
            std::optional<evo::EvolveResult> result;
            evo::FitnessContext ctx;
            {
                py::gil_scoped_release release;
                ctx = evo::calibrate_context(s, sim::default_nic(), evo::calibration_seed(seed));
                result = evo::evolve(settings, olsr::ParamSpace::standard(), s, sim::default_nic(), ctx);
            }
            py::dict d;
            const auto& chosen = result->best_admissible ? *result->best_admissible : result->best;
            d["best_config"] = olsr::decode_genome(chosen.genes);
            d["best_fitness"] = chosen.f();
            d["admissible"] = result->best_admissible.has_value();
            d["unconstrained_config"] = olsr::decode_genome(result->best.genes);
            d["unconstrained_fitness"] = result->best.f();
            d["e_rfc"] = ctx.e_rfc;
            d["pdr_rfc"] = ctx.pdr_rfc;
            d["history_csv"] = evo::history_csv(result->history);
            return d;
        },
        py::arg("scenario"), py::arg("pop") = 24, py::arg("gens") = 100, py::arg("p_c") = 0.7,
        py::arg("p_m") = 0.25, py::arg("workers") = 1, py::arg("seed") = 1);

    m.def("gap_energy", &analysis::gap_energy, py::arg("energy"), py::arg("e_rfc"));
    m.def("gap_pdr", &analysis::gap_pdr, py::arg("pdr"), py::arg("pdr_rfc"));
    m.def("speedup", &analysis::speedup, py::arg("mean_t1"), py::arg("mean_tm"));
    m.def("efficiency", &analysis::efficiency, py::arg("speedup"), py::arg("workers"));
    m.def("friedman", [](const std::vector<std::vector<double>>& matrix) {
        return rank_dict(analysis::friedman_ranks(matrix));
    });
    m.def("wilcoxon", [](const std::vector<double>& a, const std::vector<double>& b) {
        return rank_dict(analysis::wilcoxon_signed_rank(a, b));
    });
    m.def("kruskal_wallis", [](const std::vector<std::vector<double>>& groups) {
        return rank_dict(analysis::kruskal_wallis(groups));
    });
    m.def("ks_normality", [](const std::vector<double>& sample) {
        return rank_dict(analysis::ks_normality(sample));
    });
}
