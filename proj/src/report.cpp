#include "eolsr/report.hpp"

#include "eolsr/error.hpp"
#include "eolsr/evo.hpp"
#include "eolsr/text.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace eolsr::analysis
{
    namespace
    {
        constexpr std::array<const char*, kReportColumnCount> kColumnNames{
            "e_sent_mj", "e_recv_mj", "e_total_mj", "e_total_per_vehicle_mj", "pdr", "e2ed_ms", "nrl", "hops"};

        std::array<std::optional<double>, kReportColumnCount> columns_of(const sim::SimMetrics& m)
        {
            return {m.energy.e_sent(), m.energy.e_recv(), m.energy.e_total(), m.energy.e_total_per_vehicle(),
                    m.pdr,             m.e2ed,            m.nrl,              m.hops};
        }

        struct Accumulator
        {
            std::array<double, kReportColumnCount> sum{};
            std::array<int, kReportColumnCount> count{};
            int runs = 0;

            void add(const sim::SimMetrics& m)
            {
                const auto cols = columns_of(m);
                for (std::size_t c = 0; c < kReportColumnCount; ++c)
                {
                    if (cols[c])
                    {
                        sum[c] += *cols[c];
                        ++count[c];
                    }
                }
                ++runs;
            }

            ReportRow row(const std::string& name) const
            {
                ReportRow r{name, {}, runs};
                for (std::size_t c = 0; c < kReportColumnCount; ++c)
                {
                    if (count[c] > 0)
                    {
                        r.values[c] = sum[c] / count[c];
                    }
                }
                return r;
            }
        };

        void mark_best(ReportSection& section)
        {
            for (std::size_t c = 0; c < kReportColumnCount; ++c)
            {
                for (std::size_t r = 0; r < section.rows.size(); ++r)
                {
                    const auto& v = section.rows[r].values[c];
                    if (!v)
                    {
                        continue;
                    }
                    auto& best = section.best[c];
                    if (!best)
                    {
                        best = r;
                        continue;
                    }
                    const double current = *section.rows[*best].values[c];
                    if (c == kPdr ? *v > current : *v < current)
                    {
                        best = r;
                    }
                }
            }
        }
    } // namespace

    ValidationReport validation_report(const std::vector<NamedConfig>& configs, const std::vector<Scenario>& scenarios,
                                       const sim::NicProfile& nic, const std::vector<std::uint64_t>& seeds,
                                       int workers)
    {
        if (configs.empty() || scenarios.empty() || seeds.empty())
        {
            throw ConfigError("validation needs at least one config, scenario, and seed");
        }
        struct Cell
        {
            std::size_t config;
            std::size_t scenario;
            std::uint64_t seed;
            std::optional<sim::SimMetrics> metrics;
        };
        std::vector<Cell> cells;
        for (std::size_t c = 0; c < configs.size(); ++c)
        {
            for (std::size_t s = 0; s < scenarios.size(); ++s)
            {
                for (auto seed : seeds)
                {
                    cells.push_back({c, s, seed, std::nullopt});
                }
            }
        }

        evo::WorkerPool pool(workers);
        pool.run(cells.size(), [&](std::size_t i) {
            auto& cell = cells[i];
            try
            {
                cell.metrics = sim::run_simulation(scenarios[cell.scenario], configs[cell.config].config, nic, cell.seed);
            }
            catch (const std::exception& e)
            {
                std::cerr << "warning: " << configs[cell.config].name << " on " << scenarios[cell.scenario].name
                          << " (seed " << cell.seed << ") failed: " << e.what() << '\n';
            }
        });

        // class -> per-config accumulators; classes in first-seen order.
        std::vector<std::string> classes;
        std::map<std::string, std::vector<Accumulator>> by_class;
        std::vector<Accumulator> overall(configs.size());
        ValidationReport report;
        for (const auto& cell : cells)
        {
            if (!cell.metrics)
            {
                ++report.failed_cells;
                continue;
            }
            const auto& cls = scenarios[cell.scenario].scenario_class;
            if (!cls.empty())
            {
                auto [it, inserted] = by_class.try_emplace(cls, configs.size());
                if (inserted)
                {
                    classes.push_back(cls);
                }
                it->second[cell.config].add(*cell.metrics);
            }
            overall[cell.config].add(*cell.metrics);
        }

        auto make_section = [&](const std::string& name, const std::vector<Accumulator>& acc) {
            ReportSection section{name, {}, {}};
            for (std::size_t c = 0; c < configs.size(); ++c)
            {
                section.rows.push_back(acc[c].row(configs[c].name));
            }
            mark_best(section);
            return section;
        };
        for (const auto& cls : classes)
        {
            report.sections.push_back(make_section(cls, by_class.at(cls)));
        }
        report.sections.push_back(make_section("overall", overall));
        return report;
    }

    std::string report_csv(const ValidationReport& report)
    {
        std::ostringstream os;
        os << "section,config";
        for (const auto* name : kColumnNames)
        {
            os << ',' << name;
        }
        os << ",runs\n";
        for (const auto& section : report.sections)
        {
            for (const auto& row : section.rows)
            {
                os << section.name << ',' << row.config;
                for (const auto& v : row.values)
                {
                    os << ',' << (v ? text::format_double(*v) : std::string{});
                }
                os << ',' << row.runs << '\n';
            }
        }
        return os.str();
    }

    std::string report_text(const ValidationReport& report)
    {
        constexpr std::array<const char*, kReportColumnCount> headers{"E_sent", "E_recv", "E_total", "E_tot/v",
                                                                      "PDR",    "E2ED",   "NRL",     "hops"};
        constexpr std::array<int, kReportColumnCount> digits{2, 2, 2, 2, 2, 2, 2, 2};
        std::size_t name_width = 8;
        for (const auto& s : report.sections)
        {
            for (const auto& r : s.rows)
            {
                name_width = std::max(name_width, r.config.size() + 2);
            }
        }
        std::ostringstream os;
        os << std::left << std::setw(static_cast<int>(name_width)) << "config";
        for (const auto* h : headers)
        {
            os << std::right << std::setw(13) << h;
        }
        os << '\n';
        for (const auto& s : report.sections)
        {
            os << '[' << s.name << "]\n";
            for (std::size_t r = 0; r < s.rows.size(); ++r)
            {
                const auto& row = s.rows[r];
                os << std::left << std::setw(static_cast<int>(name_width)) << row.config;
                for (std::size_t c = 0; c < kReportColumnCount; ++c)
                {
                    std::string cell = row.values[c] ? text::format_fixed(*row.values[c], digits[c]) : "n/a";
                    if (s.best[c] == r)
                    {
                        cell += '*';
                    }
                    os << std::right << std::setw(13) << cell;
                }
                os << '\n';
            }
        }
        os << "(* best value per column; PDR highest, others lowest)\n";
        return os.str();
    }
} // namespace eolsr::analysis
