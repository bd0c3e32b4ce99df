#pragma once

#include "eolsr/olsr.hpp"
#include "eolsr/scenario.hpp"
#include "eolsr/sim.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eolsr::analysis
{
    struct NamedConfig
    {
        std::string name;
        olsr::OlsrConfig config;
    };

    enum ReportColumn : std::size_t
    {
        kESent,
        kERecv,
        kETotal,
        kETotalPerVehicle,
        kPdr,
        kE2ed,
        kNrl,
        kHops,
        kReportColumnCount,
    };

    struct ReportRow
    {
        std::string config;
        std::array<std::optional<double>, kReportColumnCount> values;
        int runs = 0;
    };

    struct ReportSection
    {
        std::string name; // scenario class, or "overall"
        std::vector<ReportRow> rows;
        // Index of the best row per column (lowest, except PDR which is highest).
        std::array<std::optional<std::size_t>, kReportColumnCount> best;
    };

    struct ValidationReport
    {
        std::vector<ReportSection> sections;
        int failed_cells = 0;
    };

    // Simulates every (config, scenario, seed) cell on `workers` threads and averages
    // per config within each scenario class and overall. Failed cells are skipped.
    ValidationReport validation_report(const std::vector<NamedConfig>& configs, const std::vector<Scenario>& scenarios,
                                       const sim::NicProfile& nic, const std::vector<std::uint64_t>& seeds,
                                       int workers = 1);

    std::string report_csv(const ValidationReport& report);
    std::string report_text(const ValidationReport& report);
} // namespace eolsr::analysis
