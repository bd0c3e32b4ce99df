#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eolsr::analysis
{
    // Relative energy saving against the reference; positive means savings.
    double gap_energy(double energy, double e_rfc);

    // PDR loss against the reference, as a fraction of 100 percentage points.
    // Positive means loss; reports display the negated value.
    double gap_pdr(double pdr, double pdr_rfc);

    double speedup(double mean_t1, double mean_tm);
    double efficiency(double speedup, int workers);

    struct BenchPoint
    {
        int workers;
        double mean_time; // s
        double speedup;
        double efficiency;
        int repetitions;
    };

    // Builds speedup/efficiency rows from mean times; the single-worker row is the baseline.
    std::vector<BenchPoint> bench_table(std::span<const int> workers, std::span<const double> mean_times,
                                        int repetitions);
    std::string bench_csv(std::span<const BenchPoint> points);

    enum class RankTest
    {
        Friedman,
        WilcoxonSignedRank,
        KruskalWallis,
        KsNormality,
    };

    struct RankTestResult
    {
        RankTest test = RankTest::Friedman;
        double statistic = 0.0;
        std::optional<double> p_value;

        // Friedman: average rank per treatment.
        std::vector<double> avg_ranks;

        // Wilcoxon: W+ / W- over the n nonzero differences.
        double w_plus = 0.0;
        double w_minus = 0.0;
        int n_nonzero = 0;
        int positive_count = 0;
        double mean_positive_rank = 0.0;
    };

    // Average ranks (1-based, ties share the mean rank).
    std::vector<double> average_ranks(std::span<const double> values);

    // rows = subjects, columns = treatments; ascending ranks within each row.
    RankTestResult friedman_ranks(const std::vector<std::vector<double>>& matrix);
    // Two-sided, normal approximation with tie correction; statistic = W+.
    RankTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);
    // Tie-corrected H with chi-square p-value.
    RankTestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);
    // D statistic against a normal fitted with the sample mean and (n-1) standard deviation.
    RankTestResult ks_normality(std::span<const double> sample);

    double mean(std::span<const double> v);
    // Sample standard deviation (n-1); 0 for fewer than two values.
    double stdev(std::span<const double> v);
} // namespace eolsr::analysis
