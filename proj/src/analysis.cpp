#include "eolsr/analysis.hpp"

#include "eolsr/error.hpp"
#include "eolsr/text.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace eolsr::analysis
{
    namespace
    {
        double chi_square_upper(double statistic, double df)
        {
            if (!(statistic > 0.0))
            {
                return 1.0;
            }
            boost::math::chi_squared dist(df);
            return boost::math::cdf(boost::math::complement(dist, statistic));
        }

        double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

        // Σ (t³ - t) over tie groups.
        double tie_term(std::span<const double> values)
        {
            std::map<double, int> counts;
            for (double v : values)
            {
                ++counts[v];
            }
            double sum = 0.0;
            for (const auto& [v, t] : counts)
            {
                sum += static_cast<double>(t) * t * t - t;
            }
            return sum;
        }
    } // namespace

    double gap_energy(double energy, double e_rfc)
    {
        if (!(e_rfc > 0.0))
        {
            throw ValidationError("reference energy must be positive");
        }
        return (e_rfc - energy) / e_rfc;
    }

    double gap_pdr(double pdr, double pdr_rfc) { return (pdr_rfc - pdr) / 100.0; }

    double speedup(double mean_t1, double mean_tm)
    {
        if (!(mean_t1 > 0.0 && mean_tm > 0.0))
        {
            throw ValidationError("execution times must be positive");
        }
        return mean_t1 / mean_tm;
    }

    double efficiency(double s, int workers)
    {
        if (workers < 1)
        {
            throw ValidationError("worker count must be at least 1");
        }
        return s / workers;
    }

    std::vector<BenchPoint> bench_table(std::span<const int> workers, std::span<const double> mean_times,
                                        int repetitions)
    {
        if (workers.empty() || workers.size() != mean_times.size())
        {
            throw ValidationError("bench table needs one mean time per worker count");
        }
        auto base = std::find(workers.begin(), workers.end(), 1);
        if (base == workers.end())
        {
            throw ValidationError("bench table needs a single-worker baseline");
        }
        const double t_base = mean_times[static_cast<std::size_t>(base - workers.begin())];
        std::vector<BenchPoint> out;
        for (std::size_t i = 0; i < workers.size(); ++i)
        {
            const double s = speedup(t_base, mean_times[i]);
            out.push_back({workers[i], mean_times[i], s, efficiency(s, workers[i]), repetitions});
        }
        return out;
    }

    std::string bench_csv(std::span<const BenchPoint> points)
    {
        std::ostringstream os;
        os << "m,mean_time_s,speedup,efficiency\n";
        for (const auto& p : points)
        {
            os << p.workers << ',' << text::format_double(p.mean_time) << ',' << text::format_double(p.speedup) << ','
               << text::format_double(p.efficiency) << '\n';
        }
        return os.str();
    }

    double mean(std::span<const double> v)
    {
        if (v.empty())
        {
            return 0.0;
        }
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    double stdev(std::span<const double> v)
    {
        if (v.size() < 2)
        {
            return 0.0;
        }
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v)
        {
            ss += (x - m) * (x - m);
        }
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    }

    std::vector<double> average_ranks(std::span<const double> values)
    {
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<double> ranks(values.size());
        std::size_t i = 0;
        while (i < order.size())
        {
            std::size_t j = i;
            while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            {
                ++j;
            }
            const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k)
            {
                ranks[order[k]] = r;
            }
            i = j + 1;
        }
        return ranks;
    }

    RankTestResult friedman_ranks(const std::vector<std::vector<double>>& matrix)
    {
        if (matrix.empty())
        {
            throw ValidationError("friedman test needs at least one subject");
        }
        const std::size_t k = matrix.front().size();
        if (k < 2)
        {
            throw ValidationError("friedman test needs at least two treatments");
        }
        const auto n = static_cast<double>(matrix.size());
        std::vector<double> rank_sums(k, 0.0);
        double sum_sq_ranks = 0.0;
        for (const auto& row : matrix)
        {
            if (row.size() != k)
            {
                throw ValidationError("friedman matrix rows must have equal length");
            }
            const auto ranks = average_ranks(row);
            for (std::size_t j = 0; j < k; ++j)
            {
                rank_sums[j] += ranks[j];
                sum_sq_ranks += ranks[j] * ranks[j];
            }
        }

        RankTestResult r;
        r.test = RankTest::Friedman;
        const double kd = static_cast<double>(k);
        double ss_treat = 0.0;
        for (double s : rank_sums)
        {
            r.avg_ranks.push_back(s / n);
            const double dev = s - n * (kd + 1.0) / 2.0;
            ss_treat += dev * dev;
        }
        // Tie-corrected form; reduces to 12/(nk(k+1)) Σ R_j² - 3n(k+1) without ties.
        const double denom = sum_sq_ranks - n * kd * (kd + 1.0) * (kd + 1.0) / 4.0;
        r.statistic = denom > 0.0 ? (kd - 1.0) * ss_treat / denom : 0.0;
        r.p_value = chi_square_upper(r.statistic, kd - 1.0);
        return r;
    }

    RankTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b)
    {
        if (a.size() != b.size() || a.empty())
        {
            throw ValidationError("wilcoxon test needs two non-empty samples of equal length");
        }
        std::vector<double> diffs;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double d = a[i] - b[i];
            if (d != 0.0)
            {
                diffs.push_back(d);
            }
        }
        if (diffs.empty())
        {
            throw ValidationError("no nonzero pairs");
        }
        std::vector<double> magnitudes;
        for (double d : diffs)
        {
            magnitudes.push_back(std::abs(d));
        }
        const auto ranks = average_ranks(magnitudes);

        RankTestResult r;
        r.test = RankTest::WilcoxonSignedRank;
        for (std::size_t i = 0; i < diffs.size(); ++i)
        {
            if (diffs[i] > 0.0)
            {
                r.w_plus += ranks[i];
                ++r.positive_count;
            }
            else
            {
                r.w_minus += ranks[i];
            }
        }
        r.n_nonzero = static_cast<int>(diffs.size());
        r.mean_positive_rank = r.positive_count > 0 ? r.w_plus / r.positive_count : 0.0;
        r.statistic = r.w_plus;

        const double n = r.n_nonzero;
        const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(magnitudes) / 48.0;
        if (variance > 0.0)
        {
            const double z = (r.w_plus - n * (n + 1.0) / 4.0) / std::sqrt(variance);
            r.p_value = normal_two_sided(z);
        }
        return r;
    }

    RankTestResult kruskal_wallis(const std::vector<std::vector<double>>& groups)
    {
        if (groups.size() < 2)
        {
            throw ValidationError("kruskal-wallis needs at least two groups");
        }
        std::vector<double> pooled;
        for (const auto& g : groups)
        {
            if (g.empty())
            {
                throw ValidationError("kruskal-wallis groups must be non-empty");
            }
            pooled.insert(pooled.end(), g.begin(), g.end());
        }
        const double n = static_cast<double>(pooled.size());
        const double ties = tie_term(pooled);
        const double correction = 1.0 - ties / (n * n * n - n);
        if (!(correction > 0.0))
        {
            throw ValidationError("all pooled observations are identical");
        }
        const auto ranks = average_ranks(pooled);

        double sum = 0.0;
        std::size_t offset = 0;
        for (const auto& g : groups)
        {
            double r = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
            {
                r += ranks[offset + i];
            }
            offset += g.size();
            sum += r * r / static_cast<double>(g.size());
        }
        RankTestResult res;
        res.test = RankTest::KruskalWallis;
        const double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
        res.statistic = h / correction;
        res.p_value = chi_square_upper(res.statistic, static_cast<double>(groups.size() - 1));
        return res;
    }

    RankTestResult ks_normality(std::span<const double> sample)
    {
        if (sample.size() < 2)
        {
            throw ValidationError("ks test needs at least two observations");
        }
        const double m = mean(sample);
        const double sd = stdev(sample);
        if (!(sd > 0.0))
        {
            throw ValidationError("ks test sample is constant");
        }
        std::vector<double> sorted(sample.begin(), sample.end());
        std::sort(sorted.begin(), sorted.end());
        const double n = static_cast<double>(sorted.size());
        double d = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i)
        {
            const double cdf = 0.5 * std::erfc(-(sorted[i] - m) / (sd * std::sqrt(2.0)));
            d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
        }
        RankTestResult r;
        r.test = RankTest::KsNormality;
        r.statistic = d;
        return r;
    }
} // namespace eolsr::analysis
