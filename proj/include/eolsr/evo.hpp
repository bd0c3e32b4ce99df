#pragma once

#include "eolsr/olsr.hpp"
#include "eolsr/rng.hpp"
#include "eolsr/sim.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace eolsr::evo
{
    using olsr::Genome;
    using olsr::ParamSpace;

    // Reference values and weights of the energy/PDR fitness.
    struct FitnessContext
    {
        double e_rfc = 1.0;    // mJ
        double pdr_rfc = 100.0; // percent
        double w1 = 0.9;
        double w2 = -0.1;
        double delta = 0.1;
        double pdr_max = 100.0;
        double admission = 0.85;

        void validate() const;
        // Lowest PDR evaluated without penalty.
        double pdr_threshold() const noexcept { return admission * pdr_rfc; }
    };

    // Minimized. delta + w1 * E/E_rfc + w2 * PDR/PDR_max.
    double fitness(double energy, double pdr, const FitnessContext& ctx);
    // fitness + 0.85 * (PDR_rfc - PDR)/PDR_rfc * E/E_rfc.
    double penalized_fitness(double energy, double pdr, const FitnessContext& ctx);

    struct FitnessRecord
    {
        double f = 0.0;
        double f_raw = 0.0;
        bool penalized = false;
        bool failed = false;
        double energy = 0.0;
        double pdr = 0.0;
        std::optional<sim::SimMetrics> metrics;
    };

    // Fitness of a failed evaluation: worse than any admissible or penalized score
    // with E <= E_rfc.
    inline constexpr double kFailedFitness = 2.0;

    // Applies the penalty when pdr falls below the admission threshold.
    FitnessRecord score(double energy, double pdr, const FitnessContext& ctx);
    FitnessRecord failed_record();

    struct IndividualId
    {
        int generation = 0;
        int index = 0;
    };

    struct Individual
    {
        Genome genes{};
        std::optional<FitnessRecord> fitness;
        IndividualId id;

        double f() const { return fitness.value().f; }
    };

    using Population = std::vector<Individual>;

    struct GaSettings
    {
        int pop_size = 24;
        double p_c = 0.7;
        double p_m = 0.25;
        int generations = 100;
        int workers = 1;
        std::uint64_t master_seed = 1;
        int elitism = 1;

        void validate() const;
    };

    // Simulation seed for an individual; independent of worker count.
    std::uint64_t evaluation_seed(std::uint64_t master_seed, int generation, int index);
    // Seed for calibrating E_rfc / PDR_rfc.
    std::uint64_t calibration_seed(std::uint64_t master_seed);

    // Any function mapping (genome, simulation seed) to a record; must be thread-safe.
    using Evaluator = std::function<FitnessRecord(const Genome&, std::uint64_t seed)>;

    // Decodes the genome and simulates it on a scenario.
    class SimulationEvaluator
    {
    public:
        SimulationEvaluator(const Scenario& scenario, const sim::NicProfile& nic, const FitnessContext& ctx,
                            std::chrono::milliseconds min_eval_time = std::chrono::milliseconds{0});

        FitnessRecord operator()(const Genome& genes, std::uint64_t seed) const;

    private:
        const Scenario* scenario_;
        sim::NicProfile nic_;
        FitnessContext ctx_;
        std::chrono::milliseconds min_eval_time_;
    };

    // Runs the reference configuration once and returns the derived context.
    FitnessContext calibrate_context(const Scenario& scenario, const sim::NicProfile& nic, std::uint64_t seed);

    FitnessRecord evaluate(const Individual& ind, const Scenario& scenario, const sim::NicProfile& nic,
                           const FitnessContext& ctx, std::uint64_t master_seed);

    // ---------------------------------------------------------- operators

    // Offset of individual p inside its diagonal band: ((p + beta)/pop_size) * span.
    double diagonal_offset(const olsr::GeneBounds& bounds, int p, int pop_size, double beta);
    // RFC default plus the diagonal offset, wrapped back into range (integer genes rounded).
    double diagonal_gene(const olsr::GeneBounds& bounds, int p, int pop_size, double beta);
    Population diagonal_init(const ParamSpace& space, int pop_size, Rng& rng);

    // child1 = s*p + (1-s)*q, child2 = (1-s)*p + s*q, repaired into the space.
    std::pair<Genome, Genome> arithmetic_crossover(const Genome& fitter, const Genome& other, double sigma,
                                                   const ParamSpace& space = ParamSpace::standard());

    inline constexpr int kMovementCount = 22;

    // Mutation catalog, numbered 1..22.
    enum class Movement : int
    {
        ResampleHello = 1,
        ResampleRefresh,
        ResampleTc,
        ResampleWillingness,
        ResampleNeighbHold,
        ResampleMidHold,
        ResampleTopHold,
        ResampleDupHold,
        ResampleHelloNeighb,
        ResampleTcTop,
        ResampleTcMid,
        ResampleRefreshHello,
        NeighbFromHello,
        TopFromTc,
        MidFromTc,
        ScaleHello,
        ScaleTc,
        StepWillingness,
        ResampleHoldTimes,
        ResampleIntervals,
        ResetOneToRfc,
        ResampleAll,
    };

    // z_min + beta * span (integer genes map beta onto equally likely values).
    double resample_gene(const ParamSpace& space, std::size_t gene, double beta);
    Genome apply_movement(Genome genes, Movement move, Rng& rng, const ParamSpace& space = ParamSpace::standard());
    // Uniformly picks one movement and applies it.
    Genome mutate(const Genome& genes, Rng& rng, const ParamSpace& space = ParamSpace::standard());

    // Binary tournament (minimization). Returns an index into the population.
    std::size_t tournament_select(const Population& population, Rng& rng);

    // --------------------------------------------------------- worker pool

    // Fixed-size pool executing index-parallel batches with a barrier at the end.
    class WorkerPool
    {
    public:
        explicit WorkerPool(int workers);
        ~WorkerPool();
        WorkerPool(const WorkerPool&) = delete;
        WorkerPool& operator=(const WorkerPool&) = delete;

        int size() const noexcept { return workers_; }

        // Calls task(i) for i in [0, count); returns after all calls complete.
        void run(std::size_t count, const std::function<void(std::size_t)>& task);

    private:
        void loop();

        int workers_;
        std::vector<std::jthread> threads_;
        std::mutex mutex_;
        std::condition_variable wake_;
        std::condition_variable done_;
        const std::function<void(std::size_t)>* task_ = nullptr;
        std::size_t count_ = 0;
        std::size_t next_ = 0;
        std::size_t finished_ = 0;
        std::uint64_t batch_ = 0;
        bool stop_ = false;
    };

    // ------------------------------------------------------------ evolution

    struct GenerationStats
    {
        int generation;
        double best_f;
        double avg_f;
        double best_energy;
        double best_pdr;
        int penalized_count;
    };

    struct EvolveResult
    {
        Individual best;
        // Lowest-F individual evaluated without the PDR penalty; the penalty can be
        // too weak to stop low-energy, low-PDR settings from winning on F alone.
        std::optional<Individual> best_admissible;
        std::vector<GenerationStats> history;
        Population final_population;
    };

    EvolveResult evolve(const GaSettings& settings, const ParamSpace& space, const Evaluator& evaluator);
    EvolveResult evolve(const GaSettings& settings, const ParamSpace& space, const Scenario& scenario,
                        const sim::NicProfile& nic, const FitnessContext& ctx);

    std::string history_csv(const std::vector<GenerationStats>& history);

    struct GridRow
    {
        double p_c;
        double p_m;
        double avg_f;
        double stdev_pct; // relative standard deviation of the best fitness, percent
        double best_f;
        double avg_energy;
        double avg_pdr;
        double avg_gap_energy; // fraction
        double avg_gap_pdr;    // fraction
        int repetitions;
    };

    // Runs evolve for every (p_c, p_m) pair; repetition r uses a seed derived from
    // (base.master_seed, r).
    std::vector<GridRow> parameter_setting_grid(const std::vector<double>& p_c_values,
                                                const std::vector<double>& p_m_values, int repetitions,
                                                const GaSettings& base, const ParamSpace& space,
                                                const Evaluator& evaluator, const FitnessContext& ctx);

    std::string grid_csv(const std::vector<GridRow>& rows);
} // namespace eolsr::evo
