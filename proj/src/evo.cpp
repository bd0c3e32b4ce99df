#include "eolsr/evo.hpp"

#include "eolsr/analysis.hpp"
#include "eolsr/error.hpp"
#include "eolsr/text.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

namespace eolsr::evo
{
    // ------------------------------------------------------------- fitness

    void FitnessContext::validate() const
    {
        if (!(e_rfc > 0.0))
        {
            throw ValidationError("E_rfc must be positive");
        }
        if (!(pdr_rfc > 0.0 && pdr_rfc <= 100.0))
        {
            throw ValidationError("PDR_rfc must lie in (0, 100]");
        }
        if (std::abs(w1 + std::abs(w2) - 1.0) > 1e-12)
        {
            throw ValidationError("fitness weights must satisfy w1 + |w2| = 1");
        }
    }

    double fitness(double energy, double pdr, const FitnessContext& ctx)
    {
        return ctx.delta + (ctx.w1 * energy / ctx.e_rfc + ctx.w2 * pdr / ctx.pdr_max);
    }

    double penalized_fitness(double energy, double pdr, const FitnessContext& ctx)
    {
        return fitness(energy, pdr, ctx) + ctx.admission * (ctx.pdr_rfc - pdr) / ctx.pdr_rfc * energy / ctx.e_rfc;
    }

    FitnessRecord score(double energy, double pdr, const FitnessContext& ctx)
    {
        FitnessRecord r;
        r.energy = energy;
        r.pdr = pdr;
        r.f_raw = fitness(energy, pdr, ctx);
        r.penalized = pdr < ctx.pdr_threshold();
        r.f = r.penalized ? penalized_fitness(energy, pdr, ctx) : r.f_raw;
        return r;
    }

    FitnessRecord failed_record()
    {
        FitnessRecord r;
        r.f = kFailedFitness;
        r.f_raw = kFailedFitness;
        r.penalized = true;
        r.failed = true;
        return r;
    }

    void GaSettings::validate() const
    {
        if (pop_size < 2 || pop_size % 2 != 0)
        {
            throw ConfigError("population size must be even and at least 2");
        }
        if (!(p_c >= 0.0 && p_c <= 1.0) || !(p_m >= 0.0 && p_m <= 1.0))
        {
            throw ConfigError("p_c and p_m must lie in [0, 1]");
        }
        if (generations < 0)
        {
            throw ConfigError("generations must be non-negative");
        }
        if (workers < 1)
        {
            throw ConfigError("workers must be at least 1");
        }
        if (elitism < 0 || elitism > pop_size)
        {
            throw ConfigError("elitism must lie in [0, pop_size]");
        }
    }

    std::uint64_t evaluation_seed(std::uint64_t master_seed, int generation, int index)
    {
        return derive_seed({substream(master_seed, "simulation"), static_cast<std::uint64_t>(generation),
                            static_cast<std::uint64_t>(index)});
    }

    std::uint64_t calibration_seed(std::uint64_t master_seed) { return substream(master_seed, "simulation"); }

    SimulationEvaluator::SimulationEvaluator(const Scenario& scenario, const sim::NicProfile& nic,
                                             const FitnessContext& ctx, std::chrono::milliseconds min_eval_time)
        : scenario_(&scenario), nic_(nic), ctx_(ctx), min_eval_time_(min_eval_time)
    {
        ctx_.validate();
    }

    FitnessRecord SimulationEvaluator::operator()(const Genome& genes, std::uint64_t seed) const
    {
        const auto start = std::chrono::steady_clock::now();
        const auto config = olsr::decode_genome(genes);
        auto metrics = sim::run_simulation(*scenario_, config, nic_, seed);
        auto record = score(metrics.energy.e_total(), metrics.pdr.value_or(0.0), ctx_);
        record.metrics = std::move(metrics);
        if (min_eval_time_.count() > 0)
        {
            std::this_thread::sleep_until(start + min_eval_time_);
        }
        return record;
    }

    FitnessContext calibrate_context(const Scenario& scenario, const sim::NicProfile& nic, std::uint64_t seed)
    {
        const auto m = sim::run_simulation(scenario, olsr::rfc_default(), nic, seed);
        FitnessContext ctx;
        ctx.e_rfc = m.energy.e_total();
        ctx.pdr_rfc = m.pdr.value_or(0.0);
        ctx.validate();
        return ctx;
    }

    FitnessRecord evaluate(const Individual& ind, const Scenario& scenario, const sim::NicProfile& nic,
                           const FitnessContext& ctx, std::uint64_t master_seed)
    {
        SimulationEvaluator eval(scenario, nic, ctx);
        return eval(ind.genes, evaluation_seed(master_seed, ind.id.generation, ind.id.index));
    }

    // ----------------------------------------------------------- operators

    double diagonal_offset(const olsr::GeneBounds& bounds, int p, int pop_size, double beta)
    {
        return (static_cast<double>(p) + beta) / static_cast<double>(pop_size) * bounds.span();
    }

    double diagonal_gene(const olsr::GeneBounds& bounds, int p, int pop_size, double beta)
    {
        const double raw = bounds.rfc_default + diagonal_offset(bounds, p, pop_size, beta);
        double v = bounds.min + std::fmod(raw - bounds.min, bounds.span());
        if (bounds.integer)
        {
            v = std::round(v);
        }
        return std::clamp(v, bounds.min, bounds.max);
    }

    Population diagonal_init(const ParamSpace& space, int pop_size, Rng& rng)
    {
        if (pop_size < 1)
        {
            throw ConfigError("population size must be at least 1");
        }
        Population pop(static_cast<std::size_t>(pop_size));
        for (int p = 0; p < pop_size; ++p)
        {
            auto& ind = pop[static_cast<std::size_t>(p)];
            ind.id = {0, p};
            for (std::size_t i = 0; i < olsr::kGeneCount; ++i)
            {
                ind.genes[i] = diagonal_gene(space.genes[i], p, pop_size, rng.uniform());
            }
        }
        return pop;
    }

    std::pair<Genome, Genome> arithmetic_crossover(const Genome& fitter, const Genome& other, double sigma,
                                                   const ParamSpace& space)
    {
        Genome a{};
        Genome b{};
        for (std::size_t i = 0; i < olsr::kGeneCount; ++i)
        {
            a[i] = sigma * fitter[i] + (1.0 - sigma) * other[i];
            b[i] = (1.0 - sigma) * fitter[i] + sigma * other[i];
        }
        return {space.repair(a), space.repair(b)};
    }

    double resample_gene(const ParamSpace& space, std::size_t gene, double beta)
    {
        const auto& b = space.genes[gene];
        if (b.integer)
        {
            const double steps = b.span() + 1.0;
            return b.min + std::min(std::floor(beta * steps), b.span());
        }
        return b.min + beta * b.span();
    }

    Genome apply_movement(Genome g, Movement move, Rng& rng, const ParamSpace& space)
    {
        using olsr::Gene;
        auto resample = [&](std::initializer_list<std::size_t> genes) {
            for (auto i : genes)
            {
                g[i] = resample_gene(space, i, rng.uniform());
            }
        };
        const int id = static_cast<int>(move);
        if (id >= 1 && id <= 8)
        {
            resample({static_cast<std::size_t>(id - 1)});
            return space.repair(g);
        }
        switch (move)
        {
        case Movement::ResampleHelloNeighb:
            resample({olsr::kHello, olsr::kNeighbHold});
            break;
        case Movement::ResampleTcTop:
            resample({olsr::kTc, olsr::kTopHold});
            break;
        case Movement::ResampleTcMid:
            resample({olsr::kTc, olsr::kMidHold});
            break;
        case Movement::ResampleRefreshHello:
            resample({olsr::kRefresh, olsr::kHello});
            break;
        case Movement::NeighbFromHello:
            g[olsr::kNeighbHold] = 3.0 * g[olsr::kHello];
            break;
        case Movement::TopFromTc:
            g[olsr::kTopHold] = 3.0 * g[olsr::kTc];
            break;
        case Movement::MidFromTc:
            g[olsr::kMidHold] = 3.0 * g[olsr::kTc];
            break;
        case Movement::ScaleHello:
            g[olsr::kHello] *= rng.uniform(0.5, 2.0);
            break;
        case Movement::ScaleTc:
            g[olsr::kTc] *= rng.uniform(0.5, 2.0);
            break;
        case Movement::StepWillingness:
            g[olsr::kWillingness] += rng.below(2) == 0 ? -1.0 : 1.0;
            break;
        case Movement::ResampleHoldTimes:
            resample({olsr::kNeighbHold, olsr::kMidHold, olsr::kTopHold, olsr::kDupHold});
            break;
        case Movement::ResampleIntervals:
            resample({olsr::kHello, olsr::kRefresh, olsr::kTc});
            break;
        case Movement::ResetOneToRfc:
        {
            const auto i = static_cast<std::size_t>(rng.below(olsr::kGeneCount));
            g[i] = space.genes[i].rfc_default;
            break;
        }
        case Movement::ResampleAll:
            resample({0, 1, 2, 3, 4, 5, 6, 7});
            break;
        default:
            throw ValidationError("unknown mutation movement " + std::to_string(id));
        }
        return space.repair(g);
    }

    Genome mutate(const Genome& genes, Rng& rng, const ParamSpace& space)
    {
        const auto move = static_cast<Movement>(1 + static_cast<int>(rng.below(kMovementCount)));
        return apply_movement(genes, move, rng, space);
    }

    std::size_t tournament_select(const Population& population, Rng& rng)
    {
        const std::size_t n = population.size();
        if (n < 2)
        {
            throw ValidationError("tournament selection needs at least two individuals");
        }
        const auto a = static_cast<std::size_t>(rng.below(n));
        auto b = static_cast<std::size_t>(rng.below(n - 1));
        if (b >= a)
        {
            ++b;
        }
        const double fa = population[a].f();
        const double fb = population[b].f();
        if (fa != fb)
        {
            return fa < fb ? a : b;
        }
        return std::min(a, b);
    }

    // ---------------------------------------------------------- worker pool

    WorkerPool::WorkerPool(int workers) : workers_(std::max(1, workers))
    {
        if (workers_ > 1)
        {
            for (int i = 0; i < workers_; ++i)
            {
                threads_.emplace_back([this] { loop(); });
            }
        }
    }

    WorkerPool::~WorkerPool()
    {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
    }

    void WorkerPool::run(std::size_t count, const std::function<void(std::size_t)>& task)
    {
        if (threads_.empty())
        {
            for (std::size_t i = 0; i < count; ++i)
            {
                task(i);
            }
            return;
        }
        std::unique_lock lock(mutex_);
        task_ = &task;
        count_ = count;
        next_ = 0;
        finished_ = 0;
        ++batch_;
        wake_.notify_all();
        done_.wait(lock, [&] { return finished_ == count_; });
        task_ = nullptr;
    }

    void WorkerPool::loop()
    {
        std::unique_lock lock(mutex_);
        while (true)
        {
            wake_.wait(lock, [&] { return stop_ || (task_ != nullptr && next_ < count_); });
            if (stop_)
            {
                return;
            }
            const std::size_t i = next_++;
            const auto* task = task_;
            lock.unlock();
            (*task)(i);
            lock.lock();
            if (++finished_ == count_)
            {
                done_.notify_all();
            }
        }
    }

    // ------------------------------------------------------------ evolution

    namespace
    {
        void evaluate_all(Population& pop, const Evaluator& evaluator, std::uint64_t master_seed, WorkerPool& pool)
        {
            pool.run(pop.size(), [&](std::size_t i) {
                auto& ind = pop[i];
                try
                {
                    ind.fitness = evaluator(ind.genes, evaluation_seed(master_seed, ind.id.generation, ind.id.index));
                }
                catch (const std::exception& e)
                {
                    std::cerr << "warning: evaluation (" << ind.id.generation << ", " << ind.id.index
                              << ") failed: " << e.what() << '\n';
                    ind.fitness = failed_record();
                }
            });
        }

        bool fitter(const Individual& a, const Individual& b) { return a.f() < b.f(); }

        // Indices sorted by fitness, ties in population order.
        std::vector<std::size_t> ranked(const Population& pop)
        {
            std::vector<std::size_t> idx(pop.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) { return fitter(pop[a], pop[b]); });
            return idx;
        }

        GenerationStats summarize(int generation, const Population& pop)
        {
            const auto best = std::min_element(pop.begin(), pop.end(), fitter);
            double sum = 0.0;
            int penalized = 0;
            for (const auto& ind : pop)
            {
                sum += ind.f();
                penalized += ind.fitness->penalized ? 1 : 0;
            }
            return {generation, best->f(), sum / static_cast<double>(pop.size()), best->fitness->energy,
                    best->fitness->pdr, penalized};
        }

        // Keeps the lowest-F individual that met the PDR admission threshold.
        void track_admissible(std::optional<Individual>& best, const Population& pop)
        {
            const Individual* pick = nullptr;
            for (const auto& ind : pop)
            {
                const auto& r = *ind.fitness;
                const double bar = pick ? pick->f() : (best ? best->f() : kFailedFitness + 1.0);
                if (!r.penalized && !r.failed && r.f < bar)
                {
                    pick = &ind;
                }
            }
            if (pick)
            {
                best.emplace(*pick);
            }
        }
    } // namespace

    EvolveResult evolve(const GaSettings& settings, const ParamSpace& space, const Evaluator& evaluator)
    {
        settings.validate();
        Rng rng(substream(settings.master_seed, "ga"));
        WorkerPool pool(settings.workers);

        Population pop = diagonal_init(space, settings.pop_size, rng);
        evaluate_all(pop, evaluator, settings.master_seed, pool);

        EvolveResult result;
        result.history.push_back(summarize(0, pop));
        track_admissible(result.best_admissible, pop);

        for (int g = 1; g <= settings.generations; ++g)
        {
            Population offspring;
            offspring.reserve(pop.size());
            while (offspring.size() < pop.size())
            {
                auto i = tournament_select(pop, rng);
                auto j = tournament_select(pop, rng);
                if (fitter(pop[j], pop[i]) || (pop[j].f() == pop[i].f() && j < i))
                {
                    std::swap(i, j);
                }
                Genome a = pop[i].genes;
                Genome b = pop[j].genes;
                if (rng.bernoulli(settings.p_c))
                {
                    std::tie(a, b) = arithmetic_crossover(a, b, rng.uniform(0.5, 1.0), space);
                }
                for (Genome* child : {&a, &b})
                {
                    if (rng.bernoulli(settings.p_m))
                    {
                        *child = mutate(*child, rng, space);
                    }
                    if (offspring.size() < pop.size())
                    {
                        Individual ind;
                        ind.genes = *child;
                        ind.id = {g, static_cast<int>(offspring.size())};
                        offspring.push_back(std::move(ind));
                    }
                }
            }
            evaluate_all(offspring, evaluator, settings.master_seed, pool);
            track_admissible(result.best_admissible, offspring);

            // Generational replacement; the elite of the previous generation
            // displaces the worst offspring.
            const auto elite = ranked(pop);
            const auto order = ranked(offspring);
            Population next;
            next.reserve(pop.size());
            const std::size_t keep = pop.size() - static_cast<std::size_t>(settings.elitism);
            for (std::size_t k = 0; k < keep; ++k)
            {
                next.push_back(std::move(offspring[order[k]]));
            }
            for (int e = 0; e < settings.elitism; ++e)
            {
                next.push_back(pop[elite[static_cast<std::size_t>(e)]]);
            }
            pop = std::move(next);
            result.history.push_back(summarize(g, pop));
        }

        result.best = *std::min_element(pop.begin(), pop.end(), fitter);
        result.final_population = std::move(pop);
        return result;
    }

    EvolveResult evolve(const GaSettings& settings, const ParamSpace& space, const Scenario& scenario,
                        const sim::NicProfile& nic, const FitnessContext& ctx)
    {
        SimulationEvaluator eval(scenario, nic, ctx);
        return evolve(settings, space, Evaluator(eval));
    }

    std::string history_csv(const std::vector<GenerationStats>& history)
    {
        std::ostringstream os;
        os << "generation,best_f,avg_f,best_energy,best_pdr,penalized_count\n";
        for (const auto& h : history)
        {
            os << h.generation << ',' << text::format_double(h.best_f) << ',' << text::format_double(h.avg_f) << ','
               << text::format_double(h.best_energy) << ',' << text::format_double(h.best_pdr) << ','
               << h.penalized_count << '\n';
        }
        return os.str();
    }

    std::vector<GridRow> parameter_setting_grid(const std::vector<double>& p_c_values,
                                                const std::vector<double>& p_m_values, int repetitions,
                                                const GaSettings& base, const ParamSpace& space,
                                                const Evaluator& evaluator, const FitnessContext& ctx)
    {
        if (p_c_values.empty() || p_m_values.empty() || repetitions < 1)
        {
            throw ConfigError("parameter grid needs non-empty candidate lists and at least one repetition");
        }
        std::vector<GridRow> rows;
        for (double pc : p_c_values)
        {
            for (double pm : p_m_values)
            {
                std::vector<double> best_f, energy, pdr;
                for (int r = 0; r < repetitions; ++r)
                {
                    GaSettings s = base;
                    s.p_c = pc;
                    s.p_m = pm;
                    s.master_seed = derive_seed({base.master_seed, static_cast<std::uint64_t>(r)});
                    const auto res = evolve(s, space, evaluator);
                    best_f.push_back(res.best.f());
                    energy.push_back(res.best.fitness->energy);
                    pdr.push_back(res.best.fitness->pdr);
                }
                GridRow row{};
                row.p_c = pc;
                row.p_m = pm;
                row.repetitions = repetitions;
                row.avg_f = analysis::mean(best_f);
                row.stdev_pct = row.avg_f != 0.0 ? 100.0 * analysis::stdev(best_f) / row.avg_f : 0.0;
                row.best_f = *std::min_element(best_f.begin(), best_f.end());
                row.avg_energy = analysis::mean(energy);
                row.avg_pdr = analysis::mean(pdr);
                row.avg_gap_energy = analysis::gap_energy(row.avg_energy, ctx.e_rfc);
                row.avg_gap_pdr = analysis::gap_pdr(row.avg_pdr, ctx.pdr_rfc);
                rows.push_back(row);
            }
        }
        return rows;
    }

    std::string grid_csv(const std::vector<GridRow>& rows)
    {
        std::ostringstream os;
        os << "p_c,p_m,avg_f,stdev_pct,best_f,avg_energy,avg_pdr,gap_energy_pct,gap_pdr_pct,repetitions\n";
        for (const auto& r : rows)
        {
            os << text::format_double(r.p_c) << ',' << text::format_double(r.p_m) << ','
               << text::format_double(r.avg_f) << ',' << text::format_double(r.stdev_pct) << ','
               << text::format_double(r.best_f) << ',' << text::format_double(r.avg_energy) << ','
               << text::format_double(r.avg_pdr) << ',' << text::format_double(100.0 * r.avg_gap_energy) << ','
               << text::format_double(-100.0 * r.avg_gap_pdr) << ',' << r.repetitions << '\n';
        }
        return os.str();
    }
} // namespace eolsr::evo
