#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace eolsr
{
    // splitmix64 finalizer; used to derive independent seeds.
    constexpr std::uint64_t mix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept
    {
        std::uint64_t h = 0x6a09e667f3bcc909ULL;
        for (auto p : parts)
        {
            h = mix64(h ^ mix64(p));
        }
        return h;
    }

    // Named sub-stream of a master seed ("scenario", "ga", "simulation", ...).
    constexpr std::uint64_t substream(std::uint64_t master, std::string_view name) noexcept
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : name)
        {
            h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
        }
        return derive_seed({master, h});
    }

    // Thin wrapper over mt19937_64 with platform-independent draws
    // (std distributions are implementation-defined).
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        // Uniform in [0, 1).
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        // Uniform integer in [0, n). n > 0.
        std::uint64_t below(std::uint64_t n)
        {
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
            std::uint64_t v;
            do
            {
                v = engine_();
            } while (v >= limit);
            return v % n;
        }

        bool bernoulli(double p) { return uniform() < p; }

    private:
        std::mt19937_64 engine_;
    };
} // namespace eolsr
