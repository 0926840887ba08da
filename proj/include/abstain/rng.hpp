#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace abstain {

constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash a master seed together with a path of stream coordinates.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Stable 64-bit hash of a string (FNV-1a), used for algorithm ids in seed paths.
std::uint64_t hash_string(std::string_view s);

// Seeded generator. Distribution helpers are implemented here rather than with
// <random> distributions so sequences do not depend on the standard library.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    // uniform integer in [0, n)
    std::size_t index(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }
    // index drawn proportionally to non-negative weights
    std::size_t discrete(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace abstain
