#include "abstain/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>

namespace abstain {

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t p : path)
        h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

std::uint64_t hash_string(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

std::size_t Rng::index(std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("Rng::index: n must be positive");
    // Lemire's multiply-shift with rejection
    const std::uint64_t range = n;
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = (0 - range) % range;
        while (low < threshold) {
            x = engine_();
            m = static_cast<__uint128_t>(x) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

std::size_t Rng::discrete(std::span<const double> weights)
{
    if (weights.empty())
        throw std::invalid_argument("Rng::discrete: empty weights");
    double total = 0.0;
    for (double w : weights)
        total += w;
    if (!(total > 0.0))
        throw std::invalid_argument("Rng::discrete: weights must have positive sum");
    double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc)
            return i;
    }
    return last_positive;
}

} // namespace abstain
