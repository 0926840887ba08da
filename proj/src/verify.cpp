#include "abstain/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "abstain/rng.hpp"

namespace abstain {

TheoremBound exp3abs_bound(std::size_t k, double horizon, double c)
{
    if (k < 2)
        throw std::invalid_argument("exp3abs_bound: K must be at least 2");
    TheoremBound b;
    b.theorem = "exp3_abs";
    b.value = std::sqrt(2.0 * (c * c + 1.0) * horizon * std::log(static_cast<double>(k)));
    b.inputs = {{"K", k}, {"T", horizon}, {"c", c}};
    return b;
}

TheoremBound partition_bound(std::span<const FeedbackGraph> graphs, std::span<const double> deltas,
                             std::uint64_t horizon)
{
    const PartitionBound pb = min_partition_bound(graphs, deltas, horizon);
    TheoremBound b;
    b.theorem = "ucb_nt_partition";
    b.value = pb.value;
    b.inputs = {{"K", deltas.size()},
                {"T", horizon},
                {"deltas", std::vector<double>(deltas.begin(), deltas.end())},
                {"partition", pb.partition}};
    return b;
}

namespace {

void finish(MeanEstimate& m)
{
    m.mu_star = *std::min_element(m.mu.begin(), m.mu.end());
    m.delta.resize(m.mu.size());
    for (std::size_t j = 0; j < m.mu.size(); ++j)
        m.delta[j] = m.mu[j] - m.mu_star;
}

} // namespace

MeanEstimate analytic_means(const Construction& construction)
{
    MeanEstimate m;
    m.mu = construction.means;
    m.std_error.assign(m.mu.size(), 0.0);
    m.exact = true;
    finish(m);
    return m;
}

MeanEstimate analytic_means(const ExpertPool& pool, const Environment& env, AbstentionCost c, const BaseLoss& base,
                            const MonteCarloBudget& budget)
{
    if (auto exact = env.expected_losses(pool, c, base)) {
        MeanEstimate m;
        m.mu = std::move(*exact);
        m.std_error.assign(m.mu.size(), 0.0);
        m.exact = true;
        finish(m);
        return m;
    }
    const std::size_t k = pool.size();
    const std::size_t shards = std::max<std::size_t>(1, std::min(budget.shards, budget.samples));
    struct Acc
    {
        std::size_t n = 0;
        std::vector<double> mean, m2;
    };
    std::vector<Acc> acc(shards);
    auto run_shard = [&](std::size_t s) {
        Acc& a = acc[s];
        a.mean.assign(k, 0.0);
        a.m2.assign(k, 0.0);
        const std::size_t n = budget.samples / shards + (s < budget.samples % shards ? 1 : 0);
        Rng rng(derive_seed(budget.seed, {s}));
        PoolEval eval;
        for (std::size_t i = 0; i < n; ++i) {
            const LabeledPoint z = env.sample(rng);
            pool.evaluate(z.x, eval);
            ++a.n;
            const double nn = static_cast<double>(a.n);
            for (std::size_t j = 0; j < k; ++j) {
                const double x = abstention_loss(eval.h[j], eval.r[j], z.y, c, base);
                const double d = x - a.mean[j];
                a.mean[j] += d / nn;
                a.m2[j] += d * (x - a.mean[j]);
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t s = 0; s < shards; ++s)
        threads.emplace_back(run_shard, s);
    for (auto& t : threads)
        t.join();

    // merge shards in index order (parallel-variance combination)
    Acc total = acc[0];
    for (std::size_t s = 1; s < shards; ++s) {
        const Acc& b = acc[s];
        if (b.n == 0)
            continue;
        const double na = static_cast<double>(total.n), nb = static_cast<double>(b.n);
        const double n = na + nb;
        for (std::size_t j = 0; j < k; ++j) {
            const double d = b.mean[j] - total.mean[j];
            if (d != 0.0)
                total.mean[j] += d * nb / n;
            total.m2[j] += b.m2[j] + d * d * na * nb / n;
        }
        total.n += b.n;
    }
    MeanEstimate m;
    m.mu = total.mean;
    m.samples = total.n;
    m.std_error.resize(k);
    const double n = static_cast<double>(total.n);
    for (std::size_t j = 0; j < k; ++j)
        m.std_error[j] = n > 1 ? std::sqrt(total.m2[j] / (n - 1.0) / n) : 0.0;
    const double worst = *std::max_element(m.std_error.begin(), m.std_error.end());
    if (worst > budget.tolerance)
        throw std::runtime_error("analytic_means: Monte Carlo budget of " + std::to_string(budget.samples) +
                                 " samples exhausted with standard error " + std::to_string(worst) +
                                 " above tolerance " + std::to_string(budget.tolerance));
    finish(m);
    return m;
}

double pseudo_regret(std::span<const double> losses, double mu_star)
{
    double s = 0.0;
    for (double l : losses)
        s += l;
    return s - static_cast<double>(losses.size()) * mu_star;
}

double gap_regret(std::span<const std::uint64_t> chosen, std::span<const double> deltas)
{
    double s = 0.0;
    for (auto j : chosen)
        s += deltas[j];
    return s;
}

void VerificationReport::add(const std::string& id, bool passed, const std::string& summary, nlohmann::json details)
{
    entries_.push_back({{"id", id}, {"passed", passed}, {"summary", summary}, {"details", std::move(details)}});
}

bool VerificationReport::all_passed() const
{
    return std::all_of(entries_.begin(), entries_.end(), [](const nlohmann::json& e) { return e["passed"].get<bool>(); });
}

nlohmann::json VerificationReport::to_json() const
{
    std::size_t passed = 0;
    for (const auto& e : entries_)
        passed += e["passed"].get<bool>() ? 1 : 0;
    return {{"schema_version", 1}, {"passed", passed}, {"total", entries_.size()}, {"criteria", entries_}};
}

void VerificationReport::write(const std::filesystem::path& path) const
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write report '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

} // namespace abstain
