#include "abstain/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "abstain/rng.hpp"

namespace abstain {

FeedbackGraph::FeedbackGraph(std::size_t k) : out_(k)
{
    for (std::size_t j = 0; j < k; ++j)
        out_[j].push_back(static_cast<std::uint32_t>(j));
}

FeedbackGraph::FeedbackGraph(std::vector<std::vector<std::uint32_t>> out) : out_(std::move(out))
{
    const std::size_t k = out_.size();
    for (std::size_t j = 0; j < k; ++j) {
        auto& row = out_[j];
        for (auto v : row)
            if (v >= k)
                throw std::invalid_argument("FeedbackGraph: neighbor index out of range");
        row.push_back(static_cast<std::uint32_t>(j));
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
}

FeedbackGraph FeedbackGraph::complete(std::size_t k)
{
    std::vector<std::vector<std::uint32_t>> out(k);
    for (auto& row : out) {
        row.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            row[i] = static_cast<std::uint32_t>(i);
    }
    return FeedbackGraph(std::move(out));
}

bool FeedbackGraph::has_edge(std::size_t from, std::size_t to) const
{
    const auto& row = out_.at(from);
    return std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(to));
}

void FeedbackGraph::add_edge(std::size_t from, std::size_t to)
{
    if (to >= out_.size())
        throw std::invalid_argument("FeedbackGraph::add_edge: vertex out of range");
    auto& row = out_.at(from);
    auto v = static_cast<std::uint32_t>(to);
    auto it = std::lower_bound(row.begin(), row.end(), v);
    if (it == row.end() || *it != v)
        row.insert(it, v);
}

std::uint64_t FeedbackGraph::edge_count() const
{
    std::uint64_t n = 0;
    for (const auto& row : out_)
        n += row.size();
    return n;
}

bool FeedbackGraph::is_bidirectional_clique(std::span<const std::size_t> block) const
{
    for (std::size_t a : block)
        for (std::size_t b : block)
            if (a != b && !has_edge(a, b))
                return false;
    return true;
}

nlohmann::json FeedbackGraph::to_json() const
{
    return nlohmann::json{{"K", out_.size()}, {"out_neighbors", out_}};
}

FeedbackGraph FeedbackGraph::from_json(const nlohmann::json& j)
{
    auto out = j.at("out_neighbors").get<std::vector<std::vector<std::uint32_t>>>();
    if (j.contains("K") && j["K"].get<std::size_t>() != out.size())
        throw std::invalid_argument("FeedbackGraph::from_json: K does not match adjacency size");
    return FeedbackGraph(std::move(out));
}

FeedbackGraph abstention_graph(std::span<const ExpertEval> evals)
{
    const std::size_t k = evals.size();
    std::vector<std::uint32_t> all(k), abstainers;
    for (std::size_t i = 0; i < k; ++i) {
        all[i] = static_cast<std::uint32_t>(i);
        if (evals[i].abstains)
            abstainers.push_back(static_cast<std::uint32_t>(i));
    }
    std::vector<std::vector<std::uint32_t>> out(k);
    for (std::size_t j = 0; j < k; ++j)
        out[j] = evals[j].abstains ? abstainers : all;
    return FeedbackGraph(std::move(out));
}

FeedbackGraph abstention_graph(const PoolEval& eval)
{
    std::vector<ExpertEval> evals(eval.size());
    for (std::size_t j = 0; j < eval.size(); ++j)
        evals[j] = eval[j];
    return abstention_graph(evals);
}

std::uint64_t abstention_graph_edge_count(const PoolEval& eval)
{
    const std::uint64_t k = eval.size();
    const std::uint64_t b = eval.n_abstaining;
    return (k - b) * k + b * b;
}

bool abstention_region_subset(const ExpertPool& pool, std::size_t i, std::size_t j)
{
    if (i == j)
        return true;
    const Expert& a = pool.expert(i);
    const Expert& b = pool.expert(j);
    if (std::holds_alternative<NeverAbstain>(a.abstainer))
        return true;
    if (const auto* ba = std::get_if<NormBand>(&a.abstainer)) {
        if (!(ba->inner < ba->outer))
            return true;
        if (const auto* bb = std::get_if<NormBand>(&b.abstainer))
            return ba->inner >= bb->inner && ba->outer <= bb->outer;
        return false;
    }
    if (const auto* ca = std::get_if<ConfidenceThreshold>(&a.abstainer)) {
        if (const auto* cb = std::get_if<ConfidenceThreshold>(&b.abstainer))
            return a.predictor == b.predictor && ca->theta <= cb->theta;
        return false;
    }
    return false;
}

FeedbackGraph subset_graph(const ExpertPool& pool)
{
    const std::size_t k = pool.size();
    std::vector<std::vector<std::uint32_t>> out(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (abstention_region_subset(pool, i, j))
                out[i].push_back(static_cast<std::uint32_t>(j));
    return FeedbackGraph(std::move(out));
}

FeedbackGraph subset_graph(const ExpertPool& pool, const MonteCarloCertifier& certifier)
{
    const std::size_t k = pool.size();
    const std::size_t m = certifier.probes;
    const std::size_t words = (m + 63) / 64;
    std::vector<std::uint64_t> bits(k * words, 0);
    Rng rng(certifier.seed);
    PoolEval eval;
    std::vector<double> x(pool.dimension());
    for (std::size_t s = 0; s < m; ++s) {
        if (certifier.sampler) {
            x = certifier.sampler(rng);
        } else {
            for (double& v : x)
                v = rng.uniform(-1.0, 1.0);
        }
        pool.evaluate(x, eval);
        const std::uint64_t bit = std::uint64_t{1} << (s % 64);
        for (std::size_t j = 0; j < k; ++j)
            if (eval.abstains[j])
                bits[j * words + s / 64] |= bit;
    }
    std::vector<std::vector<std::uint32_t>> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t* bi = bits.data() + i * words;
        for (std::size_t j = 0; j < k; ++j) {
            const std::uint64_t* bj = bits.data() + j * words;
            bool subset = true;
            for (std::size_t w = 0; w < words && subset; ++w)
                subset = (bi[w] & ~bj[w]) == 0;
            if (subset)
                out[i].push_back(static_cast<std::uint32_t>(j));
        }
    }
    return FeedbackGraph(std::move(out));
}

CoAbstentionCounts::CoAbstentionCounts(std::size_t k) : k_(k), n_(k * k, 0)
{
    if (k == 0)
        throw std::invalid_argument("CoAbstentionCounts: K must be positive");
}

void CoAbstentionCounts::advance(const PoolEval& eval)
{
    if (eval.size() != k_)
        throw std::invalid_argument("CoAbstentionCounts::advance: evaluation size mismatch");
    const std::uint8_t* ab = eval.abstains.data();
    for (std::size_t j = 0; j < k_; ++j) {
        if (!ab[j])
            continue;
        std::uint32_t* row = n_.data() + j * k_;
        for (std::size_t i = 0; i < k_; ++i)
            row[i] += 1u - ab[i];
    }
    ++t_;
}

double ucbgt_gamma(std::uint64_t q_i, std::uint64_t t, std::size_t k, double beta)
{
    if (t < 2 || k < 2)
        throw std::invalid_argument("ucbgt_gamma: requires t >= 2 and K >= 2");
    return std::sqrt(2.0 * beta * static_cast<double>(q_i) * std::log(static_cast<double>(t))) /
           (static_cast<double>(k - 1) * static_cast<double>(t - 1));
}

std::uint64_t ucbgt_count_threshold(std::uint64_t q_i, std::uint64_t t, std::size_t k, double beta)
{
    if (k < 2)
        return std::numeric_limits<std::uint64_t>::max();
    if (t < 2)
        return 0;
    const double x = std::sqrt(2.0 * beta * static_cast<double>(q_i) * std::log(static_cast<double>(t))) /
                     static_cast<double>(k - 1);
    return static_cast<std::uint64_t>(std::floor(x));
}

std::vector<std::uint32_t> ucbgt_neighborhood(const CoAbstentionCounts& counts, std::size_t j,
                                              std::span<const std::uint64_t> q, std::uint64_t t, double beta)
{
    const std::size_t k = counts.size();
    if (q.size() != k)
        throw std::invalid_argument("ucbgt_neighborhood: Q has wrong size");
    if (t == 0 || counts.rounds() + 1 != t)
        throw std::invalid_argument("ucbgt_neighborhood: counts must cover exactly rounds 1..t-1");
    std::vector<std::uint32_t> out;
    const auto row = counts.row(j);
    for (std::size_t i = 0; i < k; ++i)
        if (row[i] <= ucbgt_count_threshold(q[i], t, k, beta))
            out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

EstimatedGraph::EstimatedGraph(std::size_t k, double beta)
    : counts_(k), beta_(beta), thr_(k, 0), members_(k, static_cast<std::uint32_t>(k)), edges_(k * k)
{
    if (!(beta > 0.0))
        throw std::invalid_argument("EstimatedGraph: beta must be positive");
}

void EstimatedGraph::recount_column(std::size_t i)
{
    const std::size_t k = counts_.size();
    const std::uint32_t thr = thr_[i];
    const std::uint32_t* n = counts_.n_.data();
    std::uint32_t m = 0;
    for (std::size_t j = 0; j < k; ++j)
        m += n[j * k + i] <= thr ? 1u : 0u;
    members_[i] = m;
}

void EstimatedGraph::begin_round(std::uint64_t t, std::span<const std::uint64_t> q)
{
    const std::size_t k = counts_.size();
    if (q.size() != k)
        throw std::invalid_argument("EstimatedGraph::begin_round: Q has wrong size");
    if (t == 0 || counts_.rounds() + 1 != t)
        throw std::invalid_argument("EstimatedGraph::begin_round: counts must cover exactly rounds 1..t-1");
    round_ = t;
    if (k == 1) {
        edges_ = 1;
        return;
    }
    constexpr std::uint64_t cap = std::numeric_limits<std::uint32_t>::max();
    std::uint64_t edges = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto thr = static_cast<std::uint32_t>(std::min(ucbgt_count_threshold(q[i], t, k, beta_), cap));
        if (thr != thr_[i]) {
            thr_[i] = thr;
            recount_column(i);
        }
        edges += members_[i];
    }
    edges_ = edges;
}

bool EstimatedGraph::contains(std::size_t j, std::size_t i) const
{
    if (counts_.size() == 1)
        return true;
    return counts_(j, i) <= thr_[i];
}

void EstimatedGraph::neighborhood(std::size_t j, std::vector<std::uint32_t>& out) const
{
    out.clear();
    const std::size_t k = counts_.size();
    if (k == 1) {
        out.push_back(0);
        return;
    }
    const auto row = counts_.row(j);
    for (std::size_t i = 0; i < k; ++i)
        if (row[i] <= thr_[i])
            out.push_back(static_cast<std::uint32_t>(i));
}

void EstimatedGraph::advance(const PoolEval& eval)
{
    const std::size_t k = counts_.size();
    if (eval.size() != k)
        throw std::invalid_argument("EstimatedGraph::advance: evaluation size mismatch");
    const std::uint8_t* ab = eval.abstains.data();
    const std::uint32_t* thr = thr_.data();
    std::uint32_t* members = members_.data();
    for (std::size_t j = 0; j < k; ++j) {
        if (!ab[j])
            continue;
        std::uint32_t* row = counts_.n_.data() + j * k;
        for (std::size_t i = 0; i < k; ++i) {
            const std::uint32_t acc = 1u - ab[i];
            const std::uint32_t old = row[i];
            members[i] -= acc & static_cast<std::uint32_t>(old == thr[i]);
            row[i] = old + acc;
        }
    }
    ++counts_.t_;
}

PartitionBound min_partition_bound(std::span<const FeedbackGraph> graphs, std::span<const double> deltas,
                                   std::uint64_t horizon)
{
    const std::size_t k = deltas.size();
    if (k == 0)
        throw std::invalid_argument("min_partition_bound: no experts");
    if (k > kMaxPartitionExperts)
        throw std::invalid_argument("min_partition_bound: K = " + std::to_string(k) + " exceeds the brute-force limit of " +
                                    std::to_string(kMaxPartitionExperts));
    if (graphs.empty())
        throw std::invalid_argument("min_partition_bound: at least one graph is required");
    for (const auto& g : graphs)
        if (g.size() != k)
            throw std::invalid_argument("min_partition_bound: graph size does not match the gap vector");
    for (double d : deltas)
        if (!(d >= 0.0))
            throw std::invalid_argument("min_partition_bound: gaps must be nonnegative");
    if (horizon < 1)
        throw std::invalid_argument("min_partition_bound: T must be at least 1");

    const double log_t = std::log(static_cast<double>(horizon));
    auto block_cost = [&](const std::vector<std::size_t>& block) {
        double mx = 0.0, mn = std::numeric_limits<double>::infinity();
        for (std::size_t j : block) {
            if (deltas[j] <= 0.0)
                continue;
            mx = std::max(mx, deltas[j]);
            mn = std::min(mn, deltas[j]);
        }
        if (mx == 0.0)
            return 0.0;
        return mx * 20.0 * log_t / (mn * mn);
    };

    auto reciprocal = [&](std::size_t a, std::size_t b) {
        for (const auto& g : graphs)
            if (!g.has_edge(a, b) || !g.has_edge(b, a))
                return false;
        return true;
    };

    PartitionBound best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> blocks;
    // assign experts one at a time to an existing compatible block or a new one
    std::function<void(std::size_t)> assign = [&](std::size_t j) {
        if (j == k) {
            double v = 5.0 * static_cast<double>(k);
            for (const auto& b : blocks)
                v += block_cost(b);
            if (v < best.value) {
                best.value = v;
                best.partition = blocks;
            }
            return;
        }
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            bool ok = true;
            for (std::size_t m : blocks[b])
                if (!reciprocal(j, m)) {
                    ok = false;
                    break;
                }
            if (!ok)
                continue;
            blocks[b].push_back(j);
            assign(j + 1);
            blocks[b].pop_back();
        }
        blocks.push_back({j});
        assign(j + 1);
        blocks.pop_back();
    };
    assign(0);
    return best;
}

} // namespace abstain
