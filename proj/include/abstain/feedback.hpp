#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "abstain/experts.hpp"

namespace abstain {

class Rng;

// Directed graph over K experts; out(j) lists the experts observed when j is played.
// Self-loops are always present and adjacency lists are kept sorted.
class FeedbackGraph
{
public:
    FeedbackGraph() = default;
    explicit FeedbackGraph(std::size_t k);
    explicit FeedbackGraph(std::vector<std::vector<std::uint32_t>> out);

    static FeedbackGraph complete(std::size_t k);

    std::size_t size() const { return out_.size(); }
    std::span<const std::uint32_t> out(std::size_t j) const { return out_.at(j); }
    bool has_edge(std::size_t from, std::size_t to) const;
    void add_edge(std::size_t from, std::size_t to);
    std::uint64_t edge_count() const;
    // every ordered pair in the block has edges both ways
    bool is_bidirectional_clique(std::span<const std::size_t> block) const;

    nlohmann::json to_json() const;
    static FeedbackGraph from_json(const nlohmann::json& j);

    bool operator==(const FeedbackGraph&) const = default;

private:
    std::vector<std::vector<std::uint32_t>> out_;
};

// Round graph: accepting experts observe everyone, abstaining experts observe the abstainers.
FeedbackGraph abstention_graph(std::span<const ExpertEval> evals);
FeedbackGraph abstention_graph(const PoolEval& eval);
// Edge count of the round graph without materializing it: a*K + b*b.
std::uint64_t abstention_graph_edge_count(const PoolEval& eval);

// Structural certification for the built-in abstainer families; undecidable pairs get no edge.
bool abstention_region_subset(const ExpertPool& pool, std::size_t i, std::size_t j);
FeedbackGraph subset_graph(const ExpertPool& pool);

struct MonteCarloCertifier
{
    std::size_t probes = 100000;
    std::uint64_t seed = 0;
    // probe sampler; uniform on [-1,1]^d when empty
    std::function<std::vector<double>(Rng&)> sampler;
};

// Edge i -> j iff no probe lies in A_i \ A_j. One-sided: may certify a false subset.
FeedbackGraph subset_graph(const ExpertPool& pool, const MonteCarloCertifier& certifier);

// n[j][i] = #{s : r_j(x_s) <= 0 and r_i(x_s) > 0}, row-major.
class CoAbstentionCounts
{
public:
    explicit CoAbstentionCounts(std::size_t k);

    std::size_t size() const { return k_; }
    std::uint64_t rounds() const { return t_; }
    std::uint32_t operator()(std::size_t j, std::size_t i) const { return n_[j * k_ + i]; }
    std::span<const std::uint32_t> row(std::size_t j) const { return {n_.data() + j * k_, k_}; }
    void advance(const PoolEval& eval);

private:
    friend class EstimatedGraph;
    std::size_t k_;
    std::uint64_t t_ = 0;
    std::vector<std::uint32_t> n_;
};

// gamma_{i,t-1} = sqrt(2 beta Q_i ln t) / ((K-1)(t-1)), for t >= 2 and K >= 2
double ucbgt_gamma(std::uint64_t q_i, std::uint64_t t, std::size_t k, double beta = 2.5);
// n[j][i]/(t-1) <= gamma_{i,t-1}  <=>  n[j][i] <= floor(sqrt(2 beta Q_i ln t) / (K-1))
std::uint64_t ucbgt_count_threshold(std::uint64_t q_i, std::uint64_t t, std::size_t k, double beta = 2.5);

// N_t(j) for round t; counts must reflect x_1..x_{t-1}. N_1(j) = [K].
std::vector<std::uint32_t> ucbgt_neighborhood(const CoAbstentionCounts& counts, std::size_t j,
                                              std::span<const std::uint64_t> q, std::uint64_t t,
                                              double beta = 2.5);

// Co-abstention counts plus incrementally maintained per-column membership counts, so the
// edge count of the estimated graph costs O(K) per round instead of O(K^2).
class EstimatedGraph
{
public:
    explicit EstimatedGraph(std::size_t k, double beta = 2.5);

    std::size_t size() const { return counts_.size(); }
    double beta() const { return beta_; }
    const CoAbstentionCounts& counts() const { return counts_; }

    // Recompute thresholds for round t from Q(t-1); counts must cover rounds 1..t-1.
    void begin_round(std::uint64_t t, std::span<const std::uint64_t> q);
    bool contains(std::size_t j, std::size_t i) const;
    void neighborhood(std::size_t j, std::vector<std::uint32_t>& out) const;
    std::uint64_t edge_count() const { return edges_; }
    // Advance counts with the current round's evaluations (after the decision).
    void advance(const PoolEval& eval);

private:
    void recount_column(std::size_t i);

    CoAbstentionCounts counts_;
    double beta_;
    std::vector<std::uint32_t> thr_;
    std::vector<std::uint32_t> members_; // members_[i] = #{j : n[j][i] <= thr_[i]}
    std::uint64_t edges_ = 0;
    std::uint64_t round_ = 0;
};

struct PartitionBound
{
    double value = 0.0;
    std::vector<std::vector<std::size_t>> partition;
};

inline constexpr std::size_t kMaxPartitionExperts = 8;

// Minimum over partitions whose blocks are bidirectional cliques in every supplied graph of
//   sum_k max_{j in C_k} Delta_j * 20 ln T / min_{j in C_k} Delta_j^2  +  5K.
// Experts with zero gap contribute nothing to their block.
PartitionBound min_partition_bound(std::span<const FeedbackGraph> graphs, std::span<const double> deltas,
                                   std::uint64_t horizon);

} // namespace abstain
