#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abstain/feedback.hpp"
#include "abstain/learner.hpp"

namespace abstain {

inline constexpr double kDefaultBeta = 2.5;

struct UcbState
{
    explicit UcbState(std::size_t k = 0) : mu_hat(k, 0.0), q(k, 0) {}

    std::vector<double> mu_hat;
    std::vector<std::uint64_t> q;
    std::uint64_t t = 0; // rounds completed

    std::size_t size() const { return mu_hat.size(); }
    void observe(std::size_t j, double loss);
    // (*) step: count the observation with loss 0
    void observe_optimistic(std::size_t j);

    nlohmann::json to_json() const;
    static UcbState from_json(const nlohmann::json& j);
};

// mu_hat_j - sqrt(2 beta ln t / Q_j); -inf while Q_j = 0
double ucb_index(const UcbState& state, std::size_t j, double beta = kDefaultBeta);
// lowest index, ties to the lowest id
std::size_t ucb_select(const UcbState& state, double beta = kDefaultBeta);

class GraphSource
{
public:
    enum class Kind
    {
        self_loops,
        fixed,
        round_abstention,
    };

    static GraphSource self_loops() { return GraphSource(Kind::self_loops, {}); }
    static GraphSource fixed(FeedbackGraph graph) { return GraphSource(Kind::fixed, std::move(graph)); }
    // Depends on x_t, so the resulting estimates are biased.
    static GraphSource round_abstention() { return GraphSource(Kind::round_abstention, {}); }

    Kind kind() const { return kind_; }
    bool bias_unsafe() const { return kind_ == Kind::round_abstention; }
    const FeedbackGraph& graph() const { return graph_; }
    std::string describe() const;

private:
    GraphSource(Kind kind, FeedbackGraph graph) : kind_(kind), graph_(std::move(graph)) {}

    Kind kind_;
    FeedbackGraph graph_;
};

// UCB with side observations from a graph source; SelfLoops gives vanilla UCB.
class UcbNt : public Learner
{
public:
    UcbNt(std::size_t k, GraphSource source, double beta = kDefaultBeta, std::string name = "ucb_nt");

    std::string name() const override { return name_; }
    StepOutcome step(const RoundFeedback& round) override;
    nlohmann::json snapshot() const override;

    const UcbState& state() const { return state_; }
    const GraphSource& source() const { return source_; }

private:
    UcbState state_;
    GraphSource source_;
    double beta_;
    std::string name_;
    std::uint64_t fixed_edges_ = 0;
};

class UcbGt : public Learner
{
public:
    explicit UcbGt(std::size_t k, double beta = kDefaultBeta);

    std::string name() const override { return "ucb_gt"; }
    StepOutcome step(const RoundFeedback& round) override;
    nlohmann::json snapshot() const override;

    const UcbState& state() const { return state_; }
    const EstimatedGraph& graph() const { return graph_; }
    // number of (*) updates applied to each expert so far
    const std::vector<std::uint64_t>& optimistic_updates() const { return optimistic_; }

private:
    UcbState state_;
    EstimatedGraph graph_;
    double beta_;
    std::vector<std::uint64_t> optimistic_;
};

// Follows the empirical leader and always observes every loss.
class FullSupervision : public Learner
{
public:
    explicit FullSupervision(std::size_t k);

    std::string name() const override { return "fs"; }
    StepOutcome step(const RoundFeedback& round) override;
    nlohmann::json snapshot() const override;

    const UcbState& state() const { return state_; }

private:
    UcbState state_;
};

} // namespace abstain
