#include "abstain/stochastic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace abstain {

void UcbState::observe(std::size_t j, double loss)
{
    ++q[j];
    mu_hat[j] += (loss - mu_hat[j]) / static_cast<double>(q[j]);
}

void UcbState::observe_optimistic(std::size_t j)
{
    ++q[j];
    mu_hat[j] *= 1.0 - 1.0 / static_cast<double>(q[j]);
}

nlohmann::json UcbState::to_json() const
{
    return {{"mu_hat", mu_hat}, {"Q", q}, {"t", t}};
}

UcbState UcbState::from_json(const nlohmann::json& j)
{
    UcbState s;
    s.mu_hat = j.at("mu_hat").get<std::vector<double>>();
    s.q = j.at("Q").get<std::vector<std::uint64_t>>();
    s.t = j.at("t").get<std::uint64_t>();
    if (s.mu_hat.size() != s.q.size())
        throw std::invalid_argument("UcbState::from_json: mu_hat and Q sizes differ");
    return s;
}

double ucb_index(const UcbState& state, std::size_t j, double beta)
{
    if (state.q.at(j) == 0)
        return -std::numeric_limits<double>::infinity();
    const double lt = state.t > 0 ? std::log(static_cast<double>(state.t)) : 0.0;
    return state.mu_hat[j] - std::sqrt(2.0 * beta * lt / static_cast<double>(state.q[j]));
}

std::size_t ucb_select(const UcbState& state, double beta)
{
    const std::size_t k = state.size();
    if (k == 0)
        throw std::invalid_argument("ucb_select: empty state");
    const double c = 2.0 * beta * (state.t > 0 ? std::log(static_cast<double>(state.t)) : 0.0);
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        if (state.q[j] == 0)
            return j;
        const double v = state.mu_hat[j] - std::sqrt(c / static_cast<double>(state.q[j]));
        if (v < best_v) {
            best_v = v;
            best = j;
        }
    }
    return best;
}

std::string GraphSource::describe() const
{
    switch (kind_) {
    case Kind::self_loops:
        return "self_loops";
    case Kind::fixed:
        return "fixed";
    case Kind::round_abstention:
        return "round_abstention";
    }
    return "unknown";
}

UcbNt::UcbNt(std::size_t k, GraphSource source, double beta, std::string name)
    : state_(k), source_(std::move(source)), beta_(beta), name_(std::move(name))
{
    if (k == 0)
        throw std::invalid_argument("UcbNt: K must be positive");
    if (!(beta > 0.0))
        throw std::invalid_argument("UcbNt: beta must be positive");
    if (source_.kind() == GraphSource::Kind::fixed) {
        if (source_.graph().size() != k)
            throw std::invalid_argument("UcbNt: fixed graph size does not match K");
        fixed_edges_ = source_.graph().edge_count();
    }
}

StepOutcome UcbNt::step(const RoundFeedback& round)
{
    const std::size_t k = state_.size();
    if (round.size() != k)
        throw std::invalid_argument("UcbNt::step: round size does not match K");
    const std::size_t j = ucb_select(state_, beta_);
    StepOutcome out;
    out.chosen = j;
    out.loss = round.reveal(j, j);
    out.abstained = round.abstains(j);

    switch (source_.kind()) {
    case GraphSource::Kind::self_loops:
        state_.observe(j, out.loss);
        out.updated = 1;
        out.edges = k;
        break;
    case GraphSource::Kind::fixed:
        for (auto i : source_.graph().out(j))
            state_.observe(i, round.reveal(i, j));
        out.updated = source_.graph().out(j).size();
        out.edges = fixed_edges_;
        break;
    case GraphSource::Kind::round_abstention: {
        std::uint64_t n = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (out.abstained && !round.abstains(i))
                continue;
            state_.observe(i, round.reveal(i, j));
            ++n;
        }
        out.updated = n;
        out.edges = abstention_graph_edge_count(round.eval());
        break;
    }
    }
    ++state_.t;
    return out;
}

nlohmann::json UcbNt::snapshot() const
{
    nlohmann::json j = {{"learner", name_}, {"beta", beta_}, {"graph_source", source_.describe()},
                        {"bias_unsafe", source_.bias_unsafe()}, {"state", state_.to_json()}};
    if (source_.kind() == GraphSource::Kind::fixed)
        j["graph"] = source_.graph().to_json();
    return j;
}

UcbGt::UcbGt(std::size_t k, double beta) : state_(k), graph_(k, beta), beta_(beta), optimistic_(k, 0)
{
}

StepOutcome UcbGt::step(const RoundFeedback& round)
{
    const std::size_t k = state_.size();
    if (round.size() != k)
        throw std::invalid_argument("UcbGt::step: round size does not match K");
    graph_.begin_round(state_.t + 1, state_.q);
    const std::size_t j = ucb_select(state_, beta_);
    StepOutcome out;
    out.chosen = j;
    out.loss = round.reveal(j, j);
    out.abstained = round.abstains(j);
    out.edges = graph_.edge_count();

    std::uint64_t n = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!graph_.contains(j, i))
            continue;
        ++n;
        if (out.abstained && !round.abstains(i)) {
            state_.observe_optimistic(i);
            ++optimistic_[i];
        } else {
            state_.observe(i, round.reveal(i, j));
        }
    }
    out.updated = n;
    graph_.advance(round.eval());
    ++state_.t;
    return out;
}

nlohmann::json UcbGt::snapshot() const
{
    const auto& counts = graph_.counts();
    std::vector<std::uint32_t> flat;
    flat.reserve(counts.size() * counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        for (auto v : counts.row(j))
            flat.push_back(v);
    return {{"learner", name()},
            {"beta", beta_},
            {"state", state_.to_json()},
            {"optimistic_updates", optimistic_},
            {"co_abstention", {{"K", counts.size()}, {"rounds", counts.rounds()}, {"n", flat}}}};
}

FullSupervision::FullSupervision(std::size_t k) : state_(k)
{
    if (k == 0)
        throw std::invalid_argument("FullSupervision: K must be positive");
}

StepOutcome FullSupervision::step(const RoundFeedback& round)
{
    const std::size_t k = state_.size();
    if (round.size() != k)
        throw std::invalid_argument("FullSupervision::step: round size does not match K");
    std::size_t j = 0;
    for (std::size_t i = 1; i < k; ++i)
        if (state_.mu_hat[i] < state_.mu_hat[j])
            j = i;
    StepOutcome out;
    out.chosen = j;
    out.loss = round.full_information_loss(j);
    out.abstained = round.abstains(j);
    for (std::size_t i = 0; i < k; ++i)
        state_.observe(i, round.full_information_loss(i));
    out.updated = k;
    out.edges = static_cast<std::uint64_t>(k) * k;
    ++state_.t;
    return out;
}

nlohmann::json FullSupervision::snapshot() const
{
    return {{"learner", name()}, {"state", state_.to_json()}};
}

} // namespace abstain
