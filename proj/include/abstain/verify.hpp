#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "abstain/environments.hpp"
#include "abstain/feedback.hpp"

namespace abstain {

struct TheoremBound
{
    std::string theorem;
    double value = 0.0;
    nlohmann::json inputs;

    nlohmann::json to_json() const { return {{"theorem", theorem}, {"value", value}, {"inputs", inputs}}; }
};

// sqrt(2 (c^2 + 1) T ln K)
TheoremBound exp3abs_bound(std::size_t k, double horizon, double c);
// gap-dependent bound of the UCB-NT analysis, evaluated with min_partition_bound
TheoremBound partition_bound(std::span<const FeedbackGraph> graphs, std::span<const double> deltas,
                             std::uint64_t horizon);

struct MeanEstimate
{
    std::vector<double> mu;
    std::vector<double> std_error; // zero for closed-form values
    double mu_star = 0.0;
    std::vector<double> delta;
    bool exact = false;
    std::size_t samples = 0;
};

struct MonteCarloBudget
{
    std::size_t samples = 1000000;
    double tolerance = 1e-3;
    std::uint64_t seed = 0;
    std::size_t shards = 8;
};

MeanEstimate analytic_means(const Construction& construction);
// Closed form when the environment provides it, Monte Carlo otherwise. Throws when the
// budget ends with a standard error above the tolerance.
MeanEstimate analytic_means(const ExpertPool& pool, const Environment& env, AbstentionCost c, const BaseLoss& base,
                            const MonteCarloBudget& budget = {});

// sum_t loss_t - T mu*
double pseudo_regret(std::span<const double> losses, double mu_star);
// sum_t Delta_{I_t}
double gap_regret(std::span<const std::uint64_t> chosen, std::span<const double> deltas);

class VerificationReport
{
public:
    void add(const std::string& id, bool passed, const std::string& summary, nlohmann::json details = {});
    bool all_passed() const;
    std::size_t size() const { return entries_.size(); }
    const nlohmann::json& entries() const { return entries_; }
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;

private:
    nlohmann::json entries_ = nlohmann::json::array();
};

} // namespace abstain
