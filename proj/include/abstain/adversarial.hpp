#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "abstain/learner.hpp"
#include "abstain/losses.hpp"
#include "abstain/rng.hpp"

namespace abstain {

// P_t(j): 1 for abstaining j, otherwise the q-mass of the accepting experts.
double exp3abs_observation_probability(std::span<const double> q, std::span<const std::uint8_t> abstains,
                                       std::size_t j);

// Importance-weighted estimates. `losses` must hold a value exactly for the experts observed
// after playing `chosen` (everyone if it accepts, the abstainers if it abstains).
std::vector<double> exp3abs_estimates(std::span<const double> q, std::span<const std::uint8_t> abstains,
                                      std::size_t chosen, std::span<const std::optional<double>> losses);

double tuned_eta_exp3abs(std::size_t k, double horizon, double c);

class Exp3AbsState
{
public:
    Exp3AbsState(std::size_t k, double eta);
    static Exp3AbsState from_distribution(std::span<const double> q, double eta);

    std::size_t size() const { return cum_losses_.size(); }
    double eta() const { return eta_; }
    const std::vector<double>& q() const { return q_; }
    const std::vector<double>& cum_losses() const { return cum_losses_; }

    struct Draw
    {
        double u = 0.0;
        std::size_t index = 0;
    };
    std::size_t select(Rng& rng);
    const std::optional<Draw>& last_draw() const { return last_draw_; }

    void update(std::span<const std::uint8_t> abstains, std::size_t chosen,
                std::span<const std::optional<double>> losses);

    nlohmann::json to_json() const;
    static Exp3AbsState from_json(const nlohmann::json& j);

private:
    void renormalize();

    double eta_;
    std::vector<double> cum_losses_;
    std::vector<double> q_;
    std::optional<Draw> last_draw_;
};

class Exp3Abs : public Learner
{
public:
    Exp3Abs(std::size_t k, double eta, std::uint64_t seed);

    std::string name() const override { return "exp3_abs"; }
    StepOutcome step(const RoundFeedback& round) override;
    nlohmann::json snapshot() const override;
    const Exp3AbsState& state() const { return state_; }

private:
    Exp3AbsState state_;
    Rng rng_;
    std::vector<std::optional<double>> observed_;
};

// Uniform grid over [-1,1]^2 of (h, r) actions with spacing at most eps / sqrt(2).
class ActionGrid
{
public:
    explicit ActionGrid(double eps);

    double eps() const { return eps_; }
    std::size_t per_axis() const { return axis_.size(); }
    std::size_t size() const { return axis_.size() * axis_.size(); }
    double h(std::size_t k) const { return axis_[k / axis_.size()]; }
    double r(std::size_t k) const { return axis_[k % axis_.size()]; }
    bool abstains(std::size_t k) const { return abstain::abstains(r(k)); }
    const std::vector<std::uint8_t>& abstain_flags() const { return flags_; }

private:
    double eps_;
    std::vector<double> axis_;
    std::vector<std::uint8_t> flags_;
};

// (2 + 2 sqrt 2)^2: |grid| <= C_Y eps^-2 for eps <= 1
double action_grid_constant();
// 6^d / V_d: bound on the number of eps-separated centers in [-1,1]^d, times eps^d
double cube_packing_constant(std::size_t d);

struct ContExp3Params
{
    double eps = 0.5;
    double eta = 0.1;
    double gamma = 0.5;
    std::size_t dimension = 2;
};

// eps = T^{-1/(2+d)} gamma^{2/(2+d)}, eta = sqrt(N ln K_eps / T) with N = c_x eps^-d
ContExp3Params tuned_params_contexp3(std::size_t horizon, std::size_t d, double gamma,
                                     std::optional<double> c_x = std::nullopt);

struct ContStep
{
    std::size_t ball = 0;
    bool new_ball = false;
    std::size_t action = 0;
    double h = 0.0;
    double r = 0.0;
    bool abstained = false;
    double surrogate_loss = 0.0;
};

class ContExp3Abs
{
public:
    ContExp3Abs(ContExp3Params params, AbstentionCost c, std::uint64_t seed);

    // label_oracle is consulted only when the chosen action accepts.
    ContStep step(std::span<const double> x, const std::function<int()>& label_oracle);

    const ContExp3Params& params() const { return params_; }
    const ActionGrid& grid() const { return grid_; }
    std::size_t ball_count() const { return centers_.size(); }
    const std::vector<std::vector<double>>& centers() const { return centers_; }
    const Exp3AbsState& ball_state(std::size_t b) const { return states_.at(b); }
    nlohmann::json snapshot() const;

private:
    ContExp3Params params_;
    AbstentionCost c_;
    ActionGrid grid_;
    Rng rng_;
    std::vector<std::vector<double>> centers_;
    std::vector<Exp3AbsState> states_;
    std::vector<std::optional<double>> observed_;
};

} // namespace abstain
