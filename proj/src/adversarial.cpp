#include "abstain/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace abstain {

double exp3abs_observation_probability(std::span<const double> q, std::span<const std::uint8_t> abstains,
                                       std::size_t j)
{
    if (abstains[j])
        return 1.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (!abstains[i])
            mass += q[i];
    return mass;
}

std::vector<double> exp3abs_estimates(std::span<const double> q, std::span<const std::uint8_t> abstains,
                                      std::size_t chosen, std::span<const std::optional<double>> losses)
{
    const std::size_t k = q.size();
    if (abstains.size() != k || losses.size() != k)
        throw std::invalid_argument("exp3abs_estimates: size mismatch");
    if (chosen >= k)
        throw std::out_of_range("exp3abs_estimates: chosen index out of range");
    const bool chosen_abstains = abstains[chosen] != 0;
    double accept_mass = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        if (!abstains[i])
            accept_mass += q[i];

    std::vector<double> est(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const bool observed = !chosen_abstains || abstains[j];
        if (!observed) {
            if (losses[j])
                throw ProtocolViolation("exp3abs_update: loss supplied for unobserved expert " + std::to_string(j));
            continue;
        }
        if (!losses[j])
            throw std::invalid_argument("exp3abs_update: missing loss for observed expert " + std::to_string(j));
        const double p = abstains[j] ? 1.0 : accept_mass;
        est[j] = *losses[j] / p;
    }
    return est;
}

double tuned_eta_exp3abs(std::size_t k, double horizon, double c)
{
    if (k < 2)
        throw std::invalid_argument("tuned_eta_exp3abs: K must be at least 2");
    if (!(horizon > 0.0))
        throw std::invalid_argument("tuned_eta_exp3abs: T must be positive");
    return std::sqrt(2.0 * std::log(static_cast<double>(k)) / ((c * c + 1.0) * horizon));
}

Exp3AbsState::Exp3AbsState(std::size_t k, double eta) : eta_(eta), cum_losses_(k, 0.0), q_(k, 0.0)
{
    if (k == 0)
        throw std::invalid_argument("Exp3AbsState: K must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw std::invalid_argument("Exp3AbsState: eta must be positive");
    renormalize();
}

Exp3AbsState Exp3AbsState::from_distribution(std::span<const double> q, double eta)
{
    Exp3AbsState s(q.size(), eta);
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (!(q[j] > 0.0))
            throw std::invalid_argument("Exp3AbsState::from_distribution: probabilities must be positive");
        s.cum_losses_[j] = -std::log(q[j]) / eta;
    }
    s.renormalize();
    return s;
}

void Exp3AbsState::renormalize()
{
    double lo = std::numeric_limits<double>::infinity();
    for (double L : cum_losses_)
        lo = std::min(lo, L);
    double total = 0.0;
    for (std::size_t j = 0; j < q_.size(); ++j) {
        q_[j] = std::exp(-eta_ * (cum_losses_[j] - lo));
        total += q_[j];
    }
    for (double& v : q_)
        v /= total;
}

std::size_t Exp3AbsState::select(Rng& rng)
{
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = q_.size() - 1;
    for (std::size_t j = 0; j < q_.size(); ++j) {
        acc += q_[j];
        if (u < acc) {
            pick = j;
            break;
        }
    }
    // guard against rounding leaving u above the final partial sum
    while (q_[pick] <= 0.0 && pick > 0)
        --pick;
    last_draw_ = Draw{u, pick};
    return pick;
}

void Exp3AbsState::update(std::span<const std::uint8_t> abstains, std::size_t chosen,
                          std::span<const std::optional<double>> losses)
{
    const auto est = exp3abs_estimates(q_, abstains, chosen, losses);
    for (std::size_t j = 0; j < est.size(); ++j)
        cum_losses_[j] += est[j];
    renormalize();
}

nlohmann::json Exp3AbsState::to_json() const
{
    nlohmann::json j = {{"eta", eta_}, {"cum_losses", cum_losses_}, {"q", q_}};
    if (last_draw_)
        j["last_draw"] = {{"u", last_draw_->u}, {"index", last_draw_->index}};
    return j;
}

Exp3AbsState Exp3AbsState::from_json(const nlohmann::json& j)
{
    const auto cum = j.at("cum_losses").get<std::vector<double>>();
    Exp3AbsState s(cum.size(), j.at("eta").get<double>());
    s.cum_losses_ = cum;
    s.renormalize();
    if (j.contains("last_draw"))
        s.last_draw_ = Draw{j["last_draw"].at("u").get<double>(), j["last_draw"].at("index").get<std::size_t>()};
    return s;
}

Exp3Abs::Exp3Abs(std::size_t k, double eta, std::uint64_t seed) : state_(k, eta), rng_(seed), observed_(k)
{
}

StepOutcome Exp3Abs::step(const RoundFeedback& round)
{
    const std::size_t k = state_.size();
    if (round.size() != k)
        throw std::invalid_argument("Exp3Abs::step: round size does not match the pool");
    const std::size_t chosen = state_.select(rng_);
    const bool chosen_abstains = round.abstains(chosen);
    std::uint64_t updated = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (!chosen_abstains || round.abstains(j)) {
            observed_[j] = round.reveal(j, chosen);
            ++updated;
        } else {
            observed_[j].reset();
        }
    }
    state_.update(round.eval().abstains, chosen, observed_);
    const std::uint64_t kk = k;
    const std::uint64_t b = round.abstaining_count();
    return StepOutcome{chosen, round.reveal(chosen, chosen), chosen_abstains, updated, (kk - b) * kk + b * b};
}

nlohmann::json Exp3Abs::snapshot() const
{
    return {{"learner", name()}, {"state", state_.to_json()}};
}

ActionGrid::ActionGrid(double eps) : eps_(eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("ActionGrid: eps must be positive");
    const double step = eps / std::numbers::sqrt2;
    const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(2.0 / step) + 1.0));
    axis_.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        axis_[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1);
    if (n % 2 == 1)
        axis_[n / 2] = 0.0;
    flags_.resize(size());
    for (std::size_t k = 0; k < size(); ++k)
        flags_[k] = abstains(k) ? 1 : 0;
}

double action_grid_constant()
{
    const double s = 2.0 + 2.0 * std::numbers::sqrt2;
    return s * s;
}

double cube_packing_constant(std::size_t d)
{
    if (d == 0)
        throw std::invalid_argument("cube_packing_constant: d must be positive");
    const double dd = static_cast<double>(d);
    const double unit_ball = std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0);
    return std::pow(6.0, dd) / unit_ball;
}

ContExp3Params tuned_params_contexp3(std::size_t horizon, std::size_t d, double gamma, std::optional<double> c_x)
{
    if (horizon < 1)
        throw std::invalid_argument("tuned_params_contexp3: T must be at least 1");
    if (d < 1)
        throw std::invalid_argument("tuned_params_contexp3: d must be at least 1");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("tuned_params_contexp3: gamma must lie in (0, 1]");
    const double dd = static_cast<double>(d);
    const double T = static_cast<double>(horizon);
    ContExp3Params p;
    p.dimension = d;
    p.gamma = gamma;
    p.eps = std::pow(T, -1.0 / (2.0 + dd)) * std::pow(gamma, 2.0 / (2.0 + dd));
    const double cx = c_x.value_or(cube_packing_constant(d));
    const double n_balls = cx * std::pow(p.eps, -dd);
    const double k_eps = static_cast<double>(ActionGrid(p.eps).size());
    p.eta = std::sqrt(n_balls * std::log(k_eps) / T);
    return p;
}

ContExp3Abs::ContExp3Abs(ContExp3Params params, AbstentionCost c, std::uint64_t seed)
    : params_(params), c_(c), grid_(params.eps), rng_(seed), observed_(grid_.size())
{
    if (params_.dimension == 0)
        throw std::invalid_argument("ContExp3Abs: dimension must be positive");
    if (!(params_.gamma > 0.0))
        throw std::invalid_argument("ContExp3Abs: gamma must be positive");
    if (!(params_.eta > 0.0))
        throw std::invalid_argument("ContExp3Abs: eta must be positive");
}

ContStep ContExp3Abs::step(std::span<const double> x, const std::function<int()>& label_oracle)
{
    if (x.size() != params_.dimension)
        throw std::invalid_argument("ContExp3Abs::step: input dimension mismatch");
    ContStep out;
    double best = std::numeric_limits<double>::infinity();
    std::size_t ball = 0;
    for (std::size_t b = 0; b < centers_.size(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - centers_[b][i];
            s += d * d;
        }
        if (s < best) {
            best = s;
            ball = b;
        }
    }
    if (centers_.empty() || std::sqrt(best) > params_.eps) {
        centers_.emplace_back(x.begin(), x.end());
        states_.emplace_back(grid_.size(), params_.eta);
        ball = centers_.size() - 1;
        out.new_ball = true;
    }
    out.ball = ball;
    Exp3AbsState& state = states_[ball];
    const std::size_t a = state.select(rng_);
    out.action = a;
    out.h = grid_.h(a);
    out.r = grid_.r(a);
    out.abstained = grid_.abstains(a);

    const std::size_t n = grid_.size();
    if (out.abstained) {
        // only abstaining actions are observed; their surrogate loss does not involve the label
        for (std::size_t k = 0; k < n; ++k) {
            if (grid_.abstains(k))
                observed_[k] = surrogate_abstention_loss(0.0, grid_.r(k), c_, params_.gamma);
            else
                observed_[k].reset();
        }
    } else {
        const int y = label_oracle();
        if (y != 1 && y != -1)
            throw std::invalid_argument("ContExp3Abs::step: label must be +1 or -1");
        for (std::size_t k = 0; k < n; ++k)
            observed_[k] = surrogate_abstention_loss(y * grid_.h(k), grid_.r(k), c_, params_.gamma);
    }
    out.surrogate_loss = *observed_[a];
    state.update(grid_.abstain_flags(), a, observed_);
    return out;
}

nlohmann::json ContExp3Abs::snapshot() const
{
    nlohmann::json balls = nlohmann::json::array();
    for (std::size_t b = 0; b < centers_.size(); ++b)
        balls.push_back({{"center", centers_[b]}, {"state", states_[b].to_json()}});
    return {{"learner", "cont_exp3_abs"},
            {"eps", params_.eps},
            {"eta", params_.eta},
            {"gamma", params_.gamma},
            {"grid_size", grid_.size()},
            {"balls", balls}};
}

} // namespace abstain
