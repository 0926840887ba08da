#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace abstain {

// h(x) = clamp(w . x, -1, 1)
struct Hyperplane
{
    std::vector<double> normal;
};

// h(x) = clamp(x[feature] - offset, -1, 1)
struct AxisAligned
{
    std::size_t feature = 0;
    double offset = 0.0;
};

struct CustomPredictor
{
    std::string name;
    std::function<double(std::span<const double>)> fn;
};

using Predictor = std::variant<Hyperplane, AxisAligned, CustomPredictor>;

struct NeverAbstain {};

// Abstains on the half-open norm band inner <= ||x||_2 < outer.
struct NormBand
{
    double inner = 0.0;
    double outer = 1.0;
};

// r(x) = |h(x)| - theta for the paired predictor h.
struct ConfidenceThreshold
{
    double theta = 0.0;
};

struct CustomAbstainer
{
    std::string name;
    std::function<double(std::span<const double>, double)> fn; // (x, h(x)) -> r(x)
};

using Abstainer = std::variant<NeverAbstain, NormBand, ConfidenceThreshold, CustomAbstainer>;

double evaluate_predictor(const Predictor& p, std::span<const double> x);

struct Expert
{
    std::size_t id = 0;
    std::size_t predictor = 0; // index into the pool's predictor list
    Abstainer abstainer;
};

struct ExpertEval
{
    double h_val = 0.0;
    double r_val = 0.0;
    bool abstains = false;
};

// Struct-of-arrays evaluation of a whole pool on one input.
struct PoolEval
{
    std::vector<double> h;
    std::vector<double> r;
    std::vector<std::uint8_t> abstains;
    std::size_t n_abstaining = 0;

    std::size_t size() const { return h.size(); }
    ExpertEval operator[](std::size_t j) const { return {h[j], r[j], abstains[j] != 0}; }
};

class ExpertPool
{
public:
    ExpertPool(std::size_t dimension, std::vector<Predictor> predictors, std::vector<Expert> experts,
               nlohmann::json spec = {});

    std::size_t size() const { return experts_.size(); }
    std::size_t dimension() const { return dimension_; }
    const Expert& expert(std::size_t j) const { return experts_.at(j); }
    const std::vector<Expert>& experts() const { return experts_; }
    const Predictor& predictor(std::size_t p) const { return predictors_.at(p); }
    std::size_t predictor_count() const { return predictors_.size(); }
    // generator name, parameters and seed; enough to rebuild the pool
    const nlohmann::json& spec() const { return spec_; }

    std::vector<ExpertEval> evaluate(std::span<const double> x) const;
    void evaluate(std::span<const double> x, PoolEval& out) const;

private:
    std::size_t dimension_;
    std::vector<Predictor> predictors_;
    std::vector<Expert> experts_;
    nlohmann::json spec_;
    bool needs_norm_ = false;
};

// Pairs every predictor with every abstainer; expert id = predictor * |abstainers| + k.
ExpertPool pair_all(std::size_t dimension, std::vector<Predictor> predictors, const std::vector<Abstainer>& abstainers,
                    nlohmann::json spec = {});

// radii k * sqrt(d) / steps for k = 1..steps
std::vector<double> annulus_radii(std::size_t d, std::size_t steps);
// count thresholds evenly spaced on [0, max]
std::vector<double> confidence_thresholds(std::size_t count, double max);

ExpertPool generate_hyperplane_annuli(std::size_t d, std::size_t n_predictors, const std::vector<double>& radii,
                                      std::uint64_t seed);
ExpertPool generate_confidence_based(std::size_t d, std::vector<Predictor> predictors,
                                     const std::vector<double>& thetas);
std::vector<Predictor> generate_axis_aligned(std::size_t d, std::size_t per_feature);

// Builds a pool from a generator spec, e.g.
//   {"generator": "hyperplane_annuli", "n_predictors": 100, "radii_steps": 20}
//   {"generator": "confidence_axis", "per_feature": 25, "n_thresholds": 20, "theta_max": 0.25}
ExpertPool make_pool(const nlohmann::json& spec, std::size_t d, std::uint64_t seed);
// Field-level problems with a generator spec; empty when valid.
std::vector<std::string> validate_pool_spec(const nlohmann::json& spec);

} // namespace abstain
