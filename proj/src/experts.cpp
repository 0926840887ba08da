#include "abstain/experts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "abstain/losses.hpp"
#include "abstain/rng.hpp"

namespace abstain {

namespace {

double clamp_unit(double v)
{
    return std::clamp(v, -1.0, 1.0);
}

double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return std::sqrt(s);
}

double evaluate_abstainer(const Abstainer& a, std::span<const double> x, double norm, double h)
{
    return std::visit(
        [&](const auto& ab) -> double {
            using A = std::decay_t<decltype(ab)>;
            if constexpr (std::is_same_v<A, NeverAbstain>)
                return 1.0;
            else if constexpr (std::is_same_v<A, NormBand>)
                return (norm >= ab.inner && norm < ab.outer) ? -1.0 : 1.0;
            else if constexpr (std::is_same_v<A, ConfidenceThreshold>)
                return std::abs(h) - ab.theta;
            else
                return ab.fn(x, h);
        },
        a);
}

} // namespace

double evaluate_predictor(const Predictor& p, std::span<const double> x)
{
    return std::visit(
        [&](const auto& pr) -> double {
            using P = std::decay_t<decltype(pr)>;
            if constexpr (std::is_same_v<P, Hyperplane>) {
                double s = 0.0;
                for (std::size_t i = 0; i < pr.normal.size(); ++i)
                    s += pr.normal[i] * x[i];
                return clamp_unit(s);
            } else if constexpr (std::is_same_v<P, AxisAligned>) {
                return clamp_unit(x[pr.feature] - pr.offset);
            } else {
                return clamp_unit(pr.fn(x));
            }
        },
        p);
}

ExpertPool::ExpertPool(std::size_t dimension, std::vector<Predictor> predictors, std::vector<Expert> experts,
                       nlohmann::json spec)
    : dimension_(dimension), predictors_(std::move(predictors)), experts_(std::move(experts)), spec_(std::move(spec))
{
    if (dimension_ == 0)
        throw std::invalid_argument("ExpertPool: dimension must be positive");
    if (experts_.empty())
        throw std::invalid_argument("ExpertPool: at least one expert is required");
    for (std::size_t j = 0; j < experts_.size(); ++j) {
        if (experts_[j].id != j)
            throw std::invalid_argument("ExpertPool: expert ids must be 0..K-1 in order");
        if (experts_[j].predictor >= predictors_.size())
            throw std::invalid_argument("ExpertPool: expert references a missing predictor");
        if (std::holds_alternative<NormBand>(experts_[j].abstainer))
            needs_norm_ = true;
    }
    for (const auto& p : predictors_) {
        if (const auto* hp = std::get_if<Hyperplane>(&p); hp && hp->normal.size() != dimension_)
            throw std::invalid_argument("ExpertPool: hyperplane normal has wrong dimension");
        if (const auto* ax = std::get_if<AxisAligned>(&p); ax && ax->feature >= dimension_)
            throw std::invalid_argument("ExpertPool: axis-aligned feature out of range");
    }
}

void ExpertPool::evaluate(std::span<const double> x, PoolEval& out) const
{
    if (x.size() != dimension_)
        throw std::invalid_argument("ExpertPool::evaluate: input has dimension " + std::to_string(x.size()) +
                                    ", pool expects " + std::to_string(dimension_));
    const std::size_t k = experts_.size();
    out.h.resize(k);
    out.r.resize(k);
    out.abstains.resize(k);
    out.n_abstaining = 0;

    thread_local std::vector<double> hp;
    hp.resize(predictors_.size());
    for (std::size_t p = 0; p < predictors_.size(); ++p)
        hp[p] = evaluate_predictor(predictors_[p], x);
    const double norm = needs_norm_ ? norm2(x) : 0.0;

    for (std::size_t j = 0; j < k; ++j) {
        const Expert& e = experts_[j];
        const double h = hp[e.predictor];
        const double r = evaluate_abstainer(e.abstainer, x, norm, h);
        out.h[j] = h;
        out.r[j] = r;
        const bool a = abstains(r);
        out.abstains[j] = a ? 1 : 0;
        out.n_abstaining += a ? 1 : 0;
    }
}

std::vector<ExpertEval> ExpertPool::evaluate(std::span<const double> x) const
{
    PoolEval pe;
    evaluate(x, pe);
    std::vector<ExpertEval> out(pe.size());
    for (std::size_t j = 0; j < pe.size(); ++j)
        out[j] = pe[j];
    return out;
}

ExpertPool pair_all(std::size_t dimension, std::vector<Predictor> predictors, const std::vector<Abstainer>& abstainers,
                    nlohmann::json spec)
{
    if (abstainers.empty())
        throw std::invalid_argument("pair_all: no abstainers");
    std::vector<Expert> experts;
    experts.reserve(predictors.size() * abstainers.size());
    for (std::size_t p = 0; p < predictors.size(); ++p)
        for (const auto& a : abstainers)
            experts.push_back(Expert{experts.size(), p, a});
    return ExpertPool(dimension, std::move(predictors), std::move(experts), std::move(spec));
}

std::vector<double> annulus_radii(std::size_t d, std::size_t steps)
{
    if (d == 0 || steps == 0)
        throw std::invalid_argument("annulus_radii: d and steps must be positive");
    std::vector<double> radii(steps);
    const double top = std::sqrt(static_cast<double>(d));
    for (std::size_t k = 1; k <= steps; ++k)
        radii[k - 1] = top * static_cast<double>(k) / static_cast<double>(steps);
    return radii;
}

std::vector<double> confidence_thresholds(std::size_t count, double max)
{
    if (count == 0)
        throw std::invalid_argument("confidence_thresholds: count must be positive");
    if (!(max >= 0.0))
        throw std::invalid_argument("confidence_thresholds: max must be nonnegative");
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k)
        t[k] = count == 1 ? 0.0 : max * static_cast<double>(k) / static_cast<double>(count - 1);
    return t;
}

ExpertPool generate_hyperplane_annuli(std::size_t d, std::size_t n_predictors, const std::vector<double>& radii,
                                      std::uint64_t seed)
{
    if (n_predictors == 0)
        throw std::invalid_argument("generate_hyperplane_annuli: n_predictors must be at least 1");
    if (radii.empty())
        throw std::invalid_argument("generate_hyperplane_annuli: radii must not be empty");
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1])))
            throw std::invalid_argument("generate_hyperplane_annuli: radii must be positive and strictly increasing");
    }

    Rng rng(seed);
    std::vector<Predictor> predictors;
    predictors.reserve(n_predictors);
    for (std::size_t p = 0; p < n_predictors; ++p) {
        Hyperplane hp;
        hp.normal.resize(d);
        for (double& w : hp.normal)
            w = rng.normal();
        predictors.emplace_back(std::move(hp));
    }
    std::vector<Abstainer> abstainers;
    double inner = 0.0;
    for (double outer : radii) {
        abstainers.emplace_back(NormBand{inner, outer});
        inner = outer;
    }
    nlohmann::json spec = {{"generator", "hyperplane_annuli"}, {"n_predictors", n_predictors},
                           {"radii", radii}, {"seed", seed}, {"dimension", d}};
    return pair_all(d, std::move(predictors), abstainers, std::move(spec));
}

ExpertPool generate_confidence_based(std::size_t d, std::vector<Predictor> predictors,
                                     const std::vector<double>& thetas)
{
    if (predictors.empty())
        throw std::invalid_argument("generate_confidence_based: no predictors");
    std::vector<Abstainer> abstainers;
    for (double th : thetas) {
        if (!(th >= 0.0))
            throw std::invalid_argument("generate_confidence_based: thresholds must be nonnegative");
        abstainers.emplace_back(ConfidenceThreshold{th});
    }
    nlohmann::json spec = {{"generator", "confidence_based"}, {"thetas", thetas}, {"dimension", d}};
    return pair_all(d, std::move(predictors), abstainers, std::move(spec));
}

std::vector<Predictor> generate_axis_aligned(std::size_t d, std::size_t per_feature)
{
    if (per_feature == 0)
        throw std::invalid_argument("generate_axis_aligned: per_feature must be at least 1");
    std::vector<Predictor> out;
    out.reserve(d * per_feature);
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t k = 0; k < per_feature; ++k) {
            double b = per_feature == 1 ? 0.0
                                        : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(per_feature - 1);
            out.emplace_back(AxisAligned{f, b});
        }
    }
    return out;
}

std::vector<std::string> validate_pool_spec(const nlohmann::json& spec)
{
    std::vector<std::string> errs;
    if (!spec.is_object()) {
        errs.push_back("experts: must be an object");
        return errs;
    }
    if (!spec.contains("generator") || !spec["generator"].is_string()) {
        errs.push_back("experts.generator: missing or not a string");
        return errs;
    }
    const std::string gen = spec["generator"].get<std::string>();
    auto positive_int = [&](const char* key, bool required) {
        if (!spec.contains(key)) {
            if (required)
                errs.push_back(std::string("experts.") + key + ": missing");
            return;
        }
        if (!spec[key].is_number_integer() || spec[key].get<long long>() < 1)
            errs.push_back(std::string("experts.") + key + ": must be a positive integer");
    };
    if (gen == "hyperplane_annuli") {
        positive_int("n_predictors", true);
        if (spec.contains("radii")) {
            const auto& r = spec["radii"];
            bool ok = r.is_array() && !r.empty();
            double prev = 0.0;
            if (ok)
                for (const auto& v : r) {
                    if (!v.is_number() || !(v.get<double>() > prev)) {
                        ok = false;
                        break;
                    }
                    prev = v.get<double>();
                }
            if (!ok)
                errs.push_back("experts.radii: must be a non-empty, positive, strictly increasing list");
        } else {
            positive_int("radii_steps", false);
        }
    } else if (gen == "confidence_axis") {
        positive_int("per_feature", false);
        positive_int("n_thresholds", false);
        if (spec.contains("theta_max") && (!spec["theta_max"].is_number() || spec["theta_max"].get<double>() < 0.0))
            errs.push_back("experts.theta_max: must be a nonnegative number");
    } else if (gen != "construction") {
        errs.push_back("experts.generator: unknown generator '" + gen + "'");
    }
    return errs;
}

ExpertPool make_pool(const nlohmann::json& spec, std::size_t d, std::uint64_t seed)
{
    auto errs = validate_pool_spec(spec);
    if (!errs.empty())
        throw std::invalid_argument(errs.front());
    const std::string gen = spec["generator"].get<std::string>();
    if (gen == "hyperplane_annuli") {
        std::vector<double> radii;
        if (spec.contains("radii"))
            radii = spec["radii"].get<std::vector<double>>();
        else
            radii = annulus_radii(d, spec.value("radii_steps", std::size_t{20}));
        return generate_hyperplane_annuli(d, spec["n_predictors"].get<std::size_t>(), radii, seed);
    }
    if (gen == "confidence_axis") {
        const std::size_t per = spec.value("per_feature", std::max<std::size_t>(1, 100 / d));
        const auto thetas = confidence_thresholds(spec.value("n_thresholds", std::size_t{20}),
                                                  spec.value("theta_max", 0.25));
        std::vector<Abstainer> abstainers(thetas.size());
        std::transform(thetas.begin(), thetas.end(), abstainers.begin(),
                       [](double th) { return Abstainer{ConfidenceThreshold{th}}; });
        nlohmann::json full = {{"generator", "confidence_axis"}, {"per_feature", per}, {"thetas", thetas},
                               {"dimension", d}};
        return pair_all(d, generate_axis_aligned(d, per), abstainers, std::move(full));
    }
    throw std::invalid_argument("make_pool: generator '" + gen + "' is provided by its environment");
}

} // namespace abstain
