#include "abstain/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abstain {

namespace {

void check_gamma(double gamma)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma must be a positive finite number");
}

} // namespace

AbstentionCost::AbstentionCost(double c) : c_(c)
{
    if (!(c >= 0.0 && c <= 1.0))
        throw std::invalid_argument("abstention cost c must lie in [0, 1]");
}

double zero_one_loss(int y, double score)
{
    return y * score <= 0.0 ? 1.0 : 0.0;
}

double f_gamma(double margin, double gamma)
{
    check_gamma(gamma);
    if (margin <= -gamma)
        return 1.0;
    if (margin >= gamma)
        return 0.0;
    return std::clamp((gamma - margin) / (2.0 * gamma), 0.0, 1.0);
}

double hinge_loss(int y, double score)
{
    return std::clamp(1.0 - y * score, 0.0, 1.0);
}

double base_loss(const BaseLoss& base, int y, double h)
{
    return std::visit(
        [&](const auto& b) -> double {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, ZeroOneLoss>)
                return zero_one_loss(y, h);
            else if constexpr (std::is_same_v<B, FGammaLoss>)
                return f_gamma(y * h, b.gamma);
            else
                return hinge_loss(y, h);
        },
        base);
}

double abstention_loss(double h, double r, int y, AbstentionCost c, const BaseLoss& base)
{
    if (abstains(r))
        return c.value();
    return base_loss(base, y, h);
}

double surrogate_abstention_loss(double margin, double r, AbstentionCost c, double gamma)
{
    check_gamma(gamma);
    const double cv = c.value();
    if (r <= -gamma)
        return cv;
    if (r < 0.0)
        return 1.0 + ((1.0 - cv) / gamma) * r;
    const double f = f_gamma(margin, gamma);
    if (r < gamma)
        return 1.0 - ((1.0 - f) / gamma) * r;
    return f;
}

std::string to_string(const BaseLoss& base)
{
    return std::visit(
        [](const auto& b) -> std::string {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, ZeroOneLoss>)
                return "zero_one";
            else if constexpr (std::is_same_v<B, FGammaLoss>)
                return "f_gamma";
            else
                return "hinge";
        },
        base);
}

nlohmann::json to_json(const BaseLoss& base)
{
    nlohmann::json j = {{"type", to_string(base)}};
    if (const auto* f = std::get_if<FGammaLoss>(&base))
        j["gamma"] = f->gamma;
    return j;
}

BaseLoss base_loss_from_json(const nlohmann::json& j)
{
    const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    if (type == "zero_one")
        return ZeroOneLoss{};
    if (type == "hinge")
        return ClampedHingeLoss{};
    if (type == "f_gamma") {
        double gamma = 0.5;
        if (j.is_object() && j.contains("gamma"))
            gamma = j.at("gamma").get<double>();
        check_gamma(gamma);
        return FGammaLoss{gamma};
    }
    throw std::invalid_argument("unknown base loss '" + type + "'");
}

} // namespace abstain
