#pragma once

#include <string>
#include <variant>

#include <json.hpp>

namespace abstain {

class AbstentionCost
{
public:
    constexpr AbstentionCost() = default;
    explicit AbstentionCost(double c);

    constexpr double value() const { return c_; }

private:
    double c_ = 0.0;
};

// r <= 0 means the expert abstains.
constexpr bool abstains(double r) { return r <= 0.0; }

double zero_one_loss(int y, double score);
double f_gamma(double margin, double gamma);
double hinge_loss(int y, double score);

struct ZeroOneLoss {};
struct FGammaLoss { double gamma = 0.5; };
// (1 - y h)_+ clamped to [0, 1]
struct ClampedHingeLoss {};

using BaseLoss = std::variant<ZeroOneLoss, FGammaLoss, ClampedHingeLoss>;

double base_loss(const BaseLoss& base, int y, double h);

// c if r <= 0, otherwise base(y, h)
double abstention_loss(double h, double r, int y, AbstentionCost c, const BaseLoss& base);

// Lipschitz surrogate of the abstention loss with f_gamma as the base loss.
double surrogate_abstention_loss(double margin, double r, AbstentionCost c, double gamma);

std::string to_string(const BaseLoss& base);
nlohmann::json to_json(const BaseLoss& base);
BaseLoss base_loss_from_json(const nlohmann::json& j);

} // namespace abstain
