#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abstain/experts.hpp"
#include "abstain/feedback.hpp"
#include "abstain/losses.hpp"
#include "abstain/rng.hpp"

namespace abstain {

struct LabeledPoint
{
    std::vector<double> x;
    int y = 1;
};

inline int sign_label(double v) { return v >= 0.0 ? 1 : -1; }

class Environment
{
public:
    virtual ~Environment() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual LabeledPoint sample(Rng& rng) const = 0;
    virtual nlohmann::json spec() const = 0;

    // T rounds of data; i.i.d. draws unless the environment says otherwise.
    virtual std::vector<LabeledPoint> stream(std::size_t horizon, Rng& rng) const;

    // Exact expected abstention losses when the distribution makes that possible.
    virtual std::optional<std::vector<double>> expected_losses(const ExpertPool& pool, AbstentionCost c,
                                                               const BaseLoss& base) const;
};

std::vector<LabeledPoint> draw_stream(const Environment& env, std::size_t horizon, std::uint64_t seed);

// x ~ U([-1,1]^2), y = sign(x1 + x2) with sign(0) = +1
std::shared_ptr<const Environment> synthetic_uniform();

struct CsvOptions
{
    bool header = true;
    char delimiter = ',';
    // true: rows sampled uniformly with replacement; false: rows replayed in file order
    bool shuffle = true;
};

class CsvEnvironment : public Environment
{
public:
    CsvEnvironment(const std::string& path, CsvOptions options);

    std::string kind() const override { return "csv"; }
    std::size_t dimension() const override { return dimension_; }
    LabeledPoint sample(Rng& rng) const override;
    std::vector<LabeledPoint> stream(std::size_t horizon, Rng& rng) const override;
    nlohmann::json spec() const override;

    const std::vector<LabeledPoint>& rows() const { return rows_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    std::string path_;
    CsvOptions options_;
    std::size_t dimension_ = 0;
    std::vector<LabeledPoint> rows_;
    std::vector<std::string> warnings_;
};

std::shared_ptr<const CsvEnvironment> csv_environment(const std::string& path, CsvOptions options = {});

// A fixed pool/distribution pair with closed-form expected losses.
struct Construction
{
    ExpertPool pool;
    std::shared_ptr<const Environment> environment;
    AbstentionCost cost;
    BaseLoss base;
    std::vector<double> means;
    std::optional<FeedbackGraph> offending_graph;
    nlohmann::json parameters;
};

struct BiasLevels
{
    double left_mass = 0.55;
    double red_left = 0.1;
    double blue_left = 0.2;
    double blue_right = 0.05;
    double c = 0.5;
};

// Two experts on X = [0,1]: red (id 0) abstains on x > 1/2, blue (id 1) never abstains.
Construction bias_construction(const BiasLevels& levels = {});

struct Prop1Parameters
{
    double c = 0.0;
    double p_star = 0.0;
    double p = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t n = 1;
    std::size_t horizon = 10; // 10 n
};

double prop1_alpha(double c, double p);
double prop1_beta(double c, double p);
// Picks n and p (default p = p_star^{1/(10 n)}) and checks every condition of the construction.
Prop1Parameters prop1_parameters(double c, double p_star, std::optional<double> p = std::nullopt);
// Expert 0 is (h_i, r_i), expert 1 is (h_j, r_j); x~ = 0.25 with probability p, x* = 0.75 otherwise.
Construction prop1_construction(double c, double p_star, std::optional<double> p = std::nullopt);

// Never-abstaining experts on x ~ U[0,1], y = +1, with expected losses equal to `means`.
Construction gap_construction(const std::vector<double>& means, double c = 0.5);

// {"type": "synthetic_uniform"} | {"type": "csv", "path": ...} | {"type": "bias", ...} |
// {"type": "prop1", "p_star": ...} | {"type": "gap", "means": [...]}
std::vector<std::string> validate_environment_spec(const nlohmann::json& spec);
bool is_construction(const nlohmann::json& spec);
std::shared_ptr<const Environment> make_environment(const nlohmann::json& spec);
Construction make_construction(const nlohmann::json& spec, double c);

} // namespace abstain
