#include "abstain/environments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace abstain {

std::vector<LabeledPoint> Environment::stream(std::size_t horizon, Rng& rng) const
{
    std::vector<LabeledPoint> out;
    out.reserve(horizon);
    for (std::size_t t = 0; t < horizon; ++t)
        out.push_back(sample(rng));
    return out;
}

std::optional<std::vector<double>> Environment::expected_losses(const ExpertPool&, AbstentionCost,
                                                                const BaseLoss&) const
{
    return std::nullopt;
}

std::vector<LabeledPoint> draw_stream(const Environment& env, std::size_t horizon, std::uint64_t seed)
{
    Rng rng(seed);
    return env.stream(horizon, rng);
}

namespace {

class SyntheticUniform : public Environment
{
public:
    std::string kind() const override { return "synthetic_uniform"; }
    std::size_t dimension() const override { return 2; }
    LabeledPoint sample(Rng& rng) const override
    {
        LabeledPoint z;
        z.x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        z.y = sign_label(z.x[0] + z.x[1]);
        return z;
    }
    nlohmann::json spec() const override { return {{"type", kind()}}; }
};

class BiasEnvironment : public Environment
{
public:
    explicit BiasEnvironment(const BiasLevels& levels) : levels_(levels) {}

    std::string kind() const override { return "bias"; }
    std::size_t dimension() const override { return 1; }
    LabeledPoint sample(Rng& rng) const override
    {
        LabeledPoint z;
        const double u = rng.uniform();
        const double v = rng.uniform();
        if (u < levels_.left_mass) {
            const double x = 0.5 * v;
            z.x = {x};
            z.y = x < 0.5 * levels_.red_left ? -1 : 1;
        } else {
            const double x = 0.5 + 0.5 * (1.0 - v);
            z.x = {x};
            z.y = x <= 0.5 + 0.5 * levels_.blue_right ? -1 : 1;
        }
        return z;
    }
    nlohmann::json spec() const override
    {
        return {{"type", kind()},
                {"left_mass", levels_.left_mass},
                {"red_left", levels_.red_left},
                {"blue_left", levels_.blue_left},
                {"blue_right", levels_.blue_right}};
    }

private:
    BiasLevels levels_;
};

class TwoPointEnvironment : public Environment
{
public:
    TwoPointEnvironment(double p, double x_tilde, double x_star, int y_tilde, int y_star)
        : p_(p), x_tilde_(x_tilde), x_star_(x_star), y_tilde_(y_tilde), y_star_(y_star)
    {
    }

    std::string kind() const override { return "prop1"; }
    std::size_t dimension() const override { return 1; }
    LabeledPoint sample(Rng& rng) const override
    {
        if (rng.uniform() < p_)
            return {{x_tilde_}, y_tilde_};
        return {{x_star_}, y_star_};
    }
    nlohmann::json spec() const override
    {
        return {{"type", kind()}, {"p", p_}, {"x_tilde", x_tilde_}, {"x_star", x_star_}};
    }
    std::optional<std::vector<double>> expected_losses(const ExpertPool& pool, AbstentionCost c,
                                                       const BaseLoss& base) const override
    {
        if (pool.dimension() != 1)
            return std::nullopt;
        const double xt[1] = {x_tilde_};
        const double xs[1] = {x_star_};
        const auto et = pool.evaluate(xt);
        const auto es = pool.evaluate(xs);
        std::vector<double> mu(pool.size());
        for (std::size_t j = 0; j < pool.size(); ++j)
            mu[j] = p_ * abstention_loss(et[j].h_val, et[j].r_val, y_tilde_, c, base) +
                    (1.0 - p_) * abstention_loss(es[j].h_val, es[j].r_val, y_star_, c, base);
        return mu;
    }

private:
    double p_, x_tilde_, x_star_;
    int y_tilde_, y_star_;
};

class UnitIntervalPositive : public Environment
{
public:
    std::string kind() const override { return "gap"; }
    std::size_t dimension() const override { return 1; }
    LabeledPoint sample(Rng& rng) const override { return {{rng.uniform()}, 1}; }
    nlohmann::json spec() const override { return {{"type", kind()}}; }
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

void check_unit(double v, const char* name)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

} // namespace

std::shared_ptr<const Environment> synthetic_uniform()
{
    return std::make_shared<SyntheticUniform>();
}

CsvEnvironment::CsvEnvironment(const std::string& path, CsvOptions options) : path_(path), options_(options)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("csv: cannot open '" + path + "'");
    std::vector<std::vector<double>> features;
    std::vector<std::string> labels;
    std::string line;
    std::size_t line_no = 0;
    bool skipped_header = !options.header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, options.delimiter))
            cells.push_back(trim(cell));
        if (!line.empty() && line.back() == options.delimiter)
            cells.emplace_back();
        if (cells.size() < 2)
            throw std::invalid_argument("csv: line " + std::to_string(line_no) +
                                        " needs at least one feature column and a label column");
        if (dimension_ == 0)
            dimension_ = cells.size() - 1;
        else if (cells.size() - 1 != dimension_)
            throw std::invalid_argument("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                        " columns, expected " + std::to_string(dimension_ + 1));
        std::vector<double> row(dimension_);
        for (std::size_t f = 0; f < dimension_; ++f) {
            auto v = parse_number(cells[f]);
            if (!v)
                throw std::invalid_argument("csv: line " + std::to_string(line_no) + ", column " + std::to_string(f + 1) +
                                            ": non-numeric cell '" + cells[f] + "'");
            row[f] = *v;
        }
        features.push_back(std::move(row));
        labels.push_back(cells.back());
    }
    if (features.empty())
        throw std::invalid_argument("csv: '" + path + "' contains no data rows");

    // label symbols: {-1, +1} kept, {0, 1} mapped to {-1, +1}
    std::vector<double> numeric(labels.size());
    bool has_zero = false, has_minus = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto v = parse_number(labels[i]);
        if (!v || !(*v == -1.0 || *v == 0.0 || *v == 1.0))
            throw std::invalid_argument("csv: unknown label symbol '" + labels[i] + "'");
        numeric[i] = *v;
        has_zero = has_zero || *v == 0.0;
        has_minus = has_minus || *v == -1.0;
    }
    if (has_zero && has_minus)
        throw std::invalid_argument("csv: labels mix 0 and -1; use either {0,1} or {-1,1}");

    std::vector<double> lo(dimension_, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dimension_, -std::numeric_limits<double>::infinity());
    for (const auto& row : features)
        for (std::size_t f = 0; f < dimension_; ++f) {
            lo[f] = std::min(lo[f], row[f]);
            hi[f] = std::max(hi[f], row[f]);
        }
    for (std::size_t f = 0; f < dimension_; ++f)
        if (!(hi[f] > lo[f])) {
            warnings_.push_back("csv: feature column " + std::to_string(f + 1) + " is constant; mapped to 0");
            std::cerr << "warning: " << warnings_.back() << '\n';
        }

    rows_.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        LabeledPoint z;
        z.x.resize(dimension_);
        for (std::size_t f = 0; f < dimension_; ++f) {
            if (!(hi[f] > lo[f]))
                z.x[f] = 0.0;
            else
                z.x[f] = std::clamp(2.0 * (features[i][f] - lo[f]) / (hi[f] - lo[f]) - 1.0, -1.0, 1.0);
        }
        z.y = numeric[i] > 0.0 ? 1 : -1;
        rows_.push_back(std::move(z));
    }
}

LabeledPoint CsvEnvironment::sample(Rng& rng) const
{
    return rows_[rng.index(rows_.size())];
}

std::vector<LabeledPoint> CsvEnvironment::stream(std::size_t horizon, Rng& rng) const
{
    if (options_.shuffle)
        return Environment::stream(horizon, rng);
    std::vector<LabeledPoint> out;
    out.reserve(horizon);
    for (std::size_t t = 0; t < horizon; ++t)
        out.push_back(rows_[t % rows_.size()]);
    return out;
}

nlohmann::json CsvEnvironment::spec() const
{
    return {{"type", kind()},
            {"path", path_},
            {"header", options_.header},
            {"delimiter", std::string(1, options_.delimiter)},
            {"shuffle", options_.shuffle}};
}

std::shared_ptr<const CsvEnvironment> csv_environment(const std::string& path, CsvOptions options)
{
    return std::make_shared<CsvEnvironment>(path, options);
}

Construction bias_construction(const BiasLevels& levels)
{
    if (!(levels.left_mass > 0.0 && levels.left_mass < 1.0))
        throw std::invalid_argument("bias_construction: left_mass must lie in (0, 1)");
    check_unit(levels.red_left, "bias_construction: red_left");
    check_unit(levels.blue_left, "bias_construction: blue_left");
    check_unit(levels.blue_right, "bias_construction: blue_right");
    const AbstentionCost c(levels.c);

    const double rl = levels.red_left;
    const double bl = levels.blue_left;
    // blue predicts -1 on [neg_lo, neg_hi) of the left half and +1 elsewhere
    const double neg_lo = bl >= rl ? 0.5 * rl : 0.0;
    const double neg_hi = bl >= rl ? 0.5 * bl : 0.5 * (rl - bl);

    std::vector<Predictor> predictors;
    predictors.emplace_back(CustomPredictor{"red", [](std::span<const double>) { return 1.0; }});
    predictors.emplace_back(CustomPredictor{"blue", [neg_lo, neg_hi](std::span<const double> x) {
                                                return (x[0] >= neg_lo && x[0] < neg_hi) ? -1.0 : 1.0;
                                            }});
    std::vector<Expert> experts;
    experts.push_back(Expert{0, 0, CustomAbstainer{"right_half", [](std::span<const double> x, double) {
                                                       return x[0] > 0.5 ? -1.0 : 1.0;
                                                   }}});
    experts.push_back(Expert{1, 1, NeverAbstain{}});

    auto env = std::make_shared<BiasEnvironment>(levels);
    nlohmann::json params = env->spec();
    params["c"] = levels.c;
    Construction out{ExpertPool(1, std::move(predictors), std::move(experts),
                                {{"generator", "construction"}, {"construction", "bias"}}),
                     env,
                     c,
                     ZeroOneLoss{},
                     {levels.left_mass * rl + (1.0 - levels.left_mass) * levels.c,
                      levels.left_mass * bl + (1.0 - levels.left_mass) * levels.blue_right},
                     std::nullopt,
                     params};
    return out;
}

double prop1_alpha(double c, double p)
{
    return c * (1.0 - p) / (2.0 * p);
}

double prop1_beta(double c, double p)
{
    return c * (1.0 - p) / 4.0;
}

Prop1Parameters prop1_parameters(double c, double p_star, std::optional<double> p)
{
    if (!(c > 0.0 && c < 1.0))
        throw std::invalid_argument("prop1: c must lie in (0, 1)");
    if (!(p_star > 0.0 && p_star < 1.0))
        throw std::invalid_argument("prop1: p_star must lie in (0, 1)");
    if (p && !(*p > 0.0 && *p < 1.0))
        throw std::invalid_argument("prop1: p must lie in (0, 1)");

    auto choose_p = [&](std::size_t n) {
        return p.value_or(std::pow(p_star, 1.0 / (10.0 * static_cast<double>(n))));
    };
    // smallest n with mu_j < (c - beta) - sqrt(5 ln n / n), i.e. alpha p - beta > sqrt(5 ln n / n)
    std::optional<std::size_t> n_found;
    for (std::size_t n = 1; n <= 1000000; ++n) {
        const double pn = choose_p(n);
        const double gap = prop1_alpha(c, pn) * pn - prop1_beta(c, pn);
        const double nd = static_cast<double>(n);
        if (gap > std::sqrt(5.0 * std::log(nd) / nd)) {
            n_found = n;
            break;
        }
    }
    if (!n_found)
        throw std::invalid_argument("prop1: no n satisfies mu_j < l(y~, h_i(x~)) - sqrt(5 ln n / n)");

    Prop1Parameters out;
    out.c = c;
    out.p_star = p_star;
    out.n = *n_found;
    out.horizon = 10 * out.n;
    out.p = choose_p(out.n);
    out.alpha = prop1_alpha(c, out.p);
    out.beta = prop1_beta(c, out.p);

    const double np = static_cast<double>(out.n);
    if (!(out.p > 0.5))
        throw std::invalid_argument("prop1: condition p > 1/2 violated (p = " + std::to_string(out.p) + ")");
    if (!(out.p > std::pow(p_star, 1.0 / np)))
        throw std::invalid_argument("prop1: condition p > p_star^(1/n) violated");
    if (!(out.alpha > out.beta))
        throw std::invalid_argument("prop1: condition alpha > beta violated");
    if (!(out.alpha < c && out.beta < c))
        throw std::invalid_argument("prop1: condition alpha, beta < c violated");
    if (!(out.alpha - out.beta < c * (1.0 - out.p) / out.p))
        throw std::invalid_argument("prop1: condition alpha - beta < c(1-p)/p violated");
    if (!(out.beta < out.alpha * out.p))
        throw std::invalid_argument("prop1: condition beta < alpha p violated");
    return out;
}

Construction prop1_construction(double c, double p_star, std::optional<double> p)
{
    const Prop1Parameters prm = prop1_parameters(c, p_star, p);
    constexpr double x_tilde = 0.25;
    constexpr double x_star = 0.75;
    const double hi_tilde = 1.0 - c + prm.beta;
    const double hj_tilde = 1.0 - c + prm.alpha;

    std::vector<Predictor> predictors;
    predictors.emplace_back(CustomPredictor{"h_i", [hi_tilde](std::span<const double> x) {
                                                return x[0] < 0.5 ? hi_tilde : 1.0;
                                            }});
    predictors.emplace_back(CustomPredictor{"h_j", [hj_tilde](std::span<const double> x) {
                                                return x[0] < 0.5 ? hj_tilde : 1.0;
                                            }});
    std::vector<Expert> experts;
    experts.push_back(Expert{0, 0, NeverAbstain{}});
    experts.push_back(Expert{1, 1, CustomAbstainer{"reject_x_star", [](std::span<const double> x, double) {
                                                       return x[0] < 0.5 ? 1.0 : -1.0;
                                                   }}});

    nlohmann::json params = {{"c", c},         {"p_star", p_star},         {"p", prm.p},
                             {"alpha", prm.alpha}, {"beta", prm.beta}, {"n", prm.n},
                             {"T", prm.horizon}, {"x_tilde", x_tilde},     {"x_star", x_star}};
    Construction out{ExpertPool(1, std::move(predictors), std::move(experts),
                                {{"generator", "construction"}, {"construction", "prop1"}}),
                     std::make_shared<TwoPointEnvironment>(prm.p, x_tilde, x_star, 1, 1),
                     AbstentionCost(c),
                     ClampedHingeLoss{},
                     {(c - prm.beta) * prm.p, c - prm.alpha * prm.p},
                     FeedbackGraph::complete(2),
                     params};
    return out;
}

Construction gap_construction(const std::vector<double>& means, double c)
{
    if (means.empty())
        throw std::invalid_argument("gap_construction: at least one mean is required");
    std::vector<Predictor> predictors;
    std::vector<Expert> experts;
    for (std::size_t j = 0; j < means.size(); ++j) {
        check_unit(means[j], "gap_construction: means");
        predictors.emplace_back(AxisAligned{0, means[j]});
        experts.push_back(Expert{j, j, NeverAbstain{}});
    }
    Construction out{ExpertPool(1, std::move(predictors), std::move(experts),
                                {{"generator", "construction"}, {"construction", "gap"}}),
                     std::make_shared<UnitIntervalPositive>(),
                     AbstentionCost(c),
                     ZeroOneLoss{},
                     means,
                     std::nullopt,
                     {{"type", "gap"}, {"means", means}, {"c", c}}};
    return out;
}

std::vector<std::string> validate_environment_spec(const nlohmann::json& spec)
{
    std::vector<std::string> errs;
    if (!spec.is_object()) {
        errs.push_back("environment: must be an object");
        return errs;
    }
    if (!spec.contains("type") || !spec["type"].is_string()) {
        errs.push_back("environment.type: missing or not a string");
        return errs;
    }
    const std::string type = spec["type"].get<std::string>();
    auto number_in = [&](const char* key, double lo, double hi, bool open) {
        if (!spec.contains(key))
            return;
        const auto& v = spec[key];
        const bool ok = v.is_number() &&
                        (open ? (v.get<double>() > lo && v.get<double>() < hi)
                              : (v.get<double>() >= lo && v.get<double>() <= hi));
        if (!ok)
            errs.push_back(std::string("environment.") + key + ": must be a number in " + (open ? "(" : "[") +
                           std::to_string(lo) + ", " + std::to_string(hi) + (open ? ")" : "]"));
    };
    if (type == "synthetic_uniform") {
    } else if (type == "csv") {
        if (!spec.contains("path") || !spec["path"].is_string())
            errs.push_back("environment.path: missing or not a string");
        if (spec.contains("header") && !spec["header"].is_boolean())
            errs.push_back("environment.header: must be a boolean");
        if (spec.contains("shuffle") && !spec["shuffle"].is_boolean())
            errs.push_back("environment.shuffle: must be a boolean");
        if (spec.contains("delimiter") &&
            (!spec["delimiter"].is_string() || spec["delimiter"].get<std::string>().size() != 1))
            errs.push_back("environment.delimiter: must be a single character");
    } else if (type == "bias") {
        number_in("left_mass", 0.0, 1.0, true);
        number_in("red_left", 0.0, 1.0, false);
        number_in("blue_left", 0.0, 1.0, false);
        number_in("blue_right", 0.0, 1.0, false);
    } else if (type == "prop1") {
        number_in("p_star", 0.0, 1.0, true);
        number_in("p", 0.5, 1.0, true);
    } else if (type == "gap") {
        if (!spec.contains("means") || !spec["means"].is_array() || spec["means"].empty())
            errs.push_back("environment.means: must be a non-empty array");
        else
            for (const auto& m : spec["means"])
                if (!m.is_number() || m.get<double>() < 0.0 || m.get<double>() > 1.0) {
                    errs.push_back("environment.means: entries must be numbers in [0, 1]");
                    break;
                }
    } else {
        errs.push_back("environment.type: unknown environment '" + type + "'");
    }
    return errs;
}

bool is_construction(const nlohmann::json& spec)
{
    const std::string type = spec.value("type", "");
    return type == "bias" || type == "prop1" || type == "gap";
}

std::shared_ptr<const Environment> make_environment(const nlohmann::json& spec)
{
    auto errs = validate_environment_spec(spec);
    if (!errs.empty())
        throw std::invalid_argument(errs.front());
    const std::string type = spec["type"].get<std::string>();
    if (type == "synthetic_uniform")
        return synthetic_uniform();
    if (type == "csv") {
        CsvOptions opt;
        opt.header = spec.value("header", true);
        opt.shuffle = spec.value("shuffle", true);
        opt.delimiter = spec.value("delimiter", std::string(",")).front();
        return csv_environment(spec["path"].get<std::string>(), opt);
    }
    throw std::invalid_argument("environment '" + type + "' is a construction; use make_construction");
}

Construction make_construction(const nlohmann::json& spec, double c)
{
    auto errs = validate_environment_spec(spec);
    if (!errs.empty())
        throw std::invalid_argument(errs.front());
    const std::string type = spec["type"].get<std::string>();
    if (type == "bias") {
        BiasLevels lv;
        lv.left_mass = spec.value("left_mass", lv.left_mass);
        lv.red_left = spec.value("red_left", lv.red_left);
        lv.blue_left = spec.value("blue_left", lv.blue_left);
        lv.blue_right = spec.value("blue_right", lv.blue_right);
        lv.c = c;
        return bias_construction(lv);
    }
    if (type == "prop1") {
        std::optional<double> p;
        if (spec.contains("p"))
            p = spec["p"].get<double>();
        return prop1_construction(c, spec.value("p_star", 0.5), p);
    }
    if (type == "gap")
        return gap_construction(spec["means"].get<std::vector<double>>(), c);
    throw std::invalid_argument("environment '" + type + "' is not a construction");
}

} // namespace abstain
