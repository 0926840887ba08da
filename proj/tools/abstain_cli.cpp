#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "abstain/environments.hpp"
#include "abstain/harness.hpp"
#include "abstain/stochastic.hpp"
#include "abstain/verify.hpp"

namespace fs = std::filesystem;
using namespace abstain;

namespace {

struct GlobalOptions
{
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::size_t jobs = 1;
};

fs::path output_dir(const GlobalOptions& g)
{
    return g.out ? fs::path(*g.out) : fs::path(default_output_dir());
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
}

int cmd_run(const std::string& config, const GlobalOptions& g, bool verbose)
{
    ExperimentConfig cfg = load_config(config);
    RunOptions opt;
    opt.jobs = g.jobs;
    opt.seed = g.seed;
    opt.output = g.out;
    opt.verbose = verbose;
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult res = run_experiment(cfg, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "wrote " << res.runs.size() << " runs to " << res.output.string() << " in " << secs << " s\n";
    for (const auto& a : res.aggregates) {
        const std::size_t last = a.avg_regret.mean.size() - 1;
        std::cout << "  " << a.algorithm << ": final R_T/T = " << a.avg_regret.mean[last]
                  << " (std pooled " << a.avg_regret.std_pooled[last] << "), abstained "
                  << a.frac_abstain.mean[last] << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& config)
{
    std::ifstream in(config);
    if (!in) {
        std::cerr << "error: cannot open '" << config << "'\n";
        return 1;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: " << config << ": JSON parse error: " << e.what() << '\n';
        return 1;
    }
    const auto errs = validate_config(j);
    if (!errs.empty()) {
        for (const auto& e : errs)
            std::cerr << "error: " << e << '\n';
        return 1;
    }
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    std::cout << "ok: " << cfg.algorithms.size() << " algorithm(s), T = " << cfg.horizon << ", "
              << cfg.expert_sets << "x" << cfg.data_draws << " repetitions, config hash " << cfg.hash() << '\n';
    return 0;
}

// mean over runs of (sum_{s<=t} Delta_{I_s}) / t
std::vector<double> mean_gap_curve(const std::vector<RunMetrics>& runs, const std::vector<double>& deltas)
{
    const std::size_t T = runs.front().rounds();
    std::vector<double> curve(T, 0.0);
    for (const auto& r : runs) {
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            acc += deltas[r.chosen[t]];
            curve[t] += acc / static_cast<double>(t + 1);
        }
    }
    for (double& v : curve)
        v /= static_cast<double>(runs.size());
    return curve;
}

int cmd_demo(const std::string& which, const GlobalOptions& g, std::size_t horizon, std::size_t seeds, double p_star)
{
    const std::uint64_t seed = g.seed.value_or(1);
    if (which == "bias") {
        const Construction con = bias_construction();
        const MeanEstimate means = analytic_means(con);
        const std::size_t k = con.pool.size();
        const FeedbackGraph sub = subset_graph(con.pool);
        auto unsafe = run_construction(
            con, [&](std::uint64_t) { return std::make_unique<UcbNt>(k, GraphSource::round_abstention()); },
            horizon, seeds, seed, g.jobs);
        auto safe = run_construction(
            con, [&](std::uint64_t) { return std::make_unique<UcbNt>(k, GraphSource::fixed(sub)); }, horizon, seeds,
            seed, g.jobs);
        const auto a = mean_gap_curve(unsafe, means.delta);
        const auto b = mean_gap_curve(safe, means.delta);
        std::string csv = "t,ucb_nt_abstention_graph,ucb_nt_subset_graph\n";
        for (std::size_t t = 0; t < a.size(); ++t)
            csv += std::to_string(t + 1) + "," + format_number(a[t]) + "," + format_number(b[t]) + "\n";
        const fs::path path = output_dir(g) / "demo_bias.csv";
        write_file(path, csv);
        std::cout << "mu = (" << means.mu[0] << ", " << means.mu[1] << "), gap " << means.delta[0] << '\n';
        std::cout << "final gap regret / T over " << seeds << " seeds: abstention graph " << a.back()
                  << ", subset graph " << b.back() << '\n';
        std::cout << "wrote " << path.string() << '\n';
        return 0;
    }
    if (which == "prop1") {
        const Construction con = prop1_construction(0.4, p_star);
        const auto& prm = con.parameters;
        const MeanEstimate means = analytic_means(con);
        const std::size_t T = prm["T"].get<std::size_t>();
        auto runs = run_construction(
            con, [&](std::uint64_t) { return std::make_unique<UcbNt>(2, GraphSource::round_abstention()); }, T,
            seeds, seed, g.jobs);
        const double target = 0.9 * static_cast<double>(T) * (means.mu[1] - means.mu[0]);
        std::size_t locked = 0;
        std::string csv = "run,gap_regret,locked\n";
        for (const auto& r : runs) {
            const double reg = gap_regret(r.chosen, means.delta);
            const bool lock = reg >= target * (1.0 - 1e-12);
            locked += lock ? 1 : 0;
            csv += std::to_string(r.data_draw) + "," + format_number(reg) + "," + (lock ? "1" : "0") + "\n";
        }
        const fs::path path = output_dir(g) / "demo_prop1.csv";
        write_file(path, csv);
        std::cout << "c = " << prm["c"] << ", p* = " << prm["p_star"] << ", p = " << prm["p"] << ", alpha = "
                  << prm["alpha"] << ", beta = " << prm["beta"] << ", n = " << prm["n"] << ", T = " << T << '\n';
        std::cout << "mu_i = " << means.mu[0] << ", mu_j = " << means.mu[1] << '\n';
        std::cout << "runs with regret >= 0.9 T (mu_j - mu_i): " << locked << "/" << runs.size() << '\n';
        std::cout << "wrote " << path.string() << '\n';
        return 0;
    }
    std::cerr << "error: unknown demo '" << which << "' (expected bias or prop1)\n";
    return 2;
}

int cmd_bench(const GlobalOptions& g, std::size_t predictors, std::size_t bands, std::size_t horizon)
{
    nlohmann::json j = {{"environment", {{"type", "synthetic_uniform"}}},
                        {"experts", {{"generator", "hyperplane_annuli"}, {"n_predictors", predictors}, {"radii_steps", bands}}},
                        {"algorithms", {{{"name", "fs"}}, {{"name", "ucb_gt"}}, {{"name", "ucb_nt"}}, {{"name", "ucb"}}}},
                        {"c", 0.2},
                        {"T", horizon},
                        {"seed", g.seed.value_or(1)}};
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    std::cout << "K = " << predictors * bands << ", T = " << horizon << '\n';
    for (const auto& alg : cfg.algorithms) {
        ExperimentConfig one = cfg;
        one.algorithms = {alg};
        RunOptions opt;
        opt.write_files = false;
        const auto start = std::chrono::steady_clock::now();
        const auto res = run_experiment(one, opt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "  " << alg.id << ": " << secs << " s (" << static_cast<double>(horizon) / secs
                  << " rounds/s), R_T/T = " << res.runs.front().avg_regret.back() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Online learning with abstention: experiments and demos"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    std::string out;
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
    auto* out_opt = app.add_option("--out", out, "output directory (default: $" + std::string(kOutputDirEnv) + " or ./results)");
    app.add_option("--jobs", g.jobs, "number of concurrent runs")->check(CLI::PositiveNumber);

    std::string config;
    bool verbose = false;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config, "JSON config file")->required();
    run->add_flag("-v,--verbose", verbose, "log each finished run");
    run->fallthrough();

    std::string dir;
    auto* aggregate = app.add_subcommand("aggregate", "recompute aggregate curves of an output directory");
    aggregate->add_option("dir", dir, "output directory of a previous run")->required();
    aggregate->fallthrough();

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config, "JSON config file")->required();
    validate->fallthrough();

    std::string which;
    std::size_t horizon = 10000, seeds = 50;
    double p_star = 0.5;
    auto* demo = app.add_subcommand("demo", "bias-problem and linear-regret demonstrations");
    demo->add_option("which", which, "bias or prop1")->required()->check(CLI::IsMember({"bias", "prop1"}));
    demo->add_option("--T", horizon, "rounds (bias demo)");
    demo->add_option("--runs", seeds, "independent runs");
    demo->add_option("--p-star", p_star, "target lock-in probability (prop1 demo)");
    demo->fallthrough();

    std::size_t predictors = 100, bands = 20, bench_t = 2000;
    auto* bench = app.add_subcommand("bench", "time one run of each stochastic learner");
    bench->add_option("--predictors", predictors, "hyperplane predictors");
    bench->add_option("--bands", bands, "annulus bands per predictor");
    bench->add_option("--T", bench_t, "rounds");
    bench->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    if (*seed_opt)
        g.seed = seed;
    if (*out_opt)
        g.out = out;

    try {
        if (*run)
            return cmd_run(config, g, verbose);
        if (*aggregate) {
            const auto aggs = aggregate_directory(dir);
            std::cout << "aggregated " << aggs.size() << " algorithm(s) in " << dir << '\n';
            return 0;
        }
        if (*validate)
            return cmd_validate(config);
        if (*demo)
            return cmd_demo(which, g, horizon, seeds, p_star);
        if (*bench)
            return cmd_bench(g, predictors, bands, bench_t);
    } catch (const ConfigError& e) {
        for (const auto& msg : e.errors())
            std::cerr << "error: " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
