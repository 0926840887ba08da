#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "abstain/adversarial.hpp"
#include "abstain/environments.hpp"
#include "abstain/harness.hpp"
#include "abstain/stochastic.hpp"
#include "abstain/verify.hpp"

namespace fs = std::filesystem;
using namespace abstain;
using nlohmann::json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(double v)
{
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

double mean_of(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Context
{
    fs::path out;
    std::size_t jobs = 1;
    VerificationReport report;
    std::optional<ExperimentResult> desk; // criterion 7 runs, reused by 8 and 11
};

void record(Context& ctx, const std::string& id, bool passed, const std::string& summary, json details)
{
    std::cout << (passed ? "PASS" : "FAIL") << " criterion " << id << ": " << summary << std::endl;
    ctx.report.add(id, passed, summary, std::move(details));
}

// 1: EXP3-ABS against the adversarial bound
void criterion_1(Context& ctx)
{
    const auto start = clock_type::now();
    const json j = {{"environment", {{"type", "synthetic_uniform"}}},
                    {"experts", {{"generator", "hyperplane_annuli"}, {"n_predictors", 2}, {"radii_steps", 5}}},
                    {"algorithms", {{{"name", "exp3_abs"}}}},
                    {"c", 0.5},
                    {"T", 10000},
                    {"repetitions", {{"expert_sets", 1}, {"data_draws", 20}}},
                    {"seed", 101}};
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    RunOptions opt;
    opt.jobs = ctx.jobs;
    opt.write_files = false;
    const ExperimentResult res = run_experiment(cfg, opt);
    std::vector<double> regrets;
    for (const auto& m : res.runs)
        regrets.push_back(m.cum_loss.back() - m.cum_best_loss.back());
    const std::size_t k = make_instance(cfg, 0).pool.size();
    const TheoremBound bound = exp3abs_bound(k, 10000.0, 0.5);
    const double avg = mean_of(regrets);
    const double secs = seconds_since(start);
    const bool ok = k == 10 && avg <= bound.value && secs < 10.0;
    record(ctx, "1", ok,
           "mean R_T = " + fmt(avg) + " <= " + fmt(bound.value) + " over 20 seeds (K = " + std::to_string(k) +
               ", " + fmt(secs) + " s < 10 s)",
           {{"mean_regret", avg}, {"bound", bound.to_json()}, {"regrets", regrets}, {"seconds", secs}});
}

// 2: unbiasedness and second moment of the importance-weighted estimator
void criterion_2(Context& ctx)
{
    const auto start = clock_type::now();
    Rng fixtures(2);
    const std::size_t draws = 100000;
    std::size_t checks = 0, mean_fail = 0, second_fail = 0, var_fail = 0;
    double worst_z = 0.0;
    for (int f = 0; f < 50; ++f) {
        const std::size_t k = 2 + fixtures.index(7);
        std::vector<double> q(k);
        for (double& v : q)
            v = fixtures.uniform(0.05, 1.0);
        const double total = std::accumulate(q.begin(), q.end(), 0.0);
        for (double& v : q)
            v /= total;
        std::vector<std::uint8_t> abst(k);
        for (auto& a : abst)
            a = fixtures.bernoulli(0.4);
        const double c = fixtures.uniform();
        std::vector<double> losses(k);
        for (std::size_t i = 0; i < k; ++i)
            losses[i] = abst[i] ? c : fixtures.uniform();

        Rng rng(derive_seed(2, {static_cast<std::uint64_t>(f)}));
        std::vector<double> s1(k, 0.0), s2(k, 0.0), s1sq(k, 0.0), s2sq(k, 0.0);
        std::vector<std::optional<double>> observed(k);
        for (std::size_t n = 0; n < draws; ++n) {
            const std::size_t chosen = rng.discrete(q);
            for (std::size_t i = 0; i < k; ++i)
                observed[i] = (!abst[chosen] || abst[i]) ? std::optional<double>(losses[i]) : std::nullopt;
            const auto est = exp3abs_estimates(q, abst, chosen, observed);
            for (std::size_t j = 0; j < k; ++j) {
                const double e2 = est[j] * est[j];
                s1[j] += est[j];
                s1sq[j] += e2;
                s2[j] += e2;
                s2sq[j] += e2 * e2;
            }
        }
        double var_sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double nd = static_cast<double>(draws);
            const double p = exp3abs_observation_probability(q, abst, j);
            const double m1 = s1[j] / nd, m2 = s2[j] / nd;
            const double se1 = std::sqrt(std::max(s1sq[j] / nd - m1 * m1, 0.0) / nd);
            const double se2 = std::sqrt(std::max(s2sq[j] / nd - m2 * m2, 0.0) / nd);
            const double t1 = losses[j], t2 = losses[j] * losses[j] / p;
            const auto within = [](double m, double target, double se) {
                return se == 0.0 ? std::abs(m - target) <= 1e-9 * std::max(1.0, std::abs(target))
                                  : std::abs(m - target) <= 3.0 * se;
            };
            if (se1 > 0.0)
                worst_z = std::max(worst_z, std::abs(m1 - t1) / se1);
            mean_fail += within(m1, t1, se1) ? 0 : 1;
            second_fail += within(m2, t2, se2) ? 0 : 1;
            ++checks;
            var_sum += q[j] * t2;
        }
        var_fail += var_sum <= c * c + 1.0 ? 0 : 1;
    }
    const double secs = seconds_since(start);
    const bool ok = mean_fail == 0 && second_fail == 0 && var_fail == 0;
    record(ctx, "2", ok,
           std::to_string(checks) + " expert checks over 50 fixtures x 1e5 draws: " + std::to_string(mean_fail) +
               " mean and " + std::to_string(second_fail) + " second-moment deviations beyond 3 se, " +
               std::to_string(var_fail) + " variance-sum violations (max |z| " + fmt(worst_z) + ")",
           {{"checks", checks},
            {"mean_failures", mean_fail},
            {"second_moment_failures", second_fail},
            {"variance_sum_failures", var_fail},
            {"max_abs_z", worst_z},
            {"seconds", secs}});
}

// 3: surrogate dominance, equality, continuity and Lipschitz ratio
void criterion_3(Context& ctx)
{
    const int n = 200;
    const std::vector<double> cs{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> gammas{0.05, 0.1, 0.25, 0.5, 1.0};
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = -1.0 + 2.0 * i / (n - 1);
    std::size_t dominance = 0, equality = 0;
    double max_jump = 0.0, worst_ratio_excess = -1e300;
    for (double c : cs) {
        const AbstentionCost cost(c);
        for (double g : gammas) {
            const auto sur = [&](double a, double r) { return surrogate_abstention_loss(a, r, cost, g); };
            double max_ratio = 0.0;
            for (int ia = 0; ia < n; ++ia)
                for (int ir = 0; ir < n; ++ir) {
                    const double a = grid[ia], r = grid[ir];
                    const double s = sur(a, r);
                    const double l = abstention_loss(a, r, 1, cost, FGammaLoss{g});
                    dominance += s >= l ? 0 : 1;
                    if (std::abs(r) >= g)
                        equality += s == l ? 0 : 1;
                    if (ia + 1 < n)
                        max_ratio = std::max(max_ratio, std::abs(sur(grid[ia + 1], r) - s) / (grid[ia + 1] - a));
                    if (ir + 1 < n)
                        max_ratio = std::max(max_ratio, std::abs(sur(a, grid[ir + 1]) - s) / (grid[ir + 1] - r));
                    if (ia + 1 < n && ir + 1 < n)
                        max_ratio = std::max(max_ratio, std::abs(sur(grid[ia + 1], grid[ir + 1]) - s) /
                                                            std::hypot(grid[ia + 1] - a, grid[ir + 1] - r));
                }
            worst_ratio_excess = std::max(worst_ratio_excess, max_ratio - 2.0 / g);
            const double d = 1e-15;
            for (double a : grid) {
                for (double b : {-g, 0.0, g})
                    max_jump = std::max(max_jump, std::abs(sur(a, b + d) - sur(a, b - d)));
            }
            for (double r : grid)
                for (double b : {-g, g})
                    max_jump = std::max(max_jump, std::abs(sur(b + d, r) - sur(b - d, r)));
        }
    }
    const bool ok = dominance == 0 && equality == 0 && max_jump < 1e-12 && worst_ratio_excess <= 1e-9;
    record(ctx, "3", ok,
           "200x200x5x5 grid: " + std::to_string(dominance) + " dominance and " + std::to_string(equality) +
               " equality violations, max breakpoint jump " + fmt(max_jump) + ", max Lipschitz ratio - 2/gamma = " +
               fmt(worst_ratio_excess),
           {{"dominance_violations", dominance},
            {"equality_violations", equality},
            {"max_breakpoint_jump", max_jump},
            {"max_ratio_minus_bound", worst_ratio_excess}});
}

// 4: the bias problem on the constructed two-expert instance
void criterion_4(Context& ctx)
{
    const auto start = clock_type::now();
    const Construction con = bias_construction();
    const MeanEstimate means = analytic_means(con);
    const double delta = means.delta[0];
    const std::size_t T = 10000, seeds = 50;
    const FeedbackGraph sub = subset_graph(con.pool);
    const auto unsafe = run_construction(
        con, [](std::uint64_t) { return std::make_unique<UcbNt>(2, GraphSource::round_abstention()); }, T, seeds,
        4, ctx.jobs);
    const auto safe = run_construction(
        con, [&](std::uint64_t) { return std::make_unique<UcbNt>(2, GraphSource::fixed(sub)); }, T, seeds, 4,
        ctx.jobs);
    std::size_t biased = 0;
    std::vector<double> unsafe_rate, safe_rate;
    for (const auto& m : unsafe) {
        unsafe_rate.push_back(gap_regret(m.chosen, means.delta) / static_cast<double>(T));
        biased += unsafe_rate.back() >= 0.5 * delta ? 1 : 0;
    }
    for (const auto& m : safe)
        safe_rate.push_back(gap_regret(m.chosen, means.delta) / static_cast<double>(T));
    const double safe_mean = mean_of(safe_rate);
    const double secs = seconds_since(start);
    const bool unsafe_ok = biased >= 40;
    const bool safe_ok = safe_mean <= 0.1 * delta;
    const bool ok = unsafe_ok && safe_ok && secs < 5.0 && std::abs(delta - 0.1475) < 1e-12;
    record(ctx, "4", ok,
           "G_abs: " + std::to_string(biased) + "/50 seeds with R_T/T >= 0.5 Delta (need 40) [" +
               (unsafe_ok ? "ok" : "not met") + "]; G_sub: mean R_T/T = " + fmt(safe_mean) + " <= " + fmt(0.1 * delta) +
               " [" + (safe_ok ? "ok" : "not met") + "]; Delta = " + fmt(delta) + ", " + fmt(secs) + " s",
           {{"delta", delta},
            {"mu", means.mu},
            {"unsafe_biased_seeds", biased},
            {"unsafe_mean_rate", mean_of(unsafe_rate)},
            {"safe_mean_rate", safe_mean},
            {"unsafe_ok", unsafe_ok},
            {"safe_ok", safe_ok},
            {"seconds", secs}});
}

// 5: linear regret of bias-unsafe UCB-NT on the two-point construction
void criterion_5(Context& ctx)
{
    const double p_star = 0.5;
    const Construction con = prop1_construction(0.4, p_star);
    const MeanEstimate means = analytic_means(con);
    const std::size_t T = con.parameters["T"].get<std::size_t>();
    const auto runs = run_construction(
        con, [](std::uint64_t) { return std::make_unique<UcbNt>(2, GraphSource::round_abstention()); }, T, 200, 5,
        ctx.jobs);
    const double target = 0.9 * static_cast<double>(T) * (means.mu[1] - means.mu[0]);
    std::size_t locked = 0;
    for (const auto& m : runs)
        locked += gap_regret(m.chosen, means.delta) >= target * (1.0 - 1e-12) ? 1 : 0;
    const double frac = static_cast<double>(locked) / static_cast<double>(runs.size());
    const bool ok = means.mu[0] < means.mu[1] && frac >= p_star - 0.1;
    record(ctx, "5", ok,
           "fraction of 200 runs with regret >= 0.9 T (mu_j - mu_i) = " + fmt(frac) + " >= " + fmt(p_star - 0.1) +
               " (T = " + std::to_string(T) + ", mu = " + fmt(means.mu[0]) + ", " + fmt(means.mu[1]) + ")",
           {{"fraction", frac}, {"locked", locked}, {"parameters", con.parameters}, {"mu", means.mu}});
}

// 6: UCB-NT pseudo-regret against the partition bound on a complete graph
void criterion_6(Context& ctx)
{
    const auto start = clock_type::now();
    const Construction con = gap_construction({0.3, 0.4, 0.5, 0.6});
    const MeanEstimate means = analytic_means(con);
    const std::size_t T = 20000;
    const FeedbackGraph full = FeedbackGraph::complete(4);
    const auto runs = run_construction(
        con, [&](std::uint64_t) { return std::make_unique<UcbNt>(4, GraphSource::fixed(full)); }, T, 50, 6,
        ctx.jobs);
    std::vector<double> regrets;
    for (const auto& m : runs)
        regrets.push_back(pseudo_regret(m.loss, means.mu_star));
    const std::vector<FeedbackGraph> graphs{full};
    const TheoremBound bound = partition_bound(graphs, means.delta, T);
    const double avg = mean_of(regrets);
    const double secs = seconds_since(start);
    const bool ok = avg <= bound.value && secs < 10.0;
    record(ctx, "6", ok,
           "mean pseudo-regret " + fmt(avg) + " <= partition bound " + fmt(bound.value) + " (" + fmt(secs) + " s < 10 s)",
           {{"mean_pseudo_regret", avg}, {"bound", bound.to_json()}, {"seconds", secs}});
}

json desk_config()
{
    return {{"environment", {{"type", "synthetic_uniform"}}},
            {"experts", {{"generator", "hyperplane_annuli"}, {"n_predictors", 10}, {"radii_steps", 20}}},
            {"algorithms", {{{"name", "fs"}}, {{"name", "ucb_gt"}}, {{"name", "ucb_nt"}}, {{"name", "ucb"}}}},
            {"c", 0.2},
            {"T", 10000},
            {"repetitions", {{"expert_sets", 3}, {"data_draws", 3}}},
            {"seed", 7}};
}

// 7: qualitative ordering FS <= UCB-GT <= UCB-NT(G_sub) <= UCB
void criterion_7(Context& ctx)
{
    const auto start = clock_type::now();
    const ExperimentConfig cfg = ExperimentConfig::from_json(desk_config());
    RunOptions opt;
    opt.jobs = ctx.jobs;
    opt.output = (ctx.out / "desk").string();
    ctx.desk = run_experiment(cfg, opt);
    const double secs = seconds_since(start);
    std::map<std::string, std::pair<double, double>> fin;
    for (const auto& a : ctx.desk->aggregates)
        fin[a.algorithm] = {a.avg_regret.mean.back(), a.avg_regret.std_pooled.back()};
    const std::vector<std::string> order{"fs", "ucb_gt", "ucb_nt", "ucb"};
    bool ok = secs < 120.0;
    std::string summary;
    json pairs = json::array();
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto [ma, sa] = fin[order[i]];
        const auto [mb, sb] = fin[order[i + 1]];
        const double slack = std::sqrt((sa * sa + sb * sb) / 2.0);
        const bool holds = ma <= mb + slack;
        ok = ok && holds;
        summary += order[i] + " " + fmt(ma) + (holds ? " <= " : " > ") + order[i + 1] + " " + fmt(mb) + " (+" +
                   fmt(slack) + "); ";
        pairs.push_back({{"a", order[i]}, {"b", order[i + 1]}, {"a_mean", ma}, {"b_mean", mb}, {"slack", slack},
                         {"holds", holds}});
    }
    summary += fmt(secs) + " s < 120 s";
    record(ctx, "7", ok, summary, {{"pairs", pairs}, {"seconds", secs}});
}

// 8: UCB-GT observes at least the subset-graph neighborhood and more edges overall
void criterion_8(Context& ctx)
{
    if (!ctx.desk) {
        record(ctx, "8", false, "criterion 7 runs unavailable", {});
        return;
    }
    const ExperimentConfig& cfg = ctx.desk->config;
    std::vector<FeedbackGraph> subs;
    for (std::size_t s = 0; s < cfg.expert_sets; ++s)
        subs.push_back(subset_graph(make_instance(cfg, s).pool));
    std::size_t violations = 0, checked = 0;
    std::uint64_t gt_edges = 0, nt_edges = 0;
    for (const auto& m : ctx.desk->runs) {
        if (m.algorithm == "ucb_gt") {
            const FeedbackGraph& g = subs[m.expert_set];
            for (std::size_t t = 100; t < m.rounds(); ++t) {
                ++checked;
                violations += m.updated[t] >= g.out(m.chosen[t]).size() ? 0 : 1;
            }
            gt_edges += std::accumulate(m.edges.begin(), m.edges.end(), std::uint64_t{0});
        } else if (m.algorithm == "ucb_nt") {
            nt_edges += std::accumulate(m.edges.begin(), m.edges.end(), std::uint64_t{0});
        }
    }
    const bool ok = checked > 0 && violations == 0 && gt_edges > nt_edges;
    record(ctx, "8", ok,
           std::to_string(violations) + " of " + std::to_string(checked) +
               " rounds with |updated| < |G_sub out-neighborhood|; cumulative edges UCB-GT " +
               std::to_string(gt_edges) + " vs UCB-NT " + std::to_string(nt_edges),
           {{"violations", violations}, {"checked", checked}, {"gt_edges", gt_edges}, {"nt_edges", nt_edges}});
}

// 9: ContEXP3-ABS ball count and sublinear regret
void criterion_9(Context& ctx)
{
    const auto start = clock_type::now();
    const double gamma = 0.5;
    const AbstentionCost c(0.3);
    const auto env = synthetic_uniform();
    std::vector<Predictor> preds;
    for (double k : {1.0, 2.0, 4.0, 8.0})
        preds.push_back(Hyperplane{{k, k}});
    std::vector<Expert> experts;
    for (std::size_t p = 0; p < preds.size(); ++p)
        experts.push_back(Expert{p, p, NeverAbstain{}});
    experts.push_back(Expert{preds.size(), 0, ConfidenceThreshold{2.0}});
    const ExpertPool comparators(2, preds, experts);
    const BaseLoss base = FGammaLoss{gamma};

    json per_T = json::array();
    std::vector<double> rate;
    bool balls_ok = true;
    for (std::size_t T : {1000u, 10000u}) {
        const ContExp3Params prm = tuned_params_contexp3(T, 2, gamma);
        const double ball_bound = cube_packing_constant(2) / (prm.eps * prm.eps);
        std::vector<double> rates(10);
        std::vector<std::size_t> balls(10);
        for (std::size_t s = 0; s < 10; ++s) {
            const auto stream = draw_stream(*env, T, stream_seed(9, 0, s));
            const BestInClass best = best_in_class(comparators, stream, c, base);
            ContExp3Abs learner(prm, c, learner_seed(9, 0, s, "cont_exp3_abs"));
            double total = 0.0;
            for (const auto& z : stream) {
                const ContStep st = learner.step(z.x, [&] { return z.y; });
                total += abstention_loss(st.h, st.r, z.y, c, base);
            }
            rates[s] = (total - best.totals[best.expert]) / static_cast<double>(T);
            balls[s] = learner.ball_count();
            balls_ok = balls_ok && static_cast<double>(balls[s]) <= ball_bound;
        }
        rate.push_back(mean_of(rates));
        per_T.push_back({{"T", T}, {"eps", prm.eps}, {"eta", prm.eta}, {"ball_bound", ball_bound},
                         {"max_balls", *std::max_element(balls.begin(), balls.end())}, {"mean_rate", rate.back()}});
    }
    const double secs = seconds_since(start);
    const bool ok = balls_ok && rate[1] <= 0.6 * rate[0] && secs < 60.0;
    record(ctx, "9", ok,
           "R_T/T = " + fmt(rate[0]) + " at T=1e3, " + fmt(rate[1]) + " at T=1e4 (need <= " + fmt(0.6 * rate[0]) +
               "); balls within C_X eps^-2: " + (balls_ok ? "yes" : "no") + "; " + fmt(secs) + " s < 60 s",
           {{"runs", per_T}, {"seconds", secs}});
}

// 10: full-scale configuration
void criterion_10(Context& ctx)
{
    const auto start = clock_type::now();
    json j = desk_config();
    j["experts"]["n_predictors"] = 100;
    j["repetitions"] = {{"expert_sets", 5}, {"data_draws", 5}};
    j["seed"] = 10;
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    RunOptions opt;
    opt.jobs = 8;
    opt.output = (ctx.out / "full_scale").string();
    const ExperimentResult res = run_experiment(cfg, opt);
    const double secs = seconds_since(start);
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    const double peak_gb = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
    const std::size_t k = make_instance(cfg, 0).pool.size();
    const bool ok = k == 2000 && res.runs.size() == 100 && secs <= 1800.0 && peak_gb < 4.0;
    record(ctx, "10", ok,
           "K = " + std::to_string(k) + ", " + std::to_string(res.runs.size()) + " runs with --jobs 8 in " + fmt(secs) +
               " s (limit 1800 s), peak RSS " + fmt(peak_gb) + " GB (limit 4 GB), on " +
               std::to_string(std::thread::hardware_concurrency()) + " hardware thread(s)",
           {{"K", k},
            {"runs", res.runs.size()},
            {"seconds", secs},
            {"peak_rss_gb", peak_gb},
            {"hardware_threads", std::thread::hardware_concurrency()}});
}

// 11: same master seed, different job count, byte-identical metric files
void criterion_11(Context& ctx)
{
    if (!ctx.desk) {
        record(ctx, "11", false, "criterion 7 runs unavailable", {});
        return;
    }
    RunOptions opt;
    opt.jobs = ctx.jobs == 1 ? 3 : 1;
    opt.output = (ctx.out / "desk_repeat").string();
    run_experiment(ctx.desk->config, opt);
    const fs::path a = ctx.out / "desk", b = ctx.out / "desk_repeat";
    std::size_t compared = 0, differing = 0;
    std::vector<std::string> diffs;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv")
            continue;
        const fs::path rel = fs::relative(entry.path(), a);
        ++compared;
        if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) {
            ++differing;
            diffs.push_back(rel.string());
        }
    }
    const bool ok = compared >= 36 && differing == 0;
    record(ctx, "11", ok,
           std::to_string(compared) + " metric CSVs compared after a rerun with --jobs " + std::to_string(opt.jobs) +
               ", " + std::to_string(differing) + " differ",
           {{"compared", compared}, {"differing", diffs}});
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::string out = "acceptance_output";
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<int> only;
    app.add_option("--out", out, "scratch directory for run outputs");
    app.add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "run a subset of criteria");
    CLI11_PARSE(app, argc, argv);

    Context ctx;
    ctx.out = out;
    ctx.jobs = jobs;
    fs::remove_all(ctx.out);
    fs::create_directories(ctx.out);
    const std::vector<std::function<void(Context&)>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                              criterion_5, criterion_6, criterion_7, criterion_8,
                                                              criterion_9, criterion_10, criterion_11};
    std::set<int> selected(only.begin(), only.end());
    if (selected.count(8) || selected.count(11))
        selected.insert(7);
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id))
            continue;
        try {
            criteria[i](ctx);
        } catch (const std::exception& e) {
            record(ctx, std::to_string(id), false, std::string("threw: ") + e.what(), {});
        }
    }
    ctx.report.write(ctx.out / "acceptance_report.json");
    std::size_t passed = 0;
    for (const auto& e : ctx.report.entries())
        passed += e["passed"].get<bool>() ? 1 : 0;
    std::cout << passed << "/" << ctx.report.size() << " criteria passed" << std::endl;
    return ctx.report.all_passed() ? 0 : 1;
}
