#include "abstain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "abstain/adversarial.hpp"
#include "abstain/feedback.hpp"
#include "abstain/rng.hpp"
#include "abstain/stochastic.hpp"

namespace fs = std::filesystem;

namespace abstain {

namespace {

const std::set<std::string> kAlgorithms = {"ucb", "ucb_nt", "ucb_gt", "fs", "exp3_abs", "cont_exp3_abs"};
const std::set<std::string> kGraphs = {"subset", "subset_mc", "abstention", "complete", "self_loops", "offending"};

std::string join_errors(const std::vector<std::string>& errors)
{
    std::string msg = "invalid config:";
    for (const auto& e : errors)
        msg += "\n  " + e;
    return msg;
}

std::string default_id(const std::string& name, const std::string& graph)
{
    if (name == "ucb_nt" && graph != "subset")
        return name + "_" + graph;
    return name;
}

void validate_algorithm(const nlohmann::json& a, std::size_t idx, std::vector<std::string>& errs)
{
    const std::string where = "algorithms[" + std::to_string(idx) + "]";
    if (!a.is_object()) {
        errs.push_back(where + ": must be an object");
        return;
    }
    if (!a.contains("name") || !a["name"].is_string()) {
        errs.push_back(where + ".name: missing or not a string");
        return;
    }
    const std::string name = a["name"].get<std::string>();
    if (!kAlgorithms.count(name))
        errs.push_back(where + ".name: unknown algorithm '" + name + "'");
    auto positive = [&](const char* key) {
        if (a.contains(key) && (!a[key].is_number() || !(a[key].get<double>() > 0.0)))
            errs.push_back(where + "." + key + ": must be a positive number");
    };
    positive("beta");
    positive("eta");
    positive("eps");
    if (a.contains("gamma") &&
        (!a["gamma"].is_number() || !(a["gamma"].get<double>() > 0.0 && a["gamma"].get<double>() <= 1.0)))
        errs.push_back(where + ".gamma: must be a number in (0, 1]");
    if (a.contains("graph")) {
        if (!a["graph"].is_string() || !kGraphs.count(a["graph"].get<std::string>()))
            errs.push_back(where + ".graph: must be one of subset, subset_mc, abstention, complete, self_loops, offending");
        else if (name != "ucb_nt")
            errs.push_back(where + ".graph: only ucb_nt takes a graph source");
    }
    if (a.contains("mc_probes") && (!a["mc_probes"].is_number_integer() || a["mc_probes"].get<long long>() < 1))
        errs.push_back(where + ".mc_probes: must be a positive integer");
    if (a.contains("id") && (!a["id"].is_string() || a["id"].get<std::string>().empty()))
        errs.push_back(where + ".id: must be a non-empty string");
}

class ContExp3AbsLearner : public Learner
{
public:
    ContExp3AbsLearner(ContExp3Params params, AbstentionCost c, std::uint64_t seed)
        : cont_(params, c, seed), c_(c)
    {
        std::uint64_t b = 0;
        for (std::size_t k = 0; k < cont_.grid().size(); ++k)
            b += cont_.grid().abstains(k) ? 1 : 0;
        abstaining_ = b;
    }

    std::string name() const override { return "cont_exp3_abs"; }
    StepOutcome step(const RoundFeedback& round) override
    {
        const ContStep s = cont_.step(round.input(), [&] { return round.label(); });
        const std::uint64_t n = cont_.grid().size();
        StepOutcome out;
        out.chosen = s.action;
        out.abstained = s.abstained;
        out.loss = abstention_loss(s.h, s.r, round.label(), c_, FGammaLoss{cont_.params().gamma});
        out.updated = s.abstained ? abstaining_ : n;
        out.edges = (n - abstaining_) * n + abstaining_ * abstaining_;
        return out;
    }
    nlohmann::json snapshot() const override { return cont_.snapshot(); }

private:
    ContExp3Abs cont_;
    AbstentionCost c_;
    std::uint64_t abstaining_ = 0;
};

double sample_std(std::span<const double> v, double mean)
{
    if (v.size() < 2)
        return 0.0;
    double s = 0.0;
    for (double x : v)
        s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string hex64(std::uint64_t h)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    return out;
}

double parse_double(const std::string& s)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("metrics csv: bad number '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("metrics csv: bad integer '" + s + "'");
    return v;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

fs::path run_file(const std::string& algorithm, std::size_t set, std::size_t draw)
{
    return fs::path("runs") / algorithm / ("set" + std::to_string(set) + "_draw" + std::to_string(draw) + ".csv");
}

std::vector<AggregateCurves> aggregate_and_write(const std::vector<std::string>& algorithms,
                                                 const std::vector<RunMetrics>& runs, const fs::path& out,
                                                 bool write_files)
{
    std::vector<AggregateCurves> aggs;
    for (const auto& alg : algorithms) {
        std::vector<const RunMetrics*> mine;
        for (const auto& r : runs)
            if (r.algorithm == alg)
                mine.push_back(&r);
        aggs.push_back(aggregate_runs(alg, mine));
    }
    if (!write_files)
        return aggs;
    std::string summary =
        "algorithm,runs,final_avg_regret_mean,final_avg_regret_std_sets,final_avg_regret_std_pooled,"
        "final_frac_abstain_mean,final_edges_mean,total_edges_mean\n";
    for (std::size_t a = 0; a < aggs.size(); ++a) {
        const auto& ag = aggs[a];
        write_aggregate_csv(ag, out / "aggregate" / (ag.algorithm + ".csv"));
        double total_edges = 0.0;
        std::size_t n = 0;
        for (const auto& r : runs)
            if (r.algorithm == ag.algorithm) {
                double s = 0.0;
                for (auto e : r.edges)
                    s += static_cast<double>(e);
                total_edges += s;
                ++n;
            }
        const std::size_t last = ag.avg_regret.mean.empty() ? 0 : ag.avg_regret.mean.size() - 1;
        summary += ag.algorithm + "," + std::to_string(ag.runs) + "," + format_number(ag.avg_regret.mean[last]) + "," +
                   format_number(ag.avg_regret.std_sets[last]) + "," + format_number(ag.avg_regret.std_pooled[last]) +
                   "," + format_number(ag.frac_abstain.mean[last]) + "," + format_number(ag.edges.mean[last]) + "," +
                   format_number(n ? total_edges / static_cast<double>(n) : 0.0) + "\n";
    }
    write_text(out / "summary.csv", summary);
    return aggs;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument(join_errors(errors)), errors_(std::move(errors))
{
}

nlohmann::json AlgorithmSpec::to_json() const
{
    nlohmann::json j = {{"id", id}, {"name", name}};
    if (name == "ucb" || name == "ucb_nt" || name == "ucb_gt")
        j["beta"] = beta;
    if (name == "ucb_nt") {
        j["graph"] = graph;
        if (graph == "subset_mc")
            j["mc_probes"] = mc_probes;
    }
    if (eta)
        j["eta"] = *eta;
    if (name == "cont_exp3_abs") {
        j["gamma"] = gamma;
        if (eps)
            j["eps"] = *eps;
    }
    return j;
}

std::vector<std::string> validate_config(const nlohmann::json& j)
{
    std::vector<std::string> errs;
    if (!j.is_object()) {
        errs.push_back("config: must be a JSON object");
        return errs;
    }
    if (j.contains("schema_version") &&
        (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion))
        errs.push_back("schema_version: unsupported (expected " + std::to_string(kSchemaVersion) + ")");

    if (!j.contains("c"))
        errs.push_back("c: missing (abstention cost in [0, 1])");
    else if (!j["c"].is_number() || !(j["c"].get<double>() >= 0.0 && j["c"].get<double>() <= 1.0))
        errs.push_back("c: must be a number in [0, 1]");

    if (!j.contains("T"))
        errs.push_back("T: missing (number of rounds)");
    else if (!j["T"].is_number_integer() || j["T"].get<long long>() < 1)
        errs.push_back("T: must be an integer >= 1");

    if (j.contains("seed") &&
        !(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)))
        errs.push_back("seed: must be a nonnegative integer");
    if (j.contains("output") && !j["output"].is_string())
        errs.push_back("output: must be a string");

    if (j.contains("repetitions")) {
        const auto& r = j["repetitions"];
        if (!r.is_object()) {
            errs.push_back("repetitions: must be an object with expert_sets and data_draws");
        } else {
            for (const char* key : {"expert_sets", "data_draws"})
                if (r.contains(key) && (!r[key].is_number_integer() || r[key].get<long long>() < 1))
                    errs.push_back(std::string("repetitions.") + key + ": must be an integer >= 1");
        }
    }

    if (j.contains("base_loss")) {
        try {
            base_loss_from_json(j["base_loss"]);
        } catch (const std::exception& e) {
            errs.push_back(std::string("base_loss: ") + e.what());
        }
    }

    bool construction = false;
    if (!j.contains("environment")) {
        errs.push_back("environment: missing");
    } else {
        for (auto& e : validate_environment_spec(j["environment"]))
            errs.push_back(e);
        construction = j["environment"].is_object() && is_construction(j["environment"]);
    }
    if (!construction) {
        if (!j.contains("experts"))
            errs.push_back("experts: missing");
        else
            for (auto& e : validate_pool_spec(j["experts"]))
                errs.push_back(e);
        if (j.contains("experts") && j["experts"].is_object() && j["experts"].value("generator", "") == "construction")
            errs.push_back("experts.generator: 'construction' requires a construction environment");
    }

    if (!j.contains("algorithms") || !j["algorithms"].is_array() || j["algorithms"].empty()) {
        errs.push_back("algorithms: missing or empty");
    } else {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < j["algorithms"].size(); ++i) {
            const auto& a = j["algorithms"][i];
            validate_algorithm(a, i, errs);
            if (a.is_object() && a.contains("name") && a["name"].is_string()) {
                std::string id = a.contains("id") && a["id"].is_string()
                                     ? a["id"].get<std::string>()
                                     : default_id(a["name"].get<std::string>(), a.value("graph", "subset"));
                if (!ids.insert(id).second)
                    errs.push_back("algorithms[" + std::to_string(i) + "].id: duplicate algorithm id '" + id + "'");
            }
        }
    }
    return errs;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    auto errs = validate_config(j);
    if (!errs.empty())
        throw ConfigError(std::move(errs));
    ExperimentConfig cfg;
    cfg.schema_version = j.value("schema_version", kSchemaVersion);
    cfg.environment = j["environment"];
    cfg.experts = j.value("experts", nlohmann::json{{"generator", "construction"}});
    if (is_construction(cfg.environment))
        cfg.experts = {{"generator", "construction"}};
    cfg.c = j["c"].get<double>();
    cfg.horizon = j["T"].get<std::size_t>();
    if (j.contains("repetitions")) {
        cfg.expert_sets = j["repetitions"].value("expert_sets", std::size_t{1});
        cfg.data_draws = j["repetitions"].value("data_draws", std::size_t{1});
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.output = j.value("output", std::string());
    if (j.contains("base_loss"))
        cfg.base = base_loss_from_json(j["base_loss"]);
    for (const auto& a : j["algorithms"]) {
        AlgorithmSpec s;
        s.name = a["name"].get<std::string>();
        s.graph = a.value("graph", std::string("subset"));
        s.beta = a.value("beta", 2.5);
        if (a.contains("eta"))
            s.eta = a["eta"].get<double>();
        s.gamma = a.value("gamma", 0.5);
        if (a.contains("eps"))
            s.eps = a["eps"].get<double>();
        s.mc_probes = a.value("mc_probes", std::size_t{100000});
        s.id = a.value("id", default_id(s.name, s.graph));
        cfg.algorithms.push_back(std::move(s));
    }
    return cfg;
}

nlohmann::json ExperimentConfig::to_json() const
{
    nlohmann::json algs = nlohmann::json::array();
    for (const auto& a : algorithms)
        algs.push_back(a.to_json());
    nlohmann::json j = {{"schema_version", schema_version},
                        {"environment", environment},
                        {"experts", experts},
                        {"algorithms", algs},
                        {"c", c},
                        {"T", horizon},
                        {"repetitions", {{"expert_sets", expert_sets}, {"data_draws", data_draws}}},
                        {"seed", seed},
                        {"base_loss", abstain::to_json(base)}};
    if (!output.empty())
        j["output"] = output;
    return j;
}

std::string ExperimentConfig::hash() const
{
    nlohmann::json j = to_json();
    j.erase("output");
    return hex64(hash_string(j.dump()));
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("config: JSON parse error: ") + e.what()});
    }
    return ExperimentConfig::from_json(j);
}

std::uint64_t pool_seed(std::uint64_t master, std::size_t set)
{
    return derive_seed(master, {1, set});
}

std::uint64_t stream_seed(std::uint64_t master, std::size_t set, std::size_t draw)
{
    return derive_seed(master, {2, set, draw});
}

std::uint64_t learner_seed(std::uint64_t master, std::size_t set, std::size_t draw, const std::string& algorithm_id)
{
    return derive_seed(master, {3, set, draw, hash_string(algorithm_id)});
}

Instance make_instance(const ExperimentConfig& cfg, std::size_t set)
{
    if (is_construction(cfg.environment)) {
        Construction con = make_construction(cfg.environment, cfg.c);
        Instance inst{con.pool, con.environment, std::nullopt};
        inst.construction = std::move(con);
        return inst;
    }
    auto env = make_environment(cfg.environment);
    return Instance{make_pool(cfg.experts, env->dimension(), pool_seed(cfg.seed, set)), env, std::nullopt};
}

std::vector<double> expert_losses(const ExpertPool& pool, const LabeledPoint& z, AbstentionCost c,
                                  const BaseLoss& base)
{
    const auto evals = pool.evaluate(z.x);
    std::vector<double> out(evals.size());
    for (std::size_t j = 0; j < evals.size(); ++j)
        out[j] = abstention_loss(evals[j].h_val, evals[j].r_val, z.y, c, base);
    return out;
}

BestInClass best_in_class(const ExpertPool& pool, std::span<const LabeledPoint> stream, AbstentionCost c,
                          const BaseLoss& base)
{
    const std::size_t k = pool.size();
    BestInClass best;
    best.totals.assign(k, 0.0);
    PoolEval eval;
    for (const auto& z : stream) {
        pool.evaluate(z.x, eval);
        for (std::size_t j = 0; j < k; ++j)
            best.totals[j] += abstention_loss(eval.h[j], eval.r[j], z.y, c, base);
    }
    for (std::size_t j = 1; j < k; ++j)
        if (best.totals[j] < best.totals[best.expert])
            best.expert = j;
    best.losses.reserve(stream.size());
    for (const auto& z : stream) {
        pool.evaluate(z.x, eval);
        best.losses.push_back(abstention_loss(eval.h[best.expert], eval.r[best.expert], z.y, c, base));
    }
    return best;
}

std::unique_ptr<Learner> make_learner(const AlgorithmSpec& spec, const Instance& instance, const ExperimentConfig& cfg,
                                      std::uint64_t seed)
{
    const std::size_t k = instance.pool.size();
    if (spec.name == "fs")
        return std::make_unique<FullSupervision>(k);
    if (spec.name == "ucb")
        return std::make_unique<UcbNt>(k, GraphSource::self_loops(), spec.beta, spec.id);
    if (spec.name == "ucb_gt")
        return std::make_unique<UcbGt>(k, spec.beta);
    if (spec.name == "exp3_abs") {
        const double eta = spec.eta.value_or(k >= 2 ? tuned_eta_exp3abs(k, static_cast<double>(cfg.horizon), cfg.c) : 1.0);
        return std::make_unique<Exp3Abs>(k, eta, seed);
    }
    if (spec.name == "cont_exp3_abs") {
        ContExp3Params p = tuned_params_contexp3(cfg.horizon, instance.environment->dimension(), spec.gamma);
        if (spec.eps)
            p.eps = *spec.eps;
        if (spec.eta)
            p.eta = *spec.eta;
        return std::make_unique<ContExp3AbsLearner>(p, AbstentionCost(cfg.c), seed);
    }
    if (spec.name == "ucb_nt") {
        GraphSource src = GraphSource::self_loops();
        if (spec.graph == "subset") {
            src = GraphSource::fixed(subset_graph(instance.pool));
        } else if (spec.graph == "subset_mc") {
            MonteCarloCertifier mc;
            mc.probes = spec.mc_probes;
            mc.seed = derive_seed(seed, {4});
            auto env = instance.environment;
            mc.sampler = [env](Rng& r) { return env->sample(r).x; };
            src = GraphSource::fixed(subset_graph(instance.pool, mc));
        } else if (spec.graph == "abstention") {
            src = GraphSource::round_abstention();
        } else if (spec.graph == "complete") {
            src = GraphSource::fixed(FeedbackGraph::complete(k));
        } else if (spec.graph == "offending") {
            if (!instance.construction || !instance.construction->offending_graph)
                throw std::invalid_argument("algorithm '" + spec.id + "': environment has no offending graph");
            src = GraphSource::fixed(*instance.construction->offending_graph);
        }
        return std::make_unique<UcbNt>(k, std::move(src), spec.beta, spec.id);
    }
    throw std::invalid_argument("unknown algorithm '" + spec.name + "'");
}

RunMetrics run_single(const ExpertPool& pool, std::span<const LabeledPoint> stream, AbstentionCost c,
                      const BaseLoss& base, Learner& learner, const BestInClass& best)
{
    const std::size_t T = stream.size();
    if (best.losses.size() != T)
        throw std::invalid_argument("run_single: best-in-class series does not match the stream");
    const std::size_t k = pool.size();
    RunMetrics m;
    m.algorithm = learner.name();
    m.best_expert = best.expert;
    for (auto* v : {&m.loss, &m.cum_loss, &m.cum_best_loss, &m.avg_regret, &m.frac_abstain})
        v->reserve(T);
    m.edges.reserve(T);
    m.chosen.reserve(T);
    m.updated.reserve(T);

    PoolEval eval;
    std::vector<double> losses(k);
    double cum = 0.0, cum_best = 0.0;
    std::uint64_t n_abstain = 0;
    for (std::size_t t = 0; t < T; ++t) {
        const LabeledPoint& z = stream[t];
        pool.evaluate(z.x, eval);
        for (std::size_t j = 0; j < k; ++j)
            losses[j] = eval.abstains[j] ? c.value() : base_loss(base, z.y, eval.h[j]);
        const RoundFeedback round(eval, losses, c, z.x, z.y);
        const StepOutcome out = learner.step(round);
        cum += out.loss;
        cum_best += best.losses[t];
        n_abstain += out.abstained ? 1 : 0;
        const double tt = static_cast<double>(t + 1);
        m.loss.push_back(out.loss);
        m.cum_loss.push_back(cum);
        m.cum_best_loss.push_back(cum_best);
        m.avg_regret.push_back((cum - cum_best) / tt);
        m.frac_abstain.push_back(static_cast<double>(n_abstain) / tt);
        m.edges.push_back(out.edges);
        m.chosen.push_back(out.chosen);
        m.updated.push_back(out.updated);
    }
    return m;
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw std::runtime_error("format_number failed");
    return std::string(buf, ptr);
}

void write_metrics_csv(const RunMetrics& m, const fs::path& path)
{
    std::string s;
    s.reserve(m.rounds() * 80 + 100);
    s += "t,cum_loss,cum_best_loss,avg_regret,frac_abstain,edges,chosen,updated,loss\n";
    for (std::size_t t = 0; t < m.rounds(); ++t) {
        s += std::to_string(t + 1);
        s += ',';
        s += format_number(m.cum_loss[t]);
        s += ',';
        s += format_number(m.cum_best_loss[t]);
        s += ',';
        s += format_number(m.avg_regret[t]);
        s += ',';
        s += format_number(m.frac_abstain[t]);
        s += ',';
        s += std::to_string(m.edges[t]);
        s += ',';
        s += std::to_string(m.chosen[t]);
        s += ',';
        s += std::to_string(m.updated[t]);
        s += ',';
        s += format_number(m.loss[t]);
        s += '\n';
    }
    write_text(path, s);
}

RunMetrics read_metrics_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open metrics file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("metrics file '" + path.string() + "' is empty");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = i;
    for (const char* required : {"t", "cum_loss", "cum_best_loss", "avg_regret", "frac_abstain", "edges"})
        if (!col.count(required))
            throw std::runtime_error("metrics file '" + path.string() + "' lacks column " + required);
    RunMetrics m;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("metrics file '" + path.string() + "': ragged row");
        m.cum_loss.push_back(parse_double(cells[col["cum_loss"]]));
        m.cum_best_loss.push_back(parse_double(cells[col["cum_best_loss"]]));
        m.avg_regret.push_back(parse_double(cells[col["avg_regret"]]));
        m.frac_abstain.push_back(parse_double(cells[col["frac_abstain"]]));
        m.edges.push_back(parse_u64(cells[col["edges"]]));
        if (col.count("chosen"))
            m.chosen.push_back(parse_u64(cells[col["chosen"]]));
        if (col.count("updated"))
            m.updated.push_back(parse_u64(cells[col["updated"]]));
        if (col.count("loss"))
            m.loss.push_back(parse_double(cells[col["loss"]]));
    }
    if (m.loss.empty()) {
        double prev = 0.0;
        for (double c : m.cum_loss) {
            m.loss.push_back(c - prev);
            prev = c;
        }
    }
    if (m.updated.empty())
        m.updated.assign(m.loss.size(), 0);
    if (m.chosen.empty())
        m.chosen.assign(m.loss.size(), 0);
    return m;
}

AggregateCurves aggregate_runs(const std::string& algorithm, std::span<const RunMetrics* const> runs)
{
    AggregateCurves a;
    a.algorithm = algorithm;
    a.runs = runs.size();
    if (runs.empty())
        return a;
    const std::size_t T = runs.front()->rounds();
    for (const auto* r : runs)
        if (r->rounds() != T)
            throw std::invalid_argument("aggregate_runs: runs of '" + algorithm + "' have different lengths");

    std::map<std::size_t, std::vector<const RunMetrics*>> by_set;
    for (const auto* r : runs)
        by_set[r->expert_set].push_back(r);

    auto fill = [&](CurveStats& cs, auto value) {
        cs.mean.resize(T);
        cs.std_sets.resize(T);
        cs.std_pooled.resize(T);
        std::vector<double> all(runs.size()), sets(by_set.size());
        for (std::size_t t = 0; t < T; ++t) {
            double total = 0.0;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                all[i] = value(*runs[i], t);
                total += all[i];
            }
            const double mean = total / static_cast<double>(runs.size());
            std::size_t s = 0;
            double set_total = 0.0;
            for (const auto& [set, members] : by_set) {
                double m = 0.0;
                for (const auto* r : members)
                    m += value(*r, t);
                sets[s] = m / static_cast<double>(members.size());
                set_total += sets[s];
                ++s;
            }
            cs.mean[t] = mean;
            cs.std_pooled[t] = sample_std(all, mean);
            cs.std_sets[t] = sample_std(sets, set_total / static_cast<double>(sets.size()));
        }
    };
    fill(a.avg_regret, [](const RunMetrics& r, std::size_t t) { return r.avg_regret[t]; });
    fill(a.frac_abstain, [](const RunMetrics& r, std::size_t t) { return r.frac_abstain[t]; });
    fill(a.edges, [](const RunMetrics& r, std::size_t t) { return static_cast<double>(r.edges[t]); });
    fill(a.updated, [](const RunMetrics& r, std::size_t t) { return static_cast<double>(r.updated[t]); });
    return a;
}

void write_aggregate_csv(const AggregateCurves& a, const fs::path& path)
{
    std::string s = "t";
    for (const char* metric : {"avg_regret", "frac_abstain", "edges", "updated"})
        for (const char* stat : {"mean", "std_sets", "std_pooled"})
            s += std::string(",") + metric + "_" + stat;
    s += '\n';
    const std::size_t T = a.avg_regret.mean.size();
    for (std::size_t t = 0; t < T; ++t) {
        s += std::to_string(t + 1);
        for (const CurveStats* cs : {&a.avg_regret, &a.frac_abstain, &a.edges, &a.updated}) {
            s += ',';
            s += format_number(cs->mean[t]);
            s += ',';
            s += format_number(cs->std_sets[t]);
            s += ',';
            s += format_number(cs->std_pooled[t]);
        }
        s += '\n';
    }
    write_text(path, s);
}

std::string default_output_dir()
{
    if (const char* env = std::getenv(kOutputDirEnv); env && *env)
        return env;
    return "results";
}

ExperimentResult run_experiment(ExperimentConfig cfg, const RunOptions& options)
{
    if (options.seed)
        cfg.seed = *options.seed;
    if (options.output)
        cfg.output = *options.output;
    if (cfg.output.empty())
        cfg.output = default_output_dir();

    ExperimentResult result;
    result.output = cfg.output;
    const AbstentionCost c(cfg.c);

    std::vector<Instance> instances;
    instances.reserve(cfg.expert_sets);
    for (std::size_t s = 0; s < cfg.expert_sets; ++s)
        instances.push_back(make_instance(cfg, s));

    struct DataContext
    {
        std::vector<LabeledPoint> stream;
        BestInClass best;
    };
    const std::size_t n_data = cfg.expert_sets * cfg.data_draws;
    std::vector<DataContext> data(n_data);
    parallel_for(n_data, options.jobs, [&](std::size_t i) {
        const std::size_t s = i / cfg.data_draws, d = i % cfg.data_draws;
        const Instance& inst = instances[s];
        data[i].stream = draw_stream(*inst.environment, cfg.horizon, stream_seed(cfg.seed, s, d));
        data[i].best = best_in_class(inst.pool, data[i].stream, c, cfg.base);
    });

    const std::size_t n_alg = cfg.algorithms.size();
    const std::size_t n_runs = n_data * n_alg;
    result.runs.resize(n_runs);
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};
    const fs::path out = cfg.output;
    parallel_for(n_runs, options.jobs, [&](std::size_t i) {
        const std::size_t di = i / n_alg, a = i % n_alg;
        const std::size_t s = di / cfg.data_draws, d = di % cfg.data_draws;
        const AlgorithmSpec& spec = cfg.algorithms[a];
        const Instance& inst = instances[s];
        auto learner = make_learner(spec, inst, cfg, learner_seed(cfg.seed, s, d, spec.id));
        RunMetrics m = run_single(inst.pool, data[di].stream, c, cfg.base, *learner, data[di].best);
        m.algorithm = spec.id;
        m.expert_set = s;
        m.data_draw = d;
        if (options.write_files)
            write_metrics_csv(m, out / run_file(spec.id, s, d));
        const std::size_t k = ++done;
        if (options.verbose) {
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "[" << k << "/" << n_runs << "] " << spec.id << " set " << s << " draw " << d
                      << ": R_T/T = " << m.avg_regret.back() << '\n';
        }
        result.runs[i] = std::move(m);
    });

    std::vector<std::string> ids;
    for (const auto& a : cfg.algorithms)
        ids.push_back(a.id);
    result.aggregates = aggregate_and_write(ids, result.runs, out, options.write_files);

    nlohmann::json manifest = {{"schema_version", kSchemaVersion},
                               {"config", cfg.to_json()},
                               {"config_hash", cfg.hash()},
                               {"prng", {{"engine", "mt19937_64"}, {"seed_derivation", "splitmix64"}}}};
    nlohmann::json pools = nlohmann::json::array();
    for (const auto& inst : instances)
        pools.push_back({{"K", inst.pool.size()}, {"spec", inst.pool.spec()}});
    manifest["expert_sets"] = pools;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& m : result.runs) {
        double edges_total = 0.0;
        for (auto e : m.edges)
            edges_total += static_cast<double>(e);
        runs.push_back({{"algorithm", m.algorithm},
                        {"expert_set", m.expert_set},
                        {"data_draw", m.data_draw},
                        {"file", run_file(m.algorithm, m.expert_set, m.data_draw).generic_string()},
                        {"best_expert", m.best_expert},
                        {"final_avg_regret", m.avg_regret.empty() ? 0.0 : m.avg_regret.back()},
                        {"final_frac_abstain", m.frac_abstain.empty() ? 0.0 : m.frac_abstain.back()},
                        {"cum_loss", m.cum_loss.empty() ? 0.0 : m.cum_loss.back()},
                        {"cum_best_loss", m.cum_best_loss.empty() ? 0.0 : m.cum_best_loss.back()},
                        {"edges_total", edges_total}});
    }
    manifest["runs"] = runs;
    result.manifest = manifest;
    if (options.write_files)
        write_text(out / "manifest.json", manifest.dump(2) + "\n");
    result.config = std::move(cfg);
    return result;
}

std::vector<RunMetrics> run_construction(const Construction& con, const LearnerFactory& factory, std::size_t horizon,
                                         std::size_t runs, std::uint64_t master_seed, std::size_t jobs)
{
    std::vector<RunMetrics> out(runs);
    parallel_for(runs, jobs, [&](std::size_t r) {
        const auto stream = draw_stream(*con.environment, horizon, stream_seed(master_seed, 0, r));
        const BestInClass best = best_in_class(con.pool, stream, con.cost, con.base);
        auto learner = factory(learner_seed(master_seed, 0, r, "construction"));
        RunMetrics m = run_single(con.pool, stream, con.cost, con.base, *learner, best);
        m.data_draw = r;
        out[r] = std::move(m);
    });
    return out;
}

std::vector<AggregateCurves> aggregate_directory(const fs::path& dir)
{
    std::ifstream in(dir / "manifest.json");
    if (!in)
        throw std::runtime_error("no manifest.json in '" + dir.string() + "'");
    const nlohmann::json manifest = nlohmann::json::parse(in);
    if (manifest.value("schema_version", 0) != kSchemaVersion)
        throw std::runtime_error("manifest schema_version is not supported");
    std::vector<std::string> ids;
    for (const auto& a : manifest.at("config").at("algorithms"))
        ids.push_back(a.at("id").get<std::string>());
    std::vector<RunMetrics> runs;
    for (const auto& r : manifest.at("runs")) {
        RunMetrics m = read_metrics_csv(dir / r.at("file").get<std::string>());
        m.algorithm = r.at("algorithm").get<std::string>();
        m.expert_set = r.at("expert_set").get<std::size_t>();
        m.data_draw = r.at("data_draw").get<std::size_t>();
        m.best_expert = r.at("best_expert").get<std::size_t>();
        runs.push_back(std::move(m));
    }
    return aggregate_and_write(ids, runs, dir, true);
}

} // namespace abstain
