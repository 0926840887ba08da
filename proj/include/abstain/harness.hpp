#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "abstain/environments.hpp"
#include "abstain/experts.hpp"
#include "abstain/learner.hpp"
#include "abstain/losses.hpp"

namespace abstain {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "ABSTAIN_OUT_DIR";

class ConfigError : public std::invalid_argument
{
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct AlgorithmSpec
{
    std::string id;
    std::string name; // ucb | ucb_nt | ucb_gt | fs | exp3_abs | cont_exp3_abs
    double beta = 2.5;
    std::optional<double> eta;
    // ucb_nt graph: subset | subset_mc | abstention | complete | self_loops | offending
    std::string graph = "subset";
    std::size_t mc_probes = 100000;
    double gamma = 0.5;
    std::optional<double> eps;

    nlohmann::json to_json() const;
};

struct ExperimentConfig
{
    int schema_version = kSchemaVersion;
    nlohmann::json environment;
    nlohmann::json experts;
    std::vector<AlgorithmSpec> algorithms;
    double c = 0.0;
    std::size_t horizon = 0;
    std::size_t expert_sets = 1;
    std::size_t data_draws = 1;
    std::uint64_t seed = 0;
    std::string output;
    BaseLoss base = ZeroOneLoss{};

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string hash() const;
};

// Field-level validation messages; empty when the config is usable.
std::vector<std::string> validate_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Seed paths: pools (1, set), data streams (2, set, draw), learners (3, set, draw, hash(id)).
std::uint64_t pool_seed(std::uint64_t master, std::size_t set);
std::uint64_t stream_seed(std::uint64_t master, std::size_t set, std::size_t draw);
std::uint64_t learner_seed(std::uint64_t master, std::size_t set, std::size_t draw, const std::string& algorithm_id);

struct Instance
{
    ExpertPool pool;
    std::shared_ptr<const Environment> environment;
    std::optional<Construction> construction;
};
Instance make_instance(const ExperimentConfig& cfg, std::size_t set);

std::vector<double> expert_losses(const ExpertPool& pool, const LabeledPoint& z, AbstentionCost c,
                                  const BaseLoss& base);

struct BestInClass
{
    std::size_t expert = 0;
    std::vector<double> totals; // sum_t L(xi_j, z_t) per expert
    std::vector<double> losses; // per-round losses of the best expert
};
// argmin_j sum_t L(xi_j, z_t), ties to the lowest id
BestInClass best_in_class(const ExpertPool& pool, std::span<const LabeledPoint> stream, AbstentionCost c,
                          const BaseLoss& base);

struct RunMetrics
{
    std::string algorithm;
    std::size_t expert_set = 0;
    std::size_t data_draw = 0;
    std::size_t best_expert = 0;
    std::vector<double> loss;
    std::vector<double> cum_loss;
    std::vector<double> cum_best_loss;
    std::vector<double> avg_regret;
    std::vector<double> frac_abstain;
    std::vector<std::uint64_t> edges;
    std::vector<std::uint64_t> chosen;
    std::vector<std::uint64_t> updated;

    std::size_t rounds() const { return loss.size(); }
};

std::unique_ptr<Learner> make_learner(const AlgorithmSpec& spec, const Instance& instance, const ExperimentConfig& cfg,
                                      std::uint64_t seed);

RunMetrics run_single(const ExpertPool& pool, std::span<const LabeledPoint> stream, AbstentionCost c,
                      const BaseLoss& base, Learner& learner, const BestInClass& best);

void write_metrics_csv(const RunMetrics& m, const std::filesystem::path& path);
RunMetrics read_metrics_csv(const std::filesystem::path& path);

struct CurveStats
{
    std::vector<double> mean;
    std::vector<double> std_sets;
    std::vector<double> std_pooled;
};

struct AggregateCurves
{
    std::string algorithm;
    std::size_t runs = 0;
    CurveStats avg_regret;
    CurveStats frac_abstain;
    CurveStats edges;
    CurveStats updated;
};

// Per-round mean, std of per-set means, and std over all runs (sample std, 0 for one value).
AggregateCurves aggregate_runs(const std::string& algorithm, std::span<const RunMetrics* const> runs);
void write_aggregate_csv(const AggregateCurves& a, const std::filesystem::path& path);

struct RunOptions
{
    std::size_t jobs = 1;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    bool write_files = true;
    bool verbose = false;
};

struct ExperimentResult
{
    ExperimentConfig config;
    std::filesystem::path output;
    std::vector<RunMetrics> runs;
    std::vector<AggregateCurves> aggregates;
    nlohmann::json manifest;
};

ExperimentResult run_experiment(ExperimentConfig cfg, const RunOptions& options = {});

using LearnerFactory = std::function<std::unique_ptr<Learner>(std::uint64_t seed)>;

// Independent runs of one learner on a construction: run r uses the stream of (set 0, draw r).
// The comparator is the hindsight best expert of each stream.
std::vector<RunMetrics> run_construction(const Construction& con, const LearnerFactory& factory, std::size_t horizon,
                                         std::size_t runs, std::uint64_t master_seed, std::size_t jobs = 1);

// Re-reads a finished output directory and rewrites the aggregate files.
std::vector<AggregateCurves> aggregate_directory(const std::filesystem::path& dir);

std::string default_output_dir();

// Shortest round-trip decimal text for a double.
std::string format_number(double v);

} // namespace abstain
