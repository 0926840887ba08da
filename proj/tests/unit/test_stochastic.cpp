#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "abstain/harness.hpp"
#include "abstain/rng.hpp"
#include "abstain/stochastic.hpp"

using namespace abstain;

namespace {

// Plays one round of `learner` on input x with label y.
StepOutcome play(Learner& learner, const ExpertPool& pool, const std::vector<double>& x, int y, AbstentionCost c,
                 PoolEval& pe, std::vector<double>& losses)
{
    pool.evaluate(x, pe);
    losses = expert_losses(pool, LabeledPoint{x, y}, c, ZeroOneLoss{});
    return learner.step(RoundFeedback(pe, losses, c, x, y));
}

} // namespace

TEST_CASE("ucb index")
{
    UcbState s(2);
    s.mu_hat = {0.4, 0.4};
    s.q = {5, 0};
    s.t = 100;
    CHECK(ucb_index(s, 0) == doctest::Approx(0.4 - std::sqrt(std::log(100.0))));
    CHECK(ucb_index(s, 0) == doctest::Approx(-1.746).epsilon(1e-3));
    CHECK(ucb_index(s, 1) == -std::numeric_limits<double>::infinity());
    CHECK(ucb_select(s) == 1);
    s.q = {5, 5};
    CHECK(ucb_select(s) == 0);
    s.mu_hat = {0.5, 0.4};
    CHECK(ucb_select(s) == 1);
}

TEST_CASE("ucb state updates")
{
    UcbState s(1);
    s.observe(0, 0.6);
    CHECK(s.mu_hat[0] == doctest::Approx(0.6));
    s.observe_optimistic(0);
    CHECK(s.q[0] == 2);
    CHECK(s.mu_hat[0] == doctest::Approx(0.3));
    s.observe(0, 0.9);
    CHECK(s.mu_hat[0] == doctest::Approx(0.5));
    const UcbState back = UcbState::from_json(s.to_json());
    CHECK(back.mu_hat == s.mu_hat);
    CHECK(back.q == s.q);
}

TEST_CASE("graph sources")
{
    CHECK(GraphSource::round_abstention().bias_unsafe());
    CHECK_FALSE(GraphSource::self_loops().bias_unsafe());
    CHECK_FALSE(GraphSource::fixed(FeedbackGraph(2)).bias_unsafe());
}

TEST_CASE("vanilla ucb observes one expert per round, complete graph observes all")
{
    // never-abstaining experts, so the complete graph is a legal feedback graph
    const ExpertPool pool = pair_all(2, {Hyperplane{{1.0, 0.0}}, Hyperplane{{0.0, 1.0}}, Hyperplane{{1.0, 1.0}}},
                                     {NeverAbstain{}});
    const AbstentionCost c(0.2);
    UcbNt vanilla(pool.size(), GraphSource::self_loops(), kDefaultBeta, "ucb");
    UcbNt full(pool.size(), GraphSource::fixed(FeedbackGraph::complete(pool.size())));
    Rng rng(1);
    PoolEval pe;
    std::vector<double> losses;
    const std::size_t T = 300;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const int y = sign_label(x[0] + x[1]);
        const auto a = play(vanilla, pool, x, y, c, pe, losses);
        CHECK(a.updated == 1);
        CHECK(a.edges == pool.size());
        CHECK(a.loss == losses[a.chosen]);
        const auto b = play(full, pool, x, y, c, pe, losses);
        CHECK(b.updated == pool.size());
    }
    for (std::size_t j = 0; j < pool.size(); ++j)
        CHECK(full.state().q[j] == T);
    CHECK(vanilla.state().t == T);
}

TEST_CASE("fixed subset graph propagates the abstention cost")
{
    const ExpertPool pool = pair_all(1, {AxisAligned{0, 0.0}}, {ConfidenceThreshold{0.1}, ConfidenceThreshold{0.2}});
    const FeedbackGraph g = subset_graph(pool);
    REQUIRE(g.has_edge(0, 1));
    const AbstentionCost c(0.35);
    UcbNt learner(2, GraphSource::fixed(g));
    PoolEval pe;
    std::vector<double> losses;
    const auto out = play(learner, pool, {0.05}, 1, c, pe, losses);
    CHECK(out.chosen == 0);
    CHECK(out.abstained);
    CHECK(learner.state().q[1] == 1);
    CHECK(learner.state().mu_hat[1] == doctest::Approx(0.35));
}

TEST_CASE("playing an abstainer never reveals accepting losses")
{
    // expert 0 abstains everywhere, expert 1 never abstains; a complete graph would leak
    std::vector<Predictor> preds{AxisAligned{0, 0.0}};
    std::vector<Expert> experts{Expert{0, 0, ConfidenceThreshold{2.0}}, Expert{1, 0, NeverAbstain{}}};
    const ExpertPool pool(1, preds, experts);
    UcbNt leaky(2, GraphSource::fixed(FeedbackGraph::complete(2)));
    PoolEval pe;
    std::vector<double> losses;
    CHECK_THROWS_AS(play(leaky, pool, {0.5}, 1, AbstentionCost(0.3), pe, losses), ProtocolViolation);
}

TEST_CASE("ucb-gt first round and certified edges")
{
    const ExpertPool pool = generate_hyperplane_annuli(2, 4, annulus_radii(2, 5), 6);
    const FeedbackGraph sub = subset_graph(pool);
    const AbstentionCost c(0.2);
    UcbGt gt(pool.size());
    Rng rng(8);
    PoolEval pe;
    std::vector<double> losses;
    std::uint64_t optimistic = 0;
    for (int t = 1; t <= 2000; ++t) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto o = play(gt, pool, x, sign_label(x[0] + x[1]), c, pe, losses);
        if (t == 1)
            CHECK(o.updated == pool.size());
        if (t == 1)
            CHECK(o.chosen == 0);
        CHECK(o.edges == gt.graph().edge_count());
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::uint32_t j : sub.out(i))
                CHECK(gt.graph().contains(i, j));
        for (std::size_t j = 0; j < pool.size(); ++j) {
            CHECK(gt.state().mu_hat[j] >= 0.0);
            CHECK(gt.state().mu_hat[j] <= 1.0);
        }
    }
    for (auto v : gt.optimistic_updates())
        optimistic += v;
    CHECK(optimistic > 0);
}

TEST_CASE("optimistic step only lowers the estimate relative to the true-loss update")
{
    // an expert updated optimistically has mean at most its true-loss empirical mean
    const ExpertPool pool = generate_hyperplane_annuli(2, 3, annulus_radii(2, 4), 10);
    const AbstentionCost c(0.2);
    UcbGt gt(pool.size());
    std::vector<double> true_sum(pool.size(), 0.0);
    Rng rng(17);
    PoolEval pe;
    std::vector<double> losses;
    auto previous = gt.state();
    for (int t = 1; t <= 1500; ++t) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        play(gt, pool, x, sign_label(x[0] + x[1]), c, pe, losses);
        const auto& now = gt.state();
        for (std::size_t j = 0; j < pool.size(); ++j)
            if (now.q[j] != previous.q[j])
                true_sum[j] += losses[j];
        for (std::size_t j = 0; j < pool.size(); ++j)
            if (now.q[j] > 0)
                CHECK(now.mu_hat[j] <= true_sum[j] / static_cast<double>(now.q[j]) + 1e-12);
        previous = now;
    }
}

TEST_CASE("full supervision")
{
    // expert 1 is always right, expert 0 always wrong
    const ExpertPool pool = pair_all(1, {AxisAligned{0, 2.0}, AxisAligned{0, -2.0}}, {NeverAbstain{}});
    FullSupervision fs(2);
    PoolEval pe;
    std::vector<double> losses;
    const AbstentionCost c(0.5);
    Rng rng(2);
    std::vector<double> sums(2, 0.0);
    for (int t = 1; t <= 50; ++t) {
        const auto o = play(fs, pool, {rng.uniform(-1, 1)}, 1, c, pe, losses);
        CHECK(o.chosen == (t == 1 ? 0u : 1u));
        CHECK(o.updated == 2);
        CHECK(o.edges == 4);
        sums[0] += losses[0];
        sums[1] += losses[1];
    }
    CHECK(fs.state().mu_hat[0] == doctest::Approx(sums[0] / 50));
    CHECK(fs.state().mu_hat[1] == doctest::Approx(sums[1] / 50));
}
