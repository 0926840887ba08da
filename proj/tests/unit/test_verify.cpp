#include <doctest.h>

#include <cmath>
#include <vector>

#include "abstain/verify.hpp"

using namespace abstain;

TEST_CASE("exp3-abs bound")
{
    CHECK(exp3abs_bound(3, 2.0, 0.0).value == doctest::Approx(std::sqrt(2.0 * 2.0 * std::log(3.0))));
    CHECK(exp3abs_bound(10, 1e4, 1.0).value / exp3abs_bound(10, 1e4, 0.0).value == doctest::Approx(std::sqrt(2.0)));
    CHECK(exp3abs_bound(10, 4e4, 0.5).value == doctest::Approx(2.0 * exp3abs_bound(10, 1e4, 0.5).value));
    const TheoremBound b = exp3abs_bound(10, 1e4, 0.5);
    CHECK(b.value >= 0.0);
    CHECK(b.to_json()["inputs"]["K"] == 10);
}

TEST_CASE("partition bound wrapper")
{
    const std::vector<FeedbackGraph> g{FeedbackGraph::complete(2)};
    const std::vector<double> d{0.0, 0.2};
    const TheoremBound b = partition_bound(g, d, 100);
    CHECK(b.value == doctest::Approx(20.0 * std::log(100.0) / 0.2 + 10.0));
}

TEST_CASE("analytic means")
{
    const MeanEstimate bias = analytic_means(bias_construction());
    CHECK(bias.exact);
    CHECK(bias.mu[0] == doctest::Approx(0.28));
    CHECK(bias.mu[1] == doctest::Approx(0.1325));
    CHECK(bias.mu_star == doctest::Approx(0.1325));
    const MeanEstimate p1 = analytic_means(prop1_construction(0.4, 0.5, 0.8));
    CHECK(p1.mu[0] == doctest::Approx(0.304));
    CHECK(p1.mu[1] == doctest::Approx(0.36));

    // expert that always abstains on a distribution without a closed form
    const ExpertPool pool = pair_all(2, {Hyperplane{{1.0, 1.0}}}, {NormBand{0.0, 10.0}, NeverAbstain{}});
    MonteCarloBudget budget;
    budget.samples = 200000;
    budget.tolerance = 5e-3;
    budget.seed = 3;
    const MeanEstimate mc = analytic_means(pool, *synthetic_uniform(), AbstentionCost(0.3), ZeroOneLoss{}, budget);
    CHECK_FALSE(mc.exact);
    CHECK(mc.mu[0] == 0.3);
    CHECK(mc.std_error[0] == 0.0);
    // h = clamp(x1 + x2) always has the sign of the label
    CHECK(mc.mu[1] == 0.0);
    const MeanEstimate again = analytic_means(pool, *synthetic_uniform(), AbstentionCost(0.3), ZeroOneLoss{}, budget);
    CHECK(again.mu == mc.mu);
    budget.samples = 10;
    budget.tolerance = 1e-9;
    const ExpertPool noisy = pair_all(2, {Hyperplane{{1.0, 0.0}}}, {NeverAbstain{}});
    CHECK_THROWS(analytic_means(noisy, *synthetic_uniform(), AbstentionCost(0.3), ZeroOneLoss{}, budget));
}

TEST_CASE("regret helpers")
{
    const std::vector<double> losses{0.5, 0.0, 1.0, 0.25};
    CHECK(pseudo_regret(losses, 0.25) == doctest::Approx(1.75 - 1.0));
    const std::vector<std::uint64_t> chosen{0, 1, 1, 2};
    const std::vector<double> deltas{0.0, 0.1, 0.3};
    CHECK(gap_regret(chosen, deltas) == doctest::Approx(0.5));
}

TEST_CASE("verification report")
{
    VerificationReport r;
    r.add("a", true, "fine");
    CHECK(r.all_passed());
    r.add("b", false, "bad", {{"x", 1}});
    CHECK_FALSE(r.all_passed());
    CHECK(r.size() == 2);
    CHECK(r.to_json()["criteria"][1]["id"] == "b");
}
