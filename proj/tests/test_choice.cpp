#include <doctest.h>

#include <cmath>
#include <random>

#include "reconfig/choice.hpp"

using namespace reconfig;

namespace {

SolutionScore score(int s, double f, Handedness h)
{
    SolutionScore x;
    x.s = s;
    x.f = f;
    x.handedness = h;
    return x;
}

const auto kOne = Handedness::OneHand;
const auto kTwo = Handedness::TwoHand;
const ModelVariant kSymbolic{ScoreSource::Symbolic, SolutionMode::Efficient};
const ModelVariant kFull{ScoreSource::Full, SolutionMode::Efficient};

StabilityVerdict verdict(StabilityLabel l)
{
    StabilityVerdict v;
    v.label = l;
    return v;
}

} // namespace

TEST_CASE("metabolic cost examples")
{
    SUBCASE("no surcharges")
    {
        Schedule sched;
        sched.s = 4;
        sched.carried = {0, 0, 0, 0};
        FullSolution sol;
        sol.verdicts = {verdict(StabilityLabel::Stable), verdict(StabilityLabel::Stable)};
        CHECK(metabolic_cost(sched, sol) == 4.0);
    }
    SUBCASE("grasping a block with another on top once")
    {
        Schedule sched;
        sched.s = 3;
        sched.carried = {1, 0, 0};
        CHECK(metabolic_cost(sched, FullSolution{}) == 3.5);
    }
    SUBCASE("one multi-block move and one recoverable instability")
    {
        Schedule sched;
        sched.s = 4;
        sched.carried = {0, 0, 2, 0};
        FullSolution sol;
        sol.verdicts = {verdict(StabilityLabel::Stable), verdict(StabilityLabel::UnstableRecoverable),
                        verdict(StabilityLabel::Stable)};
        CHECK(metabolic_cost(sched, sol) == 5.0);
    }
    CHECK(metabolic_cost(2, 3, 1) == 4.0);
}

TEST_CASE("one-hand probability")
{
    SUBCASE("closed form for one cheap two-hand and one dearer one-hand solution")
    {
        const auto p = pr_one_hand(7, {score(3, 3, kOne), score(2, 2, kTwo)}, kSymbolic);
        REQUIRE(p.pr_one_hand);
        CHECK(std::abs(*p.pr_one_hand - 1.0 / (1.0 + std::exp(1.0))) < 1e-9);
        CHECK(std::abs(*p.pr_one_hand - 0.2689414) < 1e-7);
        CHECK(p.n_one_hand == 1);
        CHECK(p.n_all == 2);
        CHECK(p.problem_id == 7);
        CHECK(p.variant == "symbolic-efficient");
    }
    SUBCASE("all one-hand gives exactly one, none gives zero")
    {
        CHECK(*pr_one_hand(1, {score(2, 9, kOne), score(5, 5, kOne)}, kFull).pr_one_hand == 1.0);
        CHECK(*pr_one_hand(1, {score(2, 9, kTwo), score(5, 5, kTwo)}, kFull).pr_one_hand == 0.0);
    }
    SUBCASE("equal scores split evenly")
    {
        CHECK(*pr_one_hand(1, {score(4, 4, kOne), score(4, 4, kTwo)}, kSymbolic).pr_one_hand == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("no solutions yields no prediction")
    {
        const auto p = pr_one_hand(3, {}, kFull);
        CHECK_FALSE(p.pr_one_hand.has_value());
        CHECK(p.n_all == 0);
    }
    SUBCASE("the variant picks the score field")
    {
        const std::vector<SolutionScore> xs{score(3, 3.0, kOne), score(3, 4.0, kTwo)};
        CHECK(*pr_one_hand(1, xs, kSymbolic).pr_one_hand == doctest::Approx(0.5));
        CHECK(*pr_one_hand(1, xs, kFull).pr_one_hand == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    }
    SUBCASE("large scores stay finite")
    {
        const auto p = pr_one_hand(1, {score(2000, 2000, kOne), score(2001, 2001, kTwo)}, kSymbolic);
        CHECK(*p.pr_one_hand == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    }
    SUBCASE("temperature flattens the distribution")
    {
        const std::vector<SolutionScore> xs{score(3, 3, kOne), score(2, 2, kTwo)};
        const double t1 = *pr_one_hand(1, xs, kSymbolic).pr_one_hand;
        const double t4 = *pr_one_hand(1, xs, kSymbolic, 4.0).pr_one_hand;
        CHECK(t4 > t1);
        CHECK(t4 < 0.5);
        CHECK_THROWS_AS(pr_one_hand(1, xs, kSymbolic, 0.0), std::invalid_argument);
    }
}

TEST_CASE("score-shift invariance and monotonicity on random score sets")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> s(1, 9);
    std::uniform_int_distribution<int> halves(0, 4);
    std::uniform_int_distribution<int> size(1, 12);
    std::bernoulli_distribution one(0.4);
    std::uniform_real_distribution<double> shift(-50, 50);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SolutionScore> xs;
        const int n = size(rng);
        for (int j = 0; j < n; ++j) {
            const int sj = s(rng);
            xs.push_back(score(sj, sj + 0.5 * halves(rng), one(rng) ? kOne : kTwo));
        }
        const double c = shift(rng);
        auto shifted = xs;
        for (auto& x : shifted) {
            x.f += c;
        }
        const double base = *pr_one_hand(0, xs, kFull).pr_one_hand;
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
        CHECK(std::abs(*pr_one_hand(0, shifted, kFull).pr_one_hand - base) < 1e-12);

        // Dropping a two-hand solution never lowers the share; dropping a one-hand one never raises it.
        for (size_t j = 0; j < xs.size() && xs.size() > 1; ++j) {
            auto fewer = xs;
            fewer.erase(fewer.begin() + static_cast<long>(j));
            const double r = *pr_one_hand(0, fewer, kFull).pr_one_hand;
            if (xs[j].handedness == kTwo) {
                CHECK(r >= base - 1e-15);
            } else {
                CHECK(r <= base + 1e-15);
            }
        }
    }
}

TEST_CASE("variants")
{
    const auto all = ModelVariant::all();
    REQUIRE(all.size() == 4);
    std::vector<std::string> names;
    for (const auto& v : all) {
        names.push_back(v.name());
        CHECK(ModelVariant::parse(v.name()) == v);
    }
    CHECK(names == std::vector<std::string>{"symbolic-efficient", "symbolic-inefficient", "full-efficient", "full-inefficient"});
    CHECK(ModelVariant::parse("full-universal") == all[3]);
    CHECK_THROWS_AS(ModelVariant::parse("physics-efficient"), std::invalid_argument);
    CHECK_THROWS_AS(ModelVariant::parse("full"), std::invalid_argument);
    CHECK_THROWS_AS(ModelVariant::parse("full-lazy"), std::invalid_argument);
}
