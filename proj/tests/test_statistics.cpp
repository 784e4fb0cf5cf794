#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "reconfig/statistics.hpp"

using namespace reconfig;

namespace {

Prediction pred(const std::string& variant, int id, double p)
{
    Prediction x;
    x.variant = variant;
    x.problem_id = id;
    x.pr_one_hand = p;
    return x;
}

} // namespace

TEST_CASE("pearson against closed forms")
{
    SUBCASE("perfect linearity")
    {
        std::vector<double> x, y;
        for (int i = 1; i <= 10; ++i) {
            x.push_back(i);
            y.push_back(2.0 * i + 1.0);
        }
        CHECK(std::abs(*pearson(x, y) - 1.0) < 1e-12);
        CHECK(std::abs(*pearson(x, x) - 1.0) < 1e-12);
    }
    SUBCASE("five points with hand-computed moments")
    {
        // x mean 3, y mean 4; deviations (-2,-1,0,1,2) and (-2,1,-1,0,2):
        // sxy = 4 - 1 + 0 + 0 + 4 = 7, sxx = 10, syy = 10, r = 0.7.
        const std::vector<double> x{1, 2, 3, 4, 5};
        const std::vector<double> y{2, 5, 3, 4, 6};
        CHECK(std::abs(*pearson(x, y) - 0.7) < 1e-12);
        CHECK(std::abs(*pearson(x, y) - oracles::pearson(x, y)) < 1e-12);
    }
    SUBCASE("degenerate series")
    {
        CHECK_FALSE(pearson({1, 2, 3}, {4, 4, 4}).has_value());
        CHECK_FALSE(pearson({1}, {2}).has_value());
        CHECK_THROWS_AS(pearson({1, 2}, {1}), std::invalid_argument);
    }
}

TEST_CASE("behavioral csv")
{
    const std::string text =
        "problem_id,p_one_hand_lab,mean_judgment_online,n_lab,n_online\n"
        "1,0.8,0.75,20,40\n"
        "2,,0.3,,40\n"
        "3,0.1,,20,\n";
    const auto rows = parse_behavioral_csv(text);
    REQUIRE(rows.size() == 3);
    CHECK(*rows[0].p_one_hand_lab == 0.8);
    CHECK(*rows[0].n_online == 40);
    CHECK_FALSE(rows[1].p_one_hand_lab.has_value());
    CHECK_FALSE(rows[2].mean_judgment_online.has_value());
    CHECK_FALSE(rows[2].n_online.has_value());

    const std::string head = "problem_id,p_one_hand_lab,mean_judgment_online,n_lab,n_online\n";
    CHECK_THROWS_WITH_AS(parse_behavioral_csv(head + "1,1.2,0.5,1,1\n"), doctest::Contains("outside [0, 1]"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_behavioral_csv(head + "1,0.2,0.5,1,1\n1,0.3,0.5,1,1\n"), doctest::Contains("duplicate"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_behavioral_csv("id,p\n1,0.5\n"), doctest::Contains("header"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_behavioral_csv(head + "1,0.2,0.5\n"), doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_AS(load_behavioral_csv("/nonexistent/behavior.csv"), std::runtime_error);
}

TEST_CASE("bootstrap")
{
    const std::vector<double> x{0.1, 0.4, 0.35, 0.8, 0.6, 0.9, 0.2, 0.55};
    const std::vector<double> y{0.2, 0.3, 0.5, 0.7, 0.5, 0.95, 0.1, 0.4};

    SUBCASE("fixed seed is bit-reproducible")
    {
        BootstrapSettings s;
        s.seed = 99;
        const auto a = bootstrap_correlation(x, y, bootstrap_indices(x.size(), s), s.level);
        const auto b = bootstrap_correlation(x, y, bootstrap_indices(x.size(), s), s.level);
        CHECK(a.replicates == b.replicates);
        CHECK(a.lo == b.lo);
        CHECK(a.hi == b.hi);
        s.seed = 100;
        CHECK(bootstrap_correlation(x, y, bootstrap_indices(x.size(), s), s.level).replicates != a.replicates);
    }
    SUBCASE("interval contains r and replicates resample problems")
    {
        BootstrapSettings s;
        const auto idx = bootstrap_indices(x.size(), s);
        REQUIRE(idx.size() == 10000);
        for (const auto& rep : idx) {
            for (size_t i : rep) {
                CHECK(i < x.size());
            }
        }
        const auto rep = bootstrap_correlation(x, y, idx, s.level);
        CHECK(std::abs(*rep.r - oracles::pearson(x, y)) < 1e-12);
        CHECK(rep.lo <= *rep.r);
        CHECK(rep.hi >= *rep.r);
        CHECK(rep.lo >= -1.0);
        CHECK(rep.hi <= 1.0);
        CHECK(rep.replicates.size() > 9900);
    }
    SUBCASE("interval width settles as iterations grow")
    {
        // Percentile endpoints converge; a 100-replicate interval is noisy, so allow a loose band.
        BootstrapSettings s;
        s.iterations = 100;
        const auto small = bootstrap_correlation(x, y, bootstrap_indices(x.size(), s), s.level);
        s.iterations = 10000;
        const auto large = bootstrap_correlation(x, y, bootstrap_indices(x.size(), s), s.level);
        CHECK((large.hi - large.lo) <= (small.hi - small.lo) + 0.15);
    }
}

TEST_CASE("comparing variants with behavioral data")
{
    std::vector<BehavioralRecord> data;
    std::vector<Prediction> preds;
    for (int id = 1; id <= 6; ++id) {
        BehavioralRecord r;
        r.problem_id = id;
        r.p_one_hand_lab = 0.1 * id;
        if (id != 3) {
            r.mean_judgment_online = 0.9 - 0.1 * id;
        }
        data.push_back(r);
        preds.push_back(pred("good", id, 0.1 * id + 0.05));
        preds.push_back(pred("noisy", id, id % 2 ? 0.8 : 0.2));
    }
    BootstrapSettings s;
    s.iterations = 2000;
    const auto res = compare(preds, data, s);
    REQUIRE(res.reports.size() == 4);
    CHECK(res.reports[0].variant == "good");
    CHECK(res.reports[0].target == "lab");
    CHECK(std::abs(*res.reports[0].r - 1.0) < 1e-12);
    CHECK(res.reports[0].n == 6);
    CHECK(res.reports[2].target == "online");
    CHECK(res.reports[2].n == 5);
    CHECK(std::abs(*res.reports[2].r + 1.0) < 1e-12);

    // good vs noisy on lab data: good wins except in replicates drawing only two distinct
    // problems, where both correlations are +-1 and may tie.
    bool found = false;
    for (const auto& t : res.pairwise) {
        if (t.a == "good" && t.b == "noisy" && t.target == "lab") {
            CHECK(t.p < 0.01);
            found = true;
        }
    }
    CHECK(found);

    SUBCASE("identical to data gives r = 1")
    {
        std::vector<Prediction> same;
        for (const auto& r : data) {
            same.push_back(pred("copy", r.problem_id, *r.p_one_hand_lab));
        }
        CHECK(*compare(same, data, s).reports[0].r == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("id mismatch and too few problems are errors")
    {
        auto extra = preds;
        extra.push_back(pred("good", 99, 0.5));
        CHECK_THROWS_WITH_AS(compare(extra, data, s), doctest::Contains("do not match"), std::runtime_error);
        std::vector<BehavioralRecord> two(data.begin(), data.begin() + 2);
        std::vector<Prediction> p2{pred("good", 1, 0.1), pred("good", 2, 0.3)};
        CHECK_THROWS_WITH_AS(compare(p2, two, s), doctest::Contains("at least three"), std::runtime_error);
    }
    SUBCASE("constant predictions leave r undefined")
    {
        std::vector<Prediction> flat;
        for (const auto& r : data) {
            flat.push_back(pred("flat", r.problem_id, 0.5));
        }
        CHECK_FALSE(compare(flat, data, s).reports[0].r.has_value());
    }
}
