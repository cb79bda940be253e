#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "gradapt/alignment.hpp"
#include "gradapt/common.hpp"

using namespace gradapt;

namespace {

// Brute-force oracle: with uniform marginals on an m x m cost matrix the
// exact transport optimum sits on a permutation (Birkhoff), so enumerate all
// m! assignments and take the best mean matched cost.
double brute_force_assignment_cost(const MatD& c) {
    REQUIRE(c.rows == c.cols);
    std::vector<int> perm(static_cast<std::size_t>(c.rows));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0;
        for (int i = 0; i < c.rows; ++i) total += c.at(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, total / c.rows);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double transport_cost(const TransportPlan& plan, const MatD& c) {
    double total = 0;
    for (std::size_t j = 0; j < c.data.size(); ++j) total += plan.p.data[j] * c.data[j];
    return total;
}

MatD random_integer_cost(int m, Rng& rng) {
    std::uniform_int_distribution<int> entry(0, 9);
    MatD c(m, m);
    for (double& v : c.data) v = entry(rng);
    return c;
}

MatF matf_from(std::initializer_list<std::initializer_list<float>> rows) {
    MatF m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (float v : row) m.at(r, c++) = v;
        ++r;
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sinkhorn against the assignment oracle
// ---------------------------------------------------------------------------

TEST_CASE("sinkhorn at small epsilon matches brute-force assignment on 4x4 instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        MatD c = random_integer_cost(4, rng);
        TransportPlan plan = sinkhorn(c, 1e-3);
        CHECK(plan.converged);
        CHECK(plan.marginal_error < 1e-6);
        const double opt = brute_force_assignment_cost(c);
        const double got = transport_cost(plan, c);
        CHECK(got <= opt * 1.01 + 1e-9);
        // The entropic cost cannot beat the exact optimum beyond the slack
        // the 1e-6 marginal tolerance leaves in the total mass.
        CHECK(got >= opt - 1e-4);
    }
}

TEST_CASE("sinkhorn reproduces the exact 2x2 optimum") {
    MatD c(2, 2);
    c.at(0, 1) = 1.0;
    c.at(1, 0) = 1.0;
    TransportPlan plan = sinkhorn(c, 0.01);
    CHECK(plan.converged);
    CHECK(plan.p.at(0, 0) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(plan.p.at(1, 1) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(plan.p.at(0, 1) < 1e-3);
    CHECK(plan.p.at(1, 0) < 1e-3);
    CHECK(transport_cost(plan, c) == doctest::Approx(brute_force_assignment_cost(c)).epsilon(0.01));
}

TEST_CASE("constant costs give the uniform outer-product plan") {
    MatD c(3, 5, 2.5);
    TransportPlan plan = sinkhorn(c, 0.1);
    CHECK(plan.converged);
    for (double v : plan.p.data) CHECK(v == doctest::Approx(1.0 / 15).epsilon(1e-6));
}

TEST_CASE("huge epsilon drives the plan toward uniform") {
    MatD c(2, 2);
    c.at(0, 1) = 1.0;
    c.at(1, 0) = 1.0;
    TransportPlan plan = sinkhorn(c, 1e6);
    for (double v : plan.p.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("rectangular plans converge to both marginals") {
    Rng rng(7);
    std::uniform_real_distribution<double> entry(0.0, 3.0);
    MatD c(3, 7);
    for (double& v : c.data) v = entry(rng);
    TransportPlan plan = sinkhorn(c, 0.05);
    CHECK(plan.converged);
    for (int i = 0; i < 3; ++i) {
        double row = 0;
        for (int j = 0; j < 7; ++j) row += plan.p.at(i, j);
        CHECK(row == doctest::Approx(1.0 / 3).epsilon(1e-5));
    }
    for (int j = 0; j < 7; ++j) {
        double col = 0;
        for (int i = 0; i < 3; ++i) col += plan.p.at(i, j);
        CHECK(col == doctest::Approx(1.0 / 7).epsilon(1e-5));
    }
}

TEST_CASE("sinkhorn input validation and convergence reporting") {
    MatD c(2, 2, 1.0);
    CHECK_THROWS_AS(sinkhorn(c, 0.0), ConfigError);
    MatD bad = c;
    bad.at(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(sinkhorn(bad, 0.1), NumericError);

    // A starved iteration budget reports non-convergence instead of failing.
    Rng rng(9);
    MatD spread = random_integer_cost(4, rng);
    TransportPlan starved = sinkhorn(spread, 1e-3, 2);
    CHECK_FALSE(starved.converged);
    CHECK(starved.iterations == 2);
}

TEST_CASE("default epsilon rule is five percent of the mean cost") {
    MatD c(2, 2);
    c.at(0, 0) = 1.0;
    c.at(0, 1) = 2.0;
    c.at(1, 0) = 3.0;
    c.at(1, 1) = 4.0;
    CHECK(default_sinkhorn_epsilon(c) == doctest::Approx(0.05 * 2.5));
}

// ---------------------------------------------------------------------------
// Random alignment
// ---------------------------------------------------------------------------

TEST_CASE("random_align is uniform over targets") {
    AlignmentPlan one = random_align(5, 1, 3);
    CHECK(one.index_t == std::vector<int>{0, 0, 0, 0, 0});
    CHECK(one.index_s == std::vector<int>{0, 1, 2, 3, 4});

    AlignmentPlan a = random_align(100, 7, 11);
    AlignmentPlan b = random_align(100, 7, 11);
    CHECK(a.index_t == b.index_t);

    // Multinomial oracle: 10^4 draws over 4 targets, each count within 5
    // sigma of n*p (sigma = sqrt(n*p*(1-p)) ~ 43.3).
    AlignmentPlan big = random_align(10000, 4, 123);
    std::vector<int> counts(4, 0);
    for (int j : big.index_t) counts[static_cast<std::size_t>(j)]++;
    for (int k = 0; k < 4; ++k) {
        CHECK(counts[static_cast<std::size_t>(k)] > 2500 - 217);
        CHECK(counts[static_cast<std::size_t>(k)] < 2500 + 217);
    }
}

// ---------------------------------------------------------------------------
// Label-based random alignment
// ---------------------------------------------------------------------------

TEST_CASE("label_random_align pairs equal labels when a match exists") {
    const std::vector<int> y_s = {0, 1};
    const std::vector<int> y_t = {1, 0, 1};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        AlignmentPlan plan = label_random_align(y_s, y_t, seed);
        CHECK(plan.index_t[0] == 1);  // the only label-0 target
        CHECK((plan.index_t[1] == 0 || plan.index_t[1] == 2));
    }
}

TEST_CASE("label_random_align matches the brute-force matcher on random instances") {
    Rng rng(33);
    std::uniform_int_distribution<int> cls(0, 3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<int> y_s(50), y_t(40);
        for (int& y : y_s) y = cls(rng);
        for (int& y : y_t) y = cls(rng);

        int fallbacks = -1;
        AlignmentPlan plan = label_random_align(y_s, y_t, 1000 + trial, &fallbacks);

        int expected_fallbacks = 0;
        for (std::size_t i = 0; i < y_s.size(); ++i) {
            // Brute-force match set for source i.
            std::set<int> matches;
            for (std::size_t j = 0; j < y_t.size(); ++j)
                if (y_t[j] == y_s[i]) matches.insert(static_cast<int>(j));
            if (matches.empty()) {
                ++expected_fallbacks;
            } else {
                CHECK(matches.count(plan.index_t[i]) == 1);
                CHECK(y_t[static_cast<std::size_t>(plan.index_t[i])] == y_s[i]);
            }
        }
        CHECK(fallbacks == expected_fallbacks);
    }
}

TEST_CASE("label_random_align fallback is uniform over all targets") {
    const std::vector<int> y_s = {0};
    const std::vector<int> y_t = {1, 1, 1, 1};
    std::vector<int> counts(4, 0);
    const int n = 2000;
    for (int seed = 0; seed < n; ++seed) {
        int fallbacks = 0;
        AlignmentPlan plan = label_random_align(y_s, y_t, static_cast<std::uint64_t>(seed), &fallbacks);
        CHECK(fallbacks == 1);
        counts[static_cast<std::size_t>(plan.index_t[0])]++;
    }
    // 5 sigma around n/4 = 500 (sigma ~ 19.4)
    for (int k = 0; k < 4; ++k) {
        CHECK(counts[static_cast<std::size_t>(k)] > 500 - 97);
        CHECK(counts[static_cast<std::size_t>(k)] < 500 + 97);
    }
}

TEST_CASE("label_random_align picks uniformly among a source's matches") {
    const std::vector<int> y_s = {1};
    const std::vector<int> y_t = {1, 0, 1};
    int first = 0;
    const int n = 2000;
    for (int seed = 0; seed < n; ++seed) {
        AlignmentPlan plan = label_random_align(y_s, y_t, static_cast<std::uint64_t>(seed));
        first += plan.index_t[0] == 0 ? 1 : 0;
    }
    // Binomial 5 sigma around 1000 (sigma ~ 22.4)
    CHECK(first > 1000 - 112);
    CHECK(first < 1000 + 112);
}

// ---------------------------------------------------------------------------
// Cost matrix
// ---------------------------------------------------------------------------

TEST_CASE("cost matrix matches a naive double-loop recomputation") {
    Rng rng(55);
    std::uniform_real_distribution<float> entry(-2.0f, 2.0f);
    std::uniform_int_distribution<int> cls(0, 2);
    MatF z_s(5, 3), z_t(5, 3);
    for (float& v : z_s.data) v = entry(rng);
    for (float& v : z_t.data) v = entry(rng);
    std::vector<int> y_s(5), y_t(5);
    for (int& y : y_s) y = cls(rng);
    for (int& y : y_t) y = cls(rng);

    CostConfig cfg;
    cfg.feature_weight = 1.7;
    cfg.label_penalty = 3.5;
    MatD cost = build_cost_matrix(z_s, z_t, y_s, y_t, cfg);

    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            double expected = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = static_cast<double>(z_s.at(i, c)) - z_t.at(j, c);
                expected += d * d;
            }
            expected *= 1.7;
            if (y_s[static_cast<std::size_t>(i)] != y_t[static_cast<std::size_t>(j)]) expected += 3.5;
            CHECK(cost.at(i, j) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("cost matrix degenerate cases") {
    MatF z = matf_from({{1.0f, 2.0f}, {3.0f, -1.0f}});
    std::vector<int> y = {0, 1};

    CostConfig cfg;
    cfg.label_penalty = 5.0;
    MatD self = build_cost_matrix(z, z, y, y, cfg);
    CHECK(self.at(0, 0) == 0.0);
    CHECK(self.at(1, 1) == 0.0);

    cfg.feature_weight = 0.0;
    MatD label_only = build_cost_matrix(z, z, y, y, cfg);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(label_only.at(i, j) == (i == j ? 0.0 : 5.0));

    MatF wide(2, 3);
    CHECK_THROWS_AS(build_cost_matrix(z, wide, y, y, cfg), ShapeError);
}

TEST_CASE("auto label penalty is ten times the median pairwise squared distance") {
    MatF z_s = matf_from({{0.0f}, {2.0f}});
    MatF z_t = matf_from({{0.0f}, {2.0f}});
    // Pairwise squared distances {0, 4, 4, 0}; upper median 4.
    CHECK(resolve_label_penalty(z_s, z_t) == doctest::Approx(40.0));

    CostConfig cfg;  // label_penalty unset -> auto
    MatD cost = build_cost_matrix(z_s, z_t, {0, 1}, {1, 0}, cfg);
    CHECK(cost.at(0, 0) == doctest::Approx(40.0));   // equal features, labels differ
    CHECK(cost.at(0, 1) == doctest::Approx(4.0));    // distance 4, labels equal
}

// ---------------------------------------------------------------------------
// Pair extraction
// ---------------------------------------------------------------------------

TEST_CASE("plan_to_pairs argmax takes the row maximum with lowest-index ties") {
    TransportPlan plan;
    plan.p = MatD(3, 3);
    plan.p.at(0, 0) = plan.p.at(1, 1) = plan.p.at(2, 2) = 1.0 / 3;
    AlignmentPlan diag = plan_to_pairs(plan, PairMode::argmax_row, 0);
    CHECK(diag.index_t == std::vector<int>{0, 1, 2});
    CHECK(diag.index_s == std::vector<int>{0, 1, 2});

    TransportPlan uniform;
    uniform.p = MatD(3, 3, 1.0 / 9);
    AlignmentPlan ties = plan_to_pairs(uniform, PairMode::argmax_row, 0);
    CHECK(ties.index_t == std::vector<int>{0, 0, 0});
}

TEST_CASE("plan_to_pairs sampling follows the row distribution and is reproducible") {
    TransportPlan plan;
    plan.p = MatD(1, 2);
    plan.p.at(0, 1) = 0.5;  // all row mass on target 1
    for (int seed = 0; seed < 10; ++seed)
        CHECK(plan_to_pairs(plan, PairMode::sample_row, static_cast<std::uint64_t>(seed)).index_t[0] == 1);

    TransportPlan mixed;
    mixed.p = MatD(4, 4, 1.0 / 16);
    AlignmentPlan a = plan_to_pairs(mixed, PairMode::sample_row, 42);
    AlignmentPlan b = plan_to_pairs(mixed, PairMode::sample_row, 42);
    CHECK(a.index_t == b.index_t);
}

TEST_CASE("plan_to_pairs rejects an all-zero row") {
    TransportPlan plan;
    plan.p = MatD(2, 2);
    plan.p.at(0, 0) = 1.0;
    CHECK_THROWS_AS(plan_to_pairs(plan, PairMode::argmax_row, 0), DegeneratePlanError);
}
