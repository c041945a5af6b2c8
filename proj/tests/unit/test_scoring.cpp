#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/mrp.hpp"
#include "mrpval/scoring.hpp"

using namespace mrpval;

TEST(CellVsAggregate, MeanOfCellScoresVersusAggregate) {
    const std::vector<double> w{1.0, 1.0};
    const std::vector<double> truth{0.0, 0.0};
    const std::vector<double> m1{0.0, 1.0};
    const std::vector<double> m2{-2.0, 2.0};
    EXPECT_EQ(mean_cell_se(m1, truth, w), 0.5);
    EXPECT_EQ(mean_cell_se(m2, truth, w), 4.0);
    EXPECT_EQ(se_cellwise(m1, truth, w), 0.25);
    EXPECT_EQ(se_cellwise(m2, truth, w), 0.0);
}

TEST(Scoring, SeDirectEqualsCellwiseOnRandomTables) {
    std::mt19937_64 eng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t J = 2 + eng() % 20;
        const auto table = fixtures::random_table(J, eng);
        const auto draws = fixtures::random_draws(40, J, eng);
        const auto all = cell_set(table, CellSetDescriptor::population());
        const auto est = aggregate(draws, table, all);
        const auto truths = table.true_probs();
        EXPECT_NEAR(se_direct(est, table.population_mean()), se_cellwise(draws, table, all, truths), 1e-12);
    }
}

TEST(Scoring, CrpsDirectEqualsCellwiseUnderSharedPermutation) {
    std::mt19937_64 eng(22);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t J = 2 + eng() % 20;
        const std::size_t B = 3 + eng() % 60;
        const auto table = fixtures::random_table(J, eng);
        const auto draws = fixtures::random_draws(B, J, eng);
        const Permutation perm(B, eng());
        const auto all = cell_set(table, CellSetDescriptor::population());
        const auto est = aggregate(draws, table, all);
        EXPECT_NEAR(crps_draws(est, table.population_mean(), perm),
                    crps_cellwise(draws, table, all, table.true_probs(), perm), 1e-12);
    }
}

TEST(Scoring, CrpsNonPositiveAndZeroAtDegenerateTruth) {
    std::mt19937_64 eng(23);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t B = 1 + eng() % 30;
        std::vector<double> x(B);
        for (auto& v : x) v = nd(eng);
        const Permutation perm(B, eng());
        EXPECT_LE(crps_draws(x, nd(eng), perm), 0.0);
    }
    const std::vector<double> same(17, 0.3);
    EXPECT_EQ(crps_draws(same, 0.3, Permutation(17, 1)), 0.0);
    EXPECT_LT(crps_draws(same, 0.4, Permutation(17, 1)), 0.0);
}

TEST(Scoring, CrpsPointMassIsNegativeAbsoluteError) {
    const std::vector<double> x(10, 2.0);
    EXPECT_DOUBLE_EQ(crps_draws(x, -1.0, Permutation(10, 3)), -3.0);
}

TEST(Scoring, CrpsMatchesClosedFormForTwoPoints) {
    // Draws {0, 1} swapped: E|X - X'| estimate = 1, E|X - y| = (|y| + |1 - y|) / 2.
    const std::vector<double> x{0.0, 1.0};
    const Permutation perm(std::vector<std::size_t>{1, 0});
    EXPECT_DOUBLE_EQ(crps_draws(x, 2.0, perm), 0.5 - 1.5);
    EXPECT_DOUBLE_EQ(crps_draws(x, 0.5, perm), 0.0);
}

TEST(Scoring, MeanCellSeBoundsCellwiseSe) {
    std::mt19937_64 eng(24);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t J = 1 + eng() % 15;
        const auto table = fixtures::random_table(J, eng);
        const auto draws = fixtures::random_draws(5, J, eng);
        const auto all = cell_set(table, CellSetDescriptor::population());
        const auto t = table.true_probs();
        EXPECT_GE(mean_cell_se(draws, table, all, t) + 1e-15, se_cellwise(draws, table, all, t));
    }
}

TEST(Scoring, SubsetScoresUseOnlyMembers) {
    std::mt19937_64 eng(25);
    const auto table = fixtures::random_table(6, eng);
    auto draws = fixtures::random_draws(20, 6, eng);
    const auto set = cell_set(table, CellSetDescriptor::explicit_ids({1, 4}));
    std::vector<double> truths(6, std::nan(""));
    truths[1] = 0.2;
    truths[4] = 0.9;
    const Permutation perm(20, 5);
    const double se = se_cellwise(draws, table, set, truths);
    const double crps = crps_cellwise(draws, table, set, truths, perm);
    for (std::size_t b = 0; b < 20; ++b) {
        draws(b, 0) = 100.0;
        draws(b, 5) = -100.0;
    }
    EXPECT_EQ(se_cellwise(draws, table, set, truths), se);
    EXPECT_EQ(crps_cellwise(draws, table, set, truths, perm), crps);
}

TEST(Scoring, MissingTruthsReported) {
    std::mt19937_64 eng(26);
    const auto table = fixtures::random_table(4, eng);
    const auto draws = fixtures::random_draws(6, 4, eng);
    std::vector<double> truths{0.1, std::nan(""), 0.3, std::nan("")};
    const auto all = cell_set(table, CellSetDescriptor::population());
    try {
        se_cellwise(draws, table, all, truths);
        FAIL();
    } catch (const UnobservedCell& e) {
        EXPECT_EQ(e.cells(), (std::vector<std::size_t>{1, 3}));
    }
}

TEST(Scoring, EmptySetAndLengthErrors) {
    std::mt19937_64 eng(27);
    const auto table = fixtures::random_table(3, eng);
    const auto draws = fixtures::random_draws(4, 3, eng);
    const CellSet empty;
    EXPECT_THROW(aggregate(draws, table, empty), EmptySet);
    EXPECT_THROW(se_cellwise(draws, table, empty, table.true_probs()), EmptySet);
    const std::vector<double> a{1.0, 2.0};
    const std::vector<double> b{1.0};
    EXPECT_THROW(se_cellwise(a, b, a), LengthMismatch);
    const std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_THROW(crps_draws(x, 0.0, Permutation(4, 1)), LengthMismatch);
}

TEST(Permutation, IsAnInvolution) {
    for (std::size_t B : {1u, 2u, 7u, 500u, 1001u}) {
        const Permutation p(B, B * 31);
        std::set<std::size_t> image;
        for (std::size_t b = 0; b < B; ++b) {
            EXPECT_EQ(p[p[b]], b);
            image.insert(p[b]);
        }
        EXPECT_EQ(image.size(), B);
        EXPECT_EQ(p.fixed_points(), B % 2);
    }
}

TEST(Permutation, DeterministicInSeed) {
    EXPECT_EQ(Permutation(100, 9).map(), Permutation(100, 9).map());
    EXPECT_NE(Permutation(100, 9).map(), Permutation(100, 10).map());
    EXPECT_THROW(Permutation(std::vector<std::size_t>{0, 0}), InvalidConfig);
}

TEST(Aggregate, WeightedMeanOverSet) {
    const auto table = fixtures::toy_table({1, 3}, {1, 1}, {0, 1});
    DrawMatrix m(2, 2);
    m(0, 0) = 0.0;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    m(1, 1) = 0.0;
    const auto est = aggregate(m, table, cell_set(table, CellSetDescriptor::population()));
    EXPECT_DOUBLE_EQ(est.values[0], 0.75);
    EXPECT_DOUBLE_EQ(est.values[1], 0.25);
    EXPECT_DOUBLE_EQ(point_estimate(est), 0.5);
}
