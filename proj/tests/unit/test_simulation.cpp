#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "mrpval/errors.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/simulation.hpp"

using namespace mrpval;

TEST(Discretize, EqualWidthBinsLowerEdgeRule) {
    const std::vector<double> v{0, 1, 2, 3, 4, 5};
    const auto d = discretize(v, 5);
    EXPECT_EQ(d.index, (std::vector<int>{0, 0, 1, 2, 3, 4}));
    ASSERT_EQ(d.edges.size(), 6u);
    EXPECT_EQ(d.edges.front(), 0.0);
    EXPECT_EQ(d.edges.back(), 5.0);
}

TEST(Discretize, ZeroRangeThrows) {
    const std::vector<double> v{2, 2, 2};
    EXPECT_THROW(discretize(v, 5), DegenerateCovariate);
}

namespace {

SimConfig small(SamplingConstraint c, std::uint64_t seed) {
    SimConfig cfg;
    cfg.population_size = 2000;
    cfg.sample_size = 300;
    cfg.constraint = c;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(Simulation, SameSeedSamePopulation) {
    const auto cfg = small(SamplingConstraint::AllCellsObserved, 5);
    const auto a = generate_population(cfg);
    const auto b = generate_population(cfg);
    EXPECT_EQ(a.covariates, b.covariates);
    EXPECT_EQ(a.outcome, b.outcome);
    EXPECT_EQ(draw_sample(a, cfg).members, draw_sample(b, cfg).members);
}

TEST(Simulation, OutcomeFollowsCoefficients) {
    SimConfig cfg;
    cfg.seed = 11;
    const auto pop = generate_population(cfg);
    ASSERT_EQ(pop.size(), 20000u);
    for (std::size_t i = 0; i < 50; ++i) {
        double eta = 0.0;
        double zeta = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            eta += cfg.outcome_coefs[k] * pop.x(i, k);
            zeta += cfg.inclusion_coefs[k] * pop.x(i, k);
        }
        EXPECT_NEAR(pop.outcome_prob[i], 1.0 / (1.0 + std::exp(-eta)), 1e-12);
        EXPECT_NEAR(pop.inclusion_prob[i], 1.0 / (1.0 + std::exp(-zeta)), 1e-12);
    }
}

TEST(Simulation, AllCellsObservedCoversEveryCell) {
    const auto cfg = small(SamplingConstraint::AllCellsObserved, 3);
    const auto pop = generate_population(cfg);
    const auto sample = draw_sample(pop, cfg);
    EXPECT_EQ(sample.members.size(), cfg.sample_size);
    const auto table = build_table(pop, sample);
    EXPECT_TRUE(table.all_observed());
    EXPECT_EQ(table.sample_size(), cfg.sample_size);
    const std::set<std::size_t> distinct(sample.members.begin(), sample.members.end());
    EXPECT_EQ(distinct.size(), sample.members.size());
}

TEST(Simulation, AllLevelsObservedCoversEveryLevel) {
    const auto cfg = small(SamplingConstraint::AllLevelsObserved, 3);
    const auto pop = generate_population(cfg);
    const auto table = build_table(pop, draw_sample(pop, cfg));
    for (std::size_t k = 0; k < 4; ++k) {
        for (int l = 0; l < 5; ++l) {
            const auto set = cell_set(table, CellSetDescriptor::level_of(static_cast<int>(k), l));
            std::size_t n = 0;
            for (auto j : set.members) n += table.cell(j).sample_count;
            EXPECT_GT(n, 0u) << "covariate " << k << " level " << l;
        }
    }
    EXPECT_FALSE(table.all_observed());
}

TEST(Simulation, SeededPhaseLargerThanSampleIsInfeasible) {
    auto cfg = small(SamplingConstraint::AllCellsObserved, 3);
    cfg.sample_size = 20;
    const auto pop = generate_population(cfg);
    EXPECT_THROW(draw_sample(pop, cfg), InfeasibleConstraint);
}

TEST(Simulation, InvalidConfigRejected) {
    SimConfig cfg;
    cfg.outcome_coefs = {1.0};
    EXPECT_THROW(cfg.validate(), InvalidConfig);
    cfg = SimConfig{};
    cfg.sample_size = cfg.population_size + 1;
    EXPECT_THROW(cfg.validate(), InvalidConfig);
}

TEST(Simulation, BiasVariableSkewsTheSample) {
    // X4 drives both inclusion and outcome, so the sample over-represents y = 1.
    SimConfig cfg;
    cfg.constraint = SamplingConstraint::Unconstrained;
    double diff = 0.0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        cfg.seed = s;
        const auto pop = generate_population(cfg);
        const auto table = build_table(pop, draw_sample(pop, cfg));
        double ys = 0.0;
        for (const auto& c : table.cells()) ys += static_cast<double>(c.sample_successes);
        diff += ys / static_cast<double>(table.sample_size()) - table.population_mean();
    }
    EXPECT_GT(diff / 5.0, 0.05);
}
