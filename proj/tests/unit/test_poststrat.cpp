#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/scoring.hpp"
#include "mrpval/simulation.hpp"

using namespace mrpval;

namespace {

PostStratTable sim_table(SamplingConstraint c, std::uint64_t seed) {
    SimConfig cfg;
    cfg.population_size = 2000;
    cfg.sample_size = 300;
    cfg.constraint = c;
    cfg.seed = seed;
    const auto pop = generate_population(cfg);
    return build_table(pop, draw_sample(pop, cfg));
}

}  // namespace

TEST(PostStrat, CellCountBoundedByLevelProduct) {
    const auto t = sim_table(SamplingConstraint::AllCellsObserved, 1);
    EXPECT_LE(t.size(), 625u);
    EXPECT_EQ(t.total(), 2000.0);
    double w = 0.0;
    for (auto x : t.weights()) w += x;
    EXPECT_EQ(w, 2000.0);
}

TEST(PostStrat, CellsInLexicographicOrder) {
    const auto t = sim_table(SamplingConstraint::AllCellsObserved, 2);
    for (std::size_t j = 1; j < t.size(); ++j) {
        EXPECT_LT(t.cell(j - 1).levels, t.cell(j).levels);
        EXPECT_EQ(t.cell(j).id, j);
    }
}

TEST(PostStrat, ObservedAndUnobservedPartitionThePopulation) {
    const auto t = sim_table(SamplingConstraint::AllLevelsObserved, 4);
    const auto obs = cell_set(t, CellSetDescriptor::observed());
    const auto unobs = cell_set(t, CellSetDescriptor::unobserved());
    EXPECT_FALSE(unobs.empty());
    std::vector<std::size_t> all;
    std::set_union(obs.members.begin(), obs.members.end(), unobs.members.begin(), unobs.members.end(),
                   std::back_inserter(all));
    EXPECT_EQ(all.size(), t.size());
    std::vector<std::size_t> both;
    std::set_intersection(obs.members.begin(), obs.members.end(), unobs.members.begin(), unobs.members.end(),
                          std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    EXPECT_EQ(obs.size(), t.num_observed());
    EXPECT_DOUBLE_EQ(set_weight(t, obs) + set_weight(t, unobs), t.total());
}

TEST(PostStrat, LevelSetsPartitionEachVariable) {
    const auto t = sim_table(SamplingConstraint::AllCellsObserved, 5);
    for (int k = 0; k < 4; ++k) {
        std::size_t n = 0;
        for (int l = 0; l < 5; ++l) {
            const auto s = cell_set(t, CellSetDescriptor::level_of(k, l));
            for (auto j : s.members) EXPECT_EQ(t.level(j, static_cast<std::size_t>(k)), l);
            n += s.size();
        }
        EXPECT_EQ(n, t.size());
    }
}

TEST(PostStrat, UnknownLevelAndExplicitIds) {
    const auto t = sim_table(SamplingConstraint::AllCellsObserved, 5);
    EXPECT_THROW(cell_set(t, CellSetDescriptor::level_of(7, 0)), UnknownLevel);
    EXPECT_THROW(cell_set(t, CellSetDescriptor::level_of(0, 9)), UnknownLevel);
    EXPECT_THROW(cell_set(t, CellSetDescriptor::explicit_ids({t.size()})), UnknownLevel);
    const auto s = cell_set(t, CellSetDescriptor::explicit_ids({3, 1, 2}));
    EXPECT_EQ(s.members, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(PostStrat, TableTruthMatchesPopulationMean) {
    SimConfig cfg;
    cfg.population_size = 2000;
    cfg.sample_size = 300;
    cfg.seed = 6;
    const auto pop = generate_population(cfg);
    const auto t = build_table(pop, draw_sample(pop, cfg));
    double s = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) s += pop.outcome[i];
    EXPECT_NEAR(t.population_mean(), s / static_cast<double>(pop.size()), 1e-12);
}

TEST(PostStrat, SampleProxyIsObservedProportion) {
    const auto t = fixtures::toy_table({10, 10, 10}, {1, 1, 4}, {1, 0, 3});
    const auto p = sample_proxy_truths(t);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_EQ(p[2], 0.75);
}

TEST(PostStrat, SampleProxyListsUnobservedCells) {
    const auto t = fixtures::toy_table({10, 10, 10, 10}, {1, 0, 4, 0}, {1, 0, 3, 0});
    try {
        sample_proxy_truths(t);
        FAIL() << "expected UnobservedCell";
    } catch (const UnobservedCell& e) {
        EXPECT_EQ(e.cells(), (std::vector<std::size_t>{1, 3}));
    }
}
