#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/loco.hpp"
#include "mrpval/model.hpp"
#include "mrpval/reference.hpp"
#include "mrpval/simulation.hpp"

using namespace mrpval;

namespace {

struct Pair {
    PostStratTable table;
    CellProbDraws a;
    CellProbDraws b;
    PsisResult pa;
    PsisResult pb;
    Permutation perm;
};

Pair make_pair(SamplingConstraint c, std::uint64_t seed) {
    SimConfig cfg;
    cfg.population_size = 2000;
    cfg.sample_size = 300;
    cfg.constraint = c;
    cfg.seed = seed;
    const auto pop = generate_population(cfg);
    Pair p;
    p.table = build_table(pop, draw_sample(pop, cfg));
    McmcConfig mc = McmcConfig::desk();
    mc.warmup = 200;
    mc.iterations = 400;
    mc.seed = seed;
    p.a = fit(ModelSpec::preset("precision"), p.table, mc);
    p.a.label = "precision";
    p.b = fit(ModelSpec::preset("full"), p.table, mc);
    p.b.label = "full";
    p.pa = compute_psis(p.a, p.table, 5);
    p.pb = compute_psis(p.b, p.table, 5);
    p.perm = Permutation(p.a.num_draws(), 9);
    return p;
}

}  // namespace

TEST(EnergyScore, SelfComparisonIsExactlyZero) {
    std::mt19937_64 eng(41);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t J = 1 + eng() % 10;
        const std::size_t B = 2 + eng() % 40;
        const auto t = fixtures::random_table(J, eng);
        const auto x = fixtures::random_draws(B, J, eng);
        const Permutation perm(B, eng());
        EXPECT_EQ(energy_score(x, x, t, cell_set(t, CellSetDescriptor::population()), perm), 0.0);
    }
}

TEST(EnergyScore, ReducesToCrpsForPointMass) {
    std::mt19937_64 eng(42);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t J = 1 + eng() % 10;
        const std::size_t B = 2 + eng() % 40;
        const auto t = fixtures::random_table(J, eng);
        const auto x = fixtures::random_draws(B, J, eng);
        const auto y = fixtures::random_draws(B, J, eng);
        const Permutation perm(B, eng());
        const auto all = cell_set(t, CellSetDescriptor::population());

        const auto truth = t.true_probs();
        DrawMatrix point(B, J);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < J; ++j) point(b, j) = truth[j];
        }
        EXPECT_EQ(energy_score(x, point, t, all, perm), crps_cellwise(x, t, all, truth, perm));
    }
}

TEST(EnergyScore, SeparatedDistributionsScoreBelowMatchedOnes) {
    std::mt19937_64 eng(43);
    const auto t = fixtures::random_table(8, eng);
    const auto all = cell_set(t, CellSetDescriptor::population());
    const auto x = fixtures::random_draws(2000, 8, eng);
    const auto y = fixtures::random_draws(2000, 8, eng);
    auto shifted = y;
    for (std::size_t b = 0; b < 2000; ++b) {
        for (std::size_t j = 0; j < 8; ++j) shifted(b, j) += 0.5;
    }
    const Permutation perm(2000, 4);
    const double same = energy_score(x, y, t, all, perm);
    const double apart = energy_score(x, shifted, t, all, perm);
    EXPECT_NEAR(same, 0.0, 0.01);
    EXPECT_LT(apart, -0.3);
}

TEST(Reference, SelfReferenceScoresAreZero) {
    auto p = make_pair(SamplingConstraint::AllCellsObserved, 3);
    const FittedModel m{&p.b, &p.pb, nullptr};
    const ReferencePair self{m, m, &p.table, &p.perm};
    const auto all = cell_set(p.table, CellSetDescriptor::population());
    for (auto form : {ReferenceForm::Full, ReferenceForm::Psis}) {
        EXPECT_EQ(ref_se(self, all, form), 0.0);
        EXPECT_EQ(ref_crps(self, all, form), 0.0);
    }
    const CellSet none;
    EXPECT_EQ(partial_ref_se(self, all, none), 0.0);
    EXPECT_EQ(partial_ref_crps(self, all, none), 0.0);
    EXPECT_THROW(ref_se(self, all, ReferenceForm::Loco), InvalidConfig);
}

TEST(Reference, SeIsSquaredWeightedMeanDifference) {
    auto p = make_pair(SamplingConstraint::AllCellsObserved, 4);
    const ReferencePair pair{{&p.a, &p.pa, nullptr}, {&p.b, &p.pb, nullptr}, &p.table, &p.perm};
    const auto set = cell_set(p.table, CellSetDescriptor::level_of(1, 2));
    const auto ma = p.a.probs.column_means();
    const auto mb = p.b.probs.column_means();
    double s = 0.0, w = 0.0;
    for (auto j : set.members) {
        s += p.table.weights()[j] * (ma[j] - mb[j]);
        w += p.table.weights()[j];
    }
    EXPECT_NEAR(ref_se(pair, set), (s / w) * (s / w), 1e-15);
    EXPECT_LE(ref_crps(pair, set), 0.0);
}

TEST(Combined, NoUnobservedCellsReducesToPsisLoco) {
    auto p = make_pair(SamplingConstraint::AllCellsObserved, 5);
    const auto all = cell_set(p.table, CellSetDescriptor::population());
    const CellSet none;
    const auto proxy = sample_proxy_truths(p.table);
    const FittedModel cand{&p.a, &p.pa, nullptr};
    const FittedModel ref{&p.b, &p.pb, nullptr};
    EXPECT_NEAR(combined_se(cand, ref, p.table, all, none, proxy), psis_loco_se(p.a, p.pa, p.table, all, proxy),
                1e-12);
    EXPECT_EQ(combined_crps(cand, ref, p.table, all, none, proxy, p.perm),
              psis_loco_crps(p.a, p.pa, p.table, all, proxy, p.perm));
    EXPECT_EQ(combined_crps(cand, FittedModel{}, p.table, all, none, proxy, p.perm),
              psis_loco_crps(p.a, p.pa, p.table, all, proxy, p.perm));
}

TEST(Combined, UnobservedCellsUseReferenceMeans) {
    auto p = make_pair(SamplingConstraint::AllLevelsObserved, 6);
    const auto obs = cell_set(p.table, CellSetDescriptor::observed());
    const auto unobs = cell_set(p.table, CellSetDescriptor::unobserved());
    ASSERT_FALSE(unobs.empty());
    const auto proxy = sample_proxy_truths(p.table, obs);
    const FittedModel cand{&p.a, &p.pa, nullptr};
    const FittedModel ref{&p.b, &p.pb, nullptr};
    const auto loco = psis_cell_means(p.a, p.pa);
    const auto fa = p.a.probs.column_means();
    const auto fb = p.b.probs.column_means();
    double s = 0.0;
    for (auto j : obs.members) s += p.table.weights()[j] * (loco[j] - proxy[j]);
    for (auto j : unobs.members) s += p.table.weights()[j] * (fa[j] - fb[j]);
    s /= p.table.total();
    EXPECT_NEAR(combined_se(cand, ref, p.table, obs, unobs, proxy), s * s, 1e-15);
    EXPECT_LE(combined_crps(cand, ref, p.table, obs, unobs, proxy, p.perm), 0.0);
    EXPECT_THROW(combined_se(cand, FittedModel{}, p.table, obs, unobs, proxy), InvalidConfig);
}

TEST(Partial, RequiresAPartition) {
    auto p = make_pair(SamplingConstraint::AllLevelsObserved, 7);
    const ReferencePair pair{{&p.a, &p.pa, nullptr}, {&p.b, &p.pb, nullptr}, &p.table, &p.perm};
    const auto obs = cell_set(p.table, CellSetDescriptor::observed());
    const auto unobs = cell_set(p.table, CellSetDescriptor::unobserved());
    const auto all = cell_set(p.table, CellSetDescriptor::population());
    EXPECT_THROW(partial_ref_se(pair, obs, all), BadPartition);
    EXPECT_THROW(partial_ref_se(pair, obs, CellSet{}), BadPartition);
    EXPECT_THROW(partial_ref_se(pair, all, CellSet{}), UnobservedCell);
    EXPECT_GE(partial_ref_se(pair, obs, unobs), 0.0);
    EXPECT_LE(partial_ref_crps(pair, obs, unobs), 0.0);
}

TEST(ReferenceCheck, FullReferenceAgreesWithItself) {
    auto p = make_pair(SamplingConstraint::AllLevelsObserved, 8);
    const FittedModel a{&p.a, &p.pa, nullptr};
    const FittedModel b{&p.b, &p.pb, nullptr};
    const auto check = reference_check({a, b}, b, p.table, p.perm);
    ASSERT_EQ(check.candidates.size(), 2u);
    EXPECT_EQ(check.ref_se[1], 0.0);
    EXPECT_EQ(check.ref_crps[1], 0.0);
    EXPECT_GT(check.ref_se[0], 0.0);
    EXPECT_NE(check.to_json().find("tau_se"), std::string::npos);
}
