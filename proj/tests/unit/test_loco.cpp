#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "mrpval/diagnostics.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/loco.hpp"
#include "mrpval/model.hpp"
#include "mrpval/simulation.hpp"

using namespace mrpval;

namespace {

PostStratTable desk_table(std::uint64_t seed) {
    SimConfig cfg;
    cfg.population_size = 2000;
    cfg.sample_size = 300;
    cfg.seed = seed;
    const auto pop = generate_population(cfg);
    return build_table(pop, draw_sample(pop, cfg));
}

// Bulk ESS of column j, split back into the fit's chains.
double chain_ess(const CellProbDraws& d, std::size_t j) {
    diagnostics::Chains chains;
    for (std::size_t b = 0; b < d.num_draws(); ++b) {
        const auto c = static_cast<std::size_t>(d.provenance[b].chain);
        if (chains.size() <= c) chains.resize(c + 1);
        chains[c].push_back(d.probs(b, j));
    }
    return diagnostics::bulk_ess(chains);
}

double sd(const std::vector<double>& x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace

TEST(RawRatios, NormalizedInverseLikelihood) {
    const auto t = fixtures::toy_table({6, 6}, {6, 6}, {2, 3});
    McmcConfig mc;
    mc.warmup = 100;
    mc.iterations = 100;
    mc.thin = 1;
    const auto d = fit(ModelSpec::preset("x1_only"), t, mc);
    const auto r = raw_ratios(d, 0, 6, 2);
    const auto ll = log_lik_cell(d, 0, 6, 2);
    EXPECT_DOUBLE_EQ(*std::max_element(r.begin(), r.end()), 1.0);
    const double lo = *std::min_element(ll.begin(), ll.end());
    for (std::size_t b = 0; b < r.size(); ++b) EXPECT_NEAR(r[b], std::exp(lo - ll[b]), 1e-12);
}

TEST(Loco, ImportanceWeightsMatchBruteForceOnTwoCellToy) {
    // Intercept-only model on two cells. Holding out the small cell barely moves the
    // posterior, so raw importance ratios are well behaved there.
    const auto t = fixtures::toy_table({10, 40}, {3, 30}, {1, 18});
    McmcConfig mc;
    mc.warmup = 1000;
    mc.iterations = 10000;
    mc.thin = 1;
    mc.seed = 5;
    const auto spec = ModelSpec::preset("intercept");
    const auto full = fit(spec, t, mc);
    const std::size_t j = 0;
    const auto& c = t.cell(j);
    const auto r = raw_ratios(full, j, c.sample_count, c.sample_successes);
    const auto col = full.probs.column(j);
    double sw = 0.0, swx = 0.0, sw2 = 0.0;
    for (std::size_t b = 0; b < r.size(); ++b) {
        sw += r[b];
        swx += r[b] * col[b];
        sw2 += r[b] * r[b];
    }
    const double is_mean = swx / sw;
    const double is_ess = sw * sw / sw2 * chain_ess(full, j) / static_cast<double>(col.size());

    FitOptions opt;
    opt.held_out_cell = j;
    const auto loo = fit(spec, t, mc, opt);
    const auto lcol = loo.probs.column(j);
    const double bf_mean = std::accumulate(lcol.begin(), lcol.end(), 0.0) / static_cast<double>(lcol.size());
    const double s = sd(lcol);
    const double err = std::sqrt(s * s / chain_ess(loo, j) + s * s / is_ess);
    EXPECT_NEAR(is_mean, bf_mean, 4.0 * err);
    EXPECT_LT(err, 0.005);
    // Held out, the cell's prediction moves away from its own proportion 1/3 towards 18/30.
    const double full_mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    EXPECT_GT(bf_mean, full_mean);

    // Holding out the large cell is a big perturbation, which PSIS reports.
    const auto psis = compute_psis(full, t, 1);
    EXPECT_LT(psis.khat[0], 0.5);
    EXPECT_GT(psis.khat[1], psis.khat[0]);
}

TEST(Loco, HeldOutPredictionMovesAwayFromObservedProportion) {
    const auto t = desk_table(12);
    const auto spec = ModelSpec::preset("full");
    const auto mc = McmcConfig::desk();
    const auto full = fit(spec, t, mc);
    std::vector<std::size_t> ids;
    for (std::size_t j = 0; j < t.size() && ids.size() < 25; j += 7) ids.push_back(j);
    const auto targets = cell_set(t, CellSetDescriptor::explicit_ids(ids));
    const auto loco = brute_force_loco(spec, t, mc, full, targets);
    const auto full_means = full.probs.column_means();
    const auto loco_means = loco.probs.column_means();
    double toward = 0.0;
    for (auto j : ids) {
        ASSERT_TRUE(loco.available[j]);
        const auto& c = t.cell(j);
        const double proxy = static_cast<double>(c.sample_successes) / static_cast<double>(c.sample_count);
        const double dir = proxy > full_means[j] ? 1.0 : -1.0;
        toward += dir * (loco_means[j] - full_means[j]);
    }
    EXPECT_LT(toward / static_cast<double>(ids.size()), 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (std::find(ids.begin(), ids.end(), j) == ids.end()) {
            EXPECT_FALSE(loco.available[j]);
            EXPECT_TRUE(std::isnan(loco.probs(0, j)));
        }
    }
    EXPECT_EQ(loco.rhat.size(), t.size());
}

TEST(Psis, ResultsCoverObservedCellsOnly) {
    const auto t = fixtures::toy_table({6, 6, 6}, {4, 0, 6}, {1, 0, 5});
    McmcConfig mc;
    mc.warmup = 200;
    mc.iterations = 200;
    mc.thin = 1;
    const auto d = fit(ModelSpec::preset("x1_only"), t, mc);
    const auto p = compute_psis(d, t, 42);
    EXPECT_TRUE(p.has(0));
    EXPECT_FALSE(p.has(1));
    EXPECT_TRUE(p.has(2));
    EXPECT_TRUE(std::isnan(p.khat[1]));
    EXPECT_EQ(p.resample[0].size(), d.num_draws());
    EXPECT_THROW(require_observed(p, cell_set(t, CellSetDescriptor::population())), UnobservedCell);

    const auto rs = resampled_draws(d, p);
    for (std::size_t b = 0; b < d.num_draws(); ++b) {
        EXPECT_EQ(rs(b, 0), d.probs(p.resample[0][b], 0));
        EXPECT_EQ(rs(b, 1), d.probs(b, 1));
    }
    const auto means = psis_cell_means(d, p);
    double sw = 0.0, swx = 0.0;
    for (std::size_t b = 0; b < d.num_draws(); ++b) {
        sw += p.weights[2][b];
        swx += p.weights[2][b] * d.probs(b, 2);
    }
    EXPECT_NEAR(means[2], swx / sw, 1e-12);
    EXPECT_DOUBLE_EQ(means[1], d.probs.column_means()[1]);

    std::ostringstream out;
    write_psis_diagnostics_csv(out, p);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "cell,khat,tail_size,max_raw_ratio,flagged");
}

TEST(Psis, ScoresAreCellwiseScoresOfLocoPredictions) {
    const auto t = desk_table(13);
    const auto d = fit(ModelSpec::preset("nuisance"), t, McmcConfig::desk());
    const auto p = compute_psis(d, t, 7);
    const auto all = cell_set(t, CellSetDescriptor::population());
    const auto proxy = sample_proxy_truths(t);
    const Permutation perm(d.num_draws(), 3);
    EXPECT_EQ(psis_loco_crps(d, p, t, all, proxy, perm), crps_cellwise(resampled_draws(d, p), t, all, proxy, perm));
    const auto means = psis_cell_means(d, p);
    EXPECT_NEAR(psis_loco_se(d, p, t, all, proxy), se_cellwise(means, proxy, t.weights()), 1e-15);
    EXPECT_NEAR(mean_cell_psis_se(d, p, t, all, proxy), mean_cell_se(means, proxy, t.weights()), 1e-15);
}

TEST(LevelAverage, ArithmeticMeanOfLevelRows) {
    std::vector<ScoreRecord> rows;
    for (int l = 0; l < 3; ++l) {
        ScoreRecord r;
        r.target_kind = "level";
        r.target_variable = 2;
        r.target_level = l;
        r.value = 0.1 * (l + 1);
        rows.push_back(r);
    }
    EXPECT_EQ(level_average_score(rows, 3), (0.1 + 0.2 + 0.30000000000000004) / 3.0);
    const std::vector<double> v{0.1, 0.2, 0.30000000000000004};
    EXPECT_EQ(level_average_score(v), level_average_score(rows, 3));
    rows.pop_back();
    EXPECT_THROW(level_average_score(rows, 3), MissingLevel);
}
