#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mrpval/stats.hpp"

using namespace mrpval::stats;

TEST(Stats, RanksAverageTies) {
    const std::vector<double> x{3.0, 1.0, 3.0, 2.0};
    EXPECT_EQ(ranks(x), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Stats, KendallExtremes) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> up{10, 20, 30, 40, 50};
    const std::vector<double> down{5, 4, 3, 2, 1};
    EXPECT_EQ(kendall_tau_b(x, up), 1.0);
    EXPECT_EQ(kendall_tau_b(x, down), -1.0);
    const std::vector<double> flat{1, 1, 1, 1, 1};
    EXPECT_TRUE(std::isnan(kendall_tau_b(x, flat)));
}

TEST(Stats, KendallTauBWithTies) {
    // Two concordant pairs, one tied in y: tau_b = 2 / sqrt(3 * 2).
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{1, 1, 2};
    EXPECT_NEAR(kendall_tau_b(x, y), 2.0 / std::sqrt(3.0 * 2.0), 1e-15);
}

TEST(Stats, SpearmanIsPearsonOfRanks) {
    const std::vector<double> x{1.0, 5.0, 2.0, 9.0, 4.0};
    const std::vector<double> y{1.0, 100.0, 3.0, 1000.0, 10.0};
    EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
    EXPECT_LT(pearson(x, y), 1.0);
    const std::vector<double> z{2.0, 1.0, 4.0, 3.0, 5.0};
    EXPECT_DOUBLE_EQ(spearman(x, z), pearson(ranks(x), ranks(z)));
}
