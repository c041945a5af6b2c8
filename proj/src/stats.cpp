#include "mrpval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrpval/errors.hpp"

namespace mrpval::stats {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("samples differ in length");
    if (x.size() < 2) throw InvalidConfig("need at least two observations");
}

}  // namespace

std::vector<double> ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

double mean(std::span<const double> x) {
    if (x.empty()) throw EmptySet("mean of nothing");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    double concordant = 0.0;
    double discordant = 0.0;
    double ties_x = 0.0;
    double ties_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (concordant - discordant) / denom;
}

}  // namespace mrpval::stats
