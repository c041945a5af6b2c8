#include "mrpval/psis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrpval/errors.hpp"
#include "mrpval/rng.hpp"

namespace mrpval {

namespace {

// Profile log-likelihood of the GPD at theta = -k/sigma.
double profile_ll(double theta, std::span<const double> x) {
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta * v);
    k /= static_cast<double>(x.size());
    return std::log(-theta / k) - k - 1.0;
}

}  // namespace

GpdFit gpd_fit_tail(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 5) throw TailTooSmall("need at least 5 tail values");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] >= 0.0) || (i > 0 && x[i] < x[i - 1])) throw InvalidConfig("excesses must be sorted and non-negative");
    }
    const double xstar = x[static_cast<std::size_t>(std::floor(static_cast<double>(n) / 4.0 + 0.5)) - 1];
    if (!(xstar > 0.0) || x.back() == x.front()) throw TailTooSmall("degenerate tail");

    constexpr double prior = 3.0;
    const std::size_t grid = 30 + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    std::vector<double> theta(grid);
    std::vector<double> ll(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        theta[j] = 1.0 / x.back() +
                   (1.0 - std::sqrt(static_cast<double>(grid) / (static_cast<double>(j + 1) - 0.5))) / prior / xstar;
        ll[j] = static_cast<double>(n) * profile_ll(theta[j], x);
    }
    const double top = *std::max_element(ll.begin(), ll.end());
    double norm = 0.0;
    for (double v : ll) norm += std::exp(v - top);
    double theta_hat = 0.0;
    for (std::size_t j = 0; j < grid; ++j) theta_hat += theta[j] * std::exp(ll[j] - top) / norm;

    double k = 0.0;
    for (double v : x) k += std::log1p(-theta_hat * v);
    k /= static_cast<double>(n);
    const double sigma = -k / theta_hat;
    const auto nd = static_cast<double>(n);
    k = k * nd / (nd + 10.0) + 10.0 * 0.5 / (nd + 10.0);
    if (std::isnan(k)) k = std::numeric_limits<double>::infinity();
    return {k, sigma};
}

double gpd_quantile(double p, double k, double sigma) {
    if (k == 0.0) return -sigma * std::log1p(-p);
    return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

std::size_t psis_tail_size(std::size_t draws) {
    const auto b = static_cast<double>(draws);
    return static_cast<std::size_t>(std::ceil(std::min(0.2 * b, 3.0 * std::sqrt(b))));
}

SmoothedWeights psis_smooth(std::span<const double> raw, double khat_threshold) {
    const std::size_t n = raw.size();
    if (n < 2) throw InvalidConfig("need at least two ratios");
    SmoothedWeights out;
    out.weights.assign(raw.begin(), raw.end());
    for (double r : raw) {
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidConfig("ratios must be positive and finite");
    }
    out.max_raw = *std::max_element(raw.begin(), raw.end());
    const std::size_t m = std::min(psis_tail_size(n), n - 1);
    out.tail_size = m;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return raw[a] < raw[b]; });
    const double cutoff = raw[order[n - m - 1]];
    std::vector<double> excess(m);
    for (std::size_t i = 0; i < m; ++i) excess[i] = raw[order[n - m + i]] - cutoff;

    try {
        const auto fit = gpd_fit_tail(excess);
        out.khat = fit.k;
        if (std::isfinite(fit.k)) {
            for (std::size_t i = 0; i < m; ++i) {
                const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
                out.weights[order[n - m + i]] = cutoff + gpd_quantile(p, fit.k, fit.sigma);
            }
        }
    } catch (const TailTooSmall&) {
        out.khat = std::numeric_limits<double>::infinity();
    }
    for (auto& w : out.weights) w = std::min(w, out.max_raw);
    out.flagged = !(out.khat <= khat_threshold);
    return out;
}

std::vector<std::size_t> stratified_resample(std::span<const double> weights, std::uint64_t seed) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> out(n);
    if (n == 0) return out;
    double total = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t b = 0; b < n; ++b) {
        if (!(weights[b] >= 0.0) || !std::isfinite(weights[b])) throw InvalidConfig("weights must be finite and non-negative");
        total += weights[b];
        if (weights[b] > 0.0) last_positive = b;
    }
    if (!(total > 0.0)) throw AllZeroWeights("all resampling weights are zero");
    if (std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; })) {
        std::iota(out.begin(), out.end(), 0);
        return out;
    }
    std::vector<double> cum(n);
    double s = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        s += weights[b];
        cum[b] = s / total;
    }
    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto nd = static_cast<double>(n);
    for (std::size_t b = 0; b < n; ++b) {
        const double u = (static_cast<double>(b) + unif(eng)) / nd;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const auto idx = static_cast<std::size_t>(it - cum.begin());
        out[b] = std::min(idx, last_positive);
    }
    return out;
}

}  // namespace mrpval
