#include "mrpval/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "mrpval/errors.hpp"

namespace mrpval::diagnostics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check(const Chains& chains) {
    if (chains.empty() || chains.front().size() < 4) throw InvalidConfig("need chains with >= 4 draws");
    for (const auto& c : chains) {
        if (c.size() != chains.front().size()) throw LengthMismatch("chains differ in length");
    }
}

Chains split(const Chains& chains) {
    Chains out;
    const std::size_t n = chains.front().size();
    const std::size_t half = n / 2;
    for (const auto& c : chains) {
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

std::vector<double> pooled(const Chains& chains) {
    std::vector<double> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    return all;
}

bool is_constant(const Chains& chains) {
    const double first = chains.front().front();
    for (const auto& c : chains) {
        for (double v : c) {
            if (v != first) return false;
        }
    }
    return true;
}

// Average ranks with ties, then normal scores (Blom offset).
Chains z_scale(const Chains& chains) {
    const auto all = pooled(chains);
    const std::size_t s = all.size();
    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return all[a] < all[b]; });
    std::vector<double> rank(s);
    for (std::size_t i = 0; i < s;) {
        std::size_t j = i;
        while (j + 1 < s && all[order[j + 1]] == all[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
        i = j + 1;
    }
    const boost::math::normal standard;
    Chains out = chains;
    std::size_t idx = 0;
    for (auto& c : out) {
        for (auto& v : c) {
            v = boost::math::quantile(standard, (rank[idx++] - 0.375) / (static_cast<double>(s) + 0.25));
        }
    }
    return out;
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> autocovariance(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> acov(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - mean) * (x[i + t] - mean);
        acov[t] = s / static_cast<double>(n);
    }
    return acov;
}

}  // namespace

double split_rhat_basic(const Chains& chains) {
    check(chains);
    const Chains sc = split(chains);
    if (is_constant(sc)) return kNaN;
    const auto m = static_cast<double>(sc.size());
    const auto n = static_cast<double>(sc.front().size());
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : sc) {
        const double mu = std::accumulate(c.begin(), c.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : c) ss += (v - mu) * (v - mu);
        means.push_back(mu);
        vars.push_back(ss / (n - 1.0));
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double between = 0.0;
    for (double mu : means) between += (mu - grand) * (mu - grand);
    between = n * between / (m - 1.0);
    const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
    if (!(within > 0.0)) return std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * within + between / n;
    return std::sqrt(var_plus / within);
}

double ess_basic(const Chains& chains) {
    if (chains.empty() || chains.front().size() < 4) return kNaN;
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    const double total = static_cast<double>(m * n);
    if (is_constant(chains)) return total;

    std::vector<std::vector<double>> acov;
    std::vector<double> chain_mean;
    std::vector<double> chain_var;
    for (const auto& c : chains) {
        acov.push_back(autocovariance(c));
        chain_mean.push_back(std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n));
        chain_var.push_back(acov.back()[0] * static_cast<double>(n) / (static_cast<double>(n) - 1.0));
    }
    const double mean_var = std::accumulate(chain_var.begin(), chain_var.end(), 0.0) / static_cast<double>(m);
    double var_plus = mean_var * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
    if (m > 1) {
        const double gm = std::accumulate(chain_mean.begin(), chain_mean.end(), 0.0) / static_cast<double>(m);
        double v = 0.0;
        for (double mu : chain_mean) v += (mu - gm) * (mu - gm);
        var_plus += v / static_cast<double>(m - 1);
    }
    if (!(var_plus > 0.0)) return total;

    auto mean_acov = [&](std::size_t t) {
        double s = 0.0;
        for (const auto& a : acov) s += a[t];
        return s / static_cast<double>(m);
    };
    std::vector<double> rho(n, 0.0);
    rho[0] = 1.0;
    double rho_even = 1.0;
    double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = rho_odd;

    // Geyer's initial positive sequence over lag pairs.
    std::size_t t = 1;
    while (t < n - 5 && rho_even + rho_odd > 0.0) {
        rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
        if (rho_even + rho_odd >= 0.0) {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    const std::size_t max_t = t;
    if (rho[max_t] > 0.0) rho[max_t + 1 < n ? max_t + 1 : max_t] = rho[max_t];  // keep odd-lag tail
    // Initial monotone sequence.
    for (std::size_t u = 1; u + 2 <= max_t; u += 2) {
        if (rho[u + 1] + rho[u + 2] > rho[u - 1] + rho[u]) {
            rho[u + 1] = (rho[u - 1] + rho[u]) / 2.0;
            rho[u + 2] = rho[u + 1];
        }
    }
    double tau = -1.0;
    for (std::size_t u = 0; u <= max_t && u < n; ++u) tau += 2.0 * rho[u];
    if (max_t + 1 < n) tau += rho[max_t + 1];
    tau = std::max(tau, 1.0 / std::log10(total));
    return total / tau;
}

double rhat(const Chains& chains) {
    check(chains);
    if (is_constant(chains)) return kNaN;
    const double bulk = split_rhat_basic(z_scale(chains));
    const double med = quantile(pooled(chains), 0.5);
    Chains folded = chains;
    for (auto& c : folded) {
        for (auto& v : c) v = std::abs(v - med);
    }
    const double tail = is_constant(folded) ? bulk : split_rhat_basic(z_scale(folded));
    return std::max(bulk, tail);
}

double bulk_ess(const Chains& chains) {
    check(chains);
    return ess_basic(z_scale(split(chains)));
}

double tail_ess(const Chains& chains) {
    check(chains);
    const auto all = pooled(chains);
    double out = std::numeric_limits<double>::infinity();
    for (double p : {0.05, 0.95}) {
        const double q = quantile(all, p);
        Chains ind = chains;
        for (auto& c : ind) {
            for (auto& v : c) v = v <= q ? 1.0 : 0.0;
        }
        out = std::min(out, ess_basic(split(ind)));
    }
    return out;
}

}  // namespace mrpval::diagnostics
