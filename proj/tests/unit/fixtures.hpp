#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/poststrat.hpp"

namespace mrpval::fixtures {

// One covariate, one cell per level; counts given per cell.
inline PostStratTable toy_table(const std::vector<std::size_t>& pop, const std::vector<std::size_t>& n,
                                const std::vector<std::size_t>& y, const std::vector<double>& truth = {}) {
    std::vector<Cell> cells;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        Cell c;
        c.id = j;
        c.levels = {static_cast<int>(j)};
        c.population_count = pop[j];
        c.true_prob = truth.empty() ? 0.5 : truth[j];
        c.sample_count = n[j];
        c.sample_successes = y[j];
        cells.push_back(c);
    }
    return PostStratTable(1, std::max(2, static_cast<int>(pop.size())), std::move(cells));
}

// Random table with J cells, integer weights and random truths; all cells observed.
inline PostStratTable random_table(std::size_t J, std::mt19937_64& eng) {
    std::uniform_int_distribution<std::size_t> w(1, 50);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> pop(J), n(J), y(J);
    std::vector<double> t(J);
    for (std::size_t j = 0; j < J; ++j) {
        n[j] = 1 + w(eng) % 5;
        pop[j] = n[j] + w(eng);
        y[j] = static_cast<std::size_t>(u(eng) * static_cast<double>(n[j] + 1)) % (n[j] + 1);
        t[j] = u(eng);
    }
    return toy_table(pop, n, y, t);
}

inline DrawMatrix random_draws(std::size_t B, std::size_t J, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DrawMatrix m(B, J);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < J; ++j) m(b, j) = u(eng);
    }
    return m;
}

}  // namespace mrpval::fixtures
