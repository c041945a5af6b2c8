#include "mrpval/simulation.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/math.hpp"
#include "mrpval/rng.hpp"

namespace mrpval {

namespace {

// Binary indexed tree over nonnegative weights; supports draw-and-remove.
class WeightTree {
public:
    explicit WeightTree(std::span<const double> weights) : tree_(weights.size() + 1, 0.0) {
        for (std::size_t i = 0; i < weights.size(); ++i) add(i, weights[i]);
        values_.assign(weights.begin(), weights.end());
    }

    double total() const {
        double s = 0.0;
        for (std::size_t i = tree_.size() - 1; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    // Index i such that prefix(i) <= target < prefix(i + 1).
    std::size_t find(double target) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 < tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            const std::size_t next = pos + step;
            if (next < tree_.size() && tree_[next] <= target) {
                pos = next;
                target -= tree_[next];
            }
        }
        // Rounding can land on a zero-weight slot; move to the nearest positive one.
        std::size_t idx = std::min(pos, values_.size() - 1);
        while (idx > 0 && values_[idx] <= 0.0) --idx;
        while (idx < values_.size() && values_[idx] <= 0.0) ++idx;
        return idx;
    }

    void remove(std::size_t i) {
        add(i, -values_[i]);
        values_[i] = 0.0;
    }

private:
    void add(std::size_t i, double delta) {
        for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
    }

    std::vector<double> tree_;
    std::vector<double> values_;
};

std::size_t uniform_index(Engine& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::string to_string(SamplingConstraint c) {
    switch (c) {
        case SamplingConstraint::AllCellsObserved: return "all-cells";
        case SamplingConstraint::AllLevelsObserved: return "all-levels";
        case SamplingConstraint::Unconstrained: return "unconstrained";
    }
    return "unknown";
}

SamplingConstraint parse_sampling_constraint(std::string_view s) {
    if (s == "all-cells" || s == "AllCellsObserved") return SamplingConstraint::AllCellsObserved;
    if (s == "all-levels" || s == "AllLevelsObserved") return SamplingConstraint::AllLevelsObserved;
    if (s == "unconstrained" || s == "Unconstrained") return SamplingConstraint::Unconstrained;
    throw InvalidConfig("unknown sampling constraint: " + std::string(s));
}

void SimConfig::validate() const {
    if (population_size == 0) throw InvalidConfig("population_size must be positive");
    if (sample_size == 0) throw InvalidConfig("sample_size must be positive");
    if (sample_size > population_size) throw InvalidConfig("sample_size exceeds population_size");
    if (num_covariates == 0) throw InvalidConfig("num_covariates must be positive");
    if (!(covariate_sd > 0.0)) throw InvalidConfig("covariate_sd must be positive");
    if (levels_per_covariate < 2) throw InvalidConfig("levels_per_covariate must be >= 2");
    if (outcome_coefs.size() != num_covariates || inclusion_coefs.size() != num_covariates) {
        throw InvalidConfig("coefficient vectors must have num_covariates entries");
    }
}

std::vector<int> Population::cell_key(std::size_t i) const {
    auto first = level_index.begin() + static_cast<std::ptrdiff_t>(i * num_covariates);
    return {first, first + static_cast<std::ptrdiff_t>(num_covariates)};
}

Discretized discretize(std::span<const double> values, int levels) {
    if (levels < 2) throw InvalidConfig("levels must be >= 2");
    if (values.empty()) throw DegenerateCovariate("no values to discretize");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) throw DegenerateCovariate("covariate has zero range");

    Discretized out;
    out.edges.resize(static_cast<std::size_t>(levels) + 1);
    const double width = (hi - lo) / levels;
    for (int i = 0; i <= levels; ++i) out.edges[static_cast<std::size_t>(i)] = lo + width * i;
    out.edges.front() = lo;
    out.edges.back() = hi;

    out.index.reserve(values.size());
    const auto upper_first = out.edges.begin() + 1;
    for (double v : values) {
        // First upper edge >= v, so values on an edge belong to the lower bin.
        const auto it = std::lower_bound(upper_first, out.edges.end(), v);
        const auto bin = std::distance(upper_first, it);
        out.index.push_back(static_cast<int>(std::min<std::ptrdiff_t>(bin, levels - 1)));
    }
    return out;
}

Population generate_population(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.population_size;
    const std::size_t k = config.num_covariates;

    Engine rng = make_engine(derive_seed(config.seed, Stage::Population));
    std::normal_distribution<double> normal(0.0, config.covariate_sd);

    Population pop;
    pop.num_covariates = k;
    pop.levels = config.levels_per_covariate;
    pop.covariates.resize(n * k);
    for (auto& x : pop.covariates) x = normal(rng);

    pop.outcome_prob.resize(n);
    pop.inclusion_prob.resize(n);
    pop.outcome.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta_y = 0.0;
        double eta_pi = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            eta_y += config.outcome_coefs[c] * pop.x(i, c);
            eta_pi += config.inclusion_coefs[c] * pop.x(i, c);
        }
        pop.outcome_prob[i] = inv_logit(eta_y);
        // Keep pi strictly inside (0, 1) even for extreme linear predictors.
        pop.inclusion_prob[i] = std::clamp(inv_logit(eta_pi), 1e-300, std::nextafter(1.0, 0.0));
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) pop.outcome[i] = unif(rng) < pop.outcome_prob[i] ? 1 : 0;

    pop.level_index.resize(n * k);
    pop.bin_edges.resize(k);
    std::vector<double> column(n);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) column[i] = pop.x(i, c);
        auto d = discretize(column, config.levels_per_covariate);
        for (std::size_t i = 0; i < n; ++i) pop.level_index[i * k + c] = d.index[i];
        pop.bin_edges[c] = std::move(d.edges);
    }
    return pop;
}

SampleCounts count_sample(const Population& pop, std::vector<std::size_t> members) {
    SampleCounts s;
    s.members = std::move(members);
    for (auto i : s.members) {
        auto& cc = s.cells[pop.cell_key(i)];
        ++cc.n;
        cc.y += pop.outcome[i];
    }
    return s;
}

SampleCounts draw_sample(const Population& pop, const SimConfig& config) {
    config.validate();
    const std::size_t n = config.sample_size;
    if (n > pop.size()) throw InvalidConfig("sample_size exceeds population size");
    Engine rng = make_engine(derive_seed(config.seed, Stage::Sample));

    std::vector<std::size_t> members;
    std::vector<bool> taken(pop.size(), false);
    auto take = [&](std::size_t i) {
        taken[i] = true;
        members.push_back(i);
    };

    if (config.constraint == SamplingConstraint::AllCellsObserved) {
        std::map<CellKey, std::vector<std::size_t>> by_cell;
        for (std::size_t i = 0; i < pop.size(); ++i) by_cell[pop.cell_key(i)].push_back(i);
        if (by_cell.size() > n) {
            throw InfeasibleConstraint("population has " + std::to_string(by_cell.size()) +
                                       " occupied cells but sample_size is " + std::to_string(n));
        }
        for (const auto& [key, ids] : by_cell) take(ids[uniform_index(rng, ids.size())]);
    } else if (config.constraint == SamplingConstraint::AllLevelsObserved) {
        const std::size_t k = pop.num_covariates;
        for (std::size_t c = 0; c < k; ++c) {
            for (int l = 0; l < pop.levels; ++l) {
                const bool covered = std::any_of(members.begin(), members.end(),
                                                 [&](std::size_t i) { return pop.level(i, c) == l; });
                if (covered) continue;
                std::vector<std::size_t> candidates;
                for (std::size_t i = 0; i < pop.size(); ++i) {
                    if (!taken[i] && pop.level(i, c) == l) candidates.push_back(i);
                }
                if (candidates.empty()) {
                    throw InfeasibleConstraint("level " + std::to_string(l) + " of covariate " +
                                               std::to_string(c + 1) + " is empty in the population");
                }
                if (members.size() >= n) {
                    throw InfeasibleConstraint("seeding every level needs more than sample_size draws");
                }
                take(candidates[uniform_index(rng, candidates.size())]);
            }
        }
    }

    std::vector<double> weights(pop.inclusion_prob);
    for (auto i : members) weights[i] = 0.0;
    WeightTree tree(weights);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (members.size() < n) {
        const double total = tree.total();
        if (!(total > 0.0)) throw InfeasibleConstraint("no individuals left to sample");
        const std::size_t i = tree.find(unif(rng) * total);
        tree.remove(i);
        take(i);
    }
    return count_sample(pop, std::move(members));
}

void write_population_csv(std::ostream& out, const Population& pop, const SampleCounts& sample) {
    const std::size_t k = pop.num_covariates;
    std::vector<bool> sampled(pop.size(), false);
    for (auto i : sample.members) sampled[i] = true;

    out << "id";
    for (std::size_t c = 0; c < k; ++c) out << ",x" << c + 1;
    for (std::size_t c = 0; c < k; ++c) out << ",level" << c + 1;
    out << ",p_outcome,y,pi,sampled\n";
    for (std::size_t i = 0; i < pop.size(); ++i) {
        out << i;
        for (std::size_t c = 0; c < k; ++c) out << ',' << csv::format(pop.x(i, c));
        for (std::size_t c = 0; c < k; ++c) out << ',' << pop.level(i, c);
        out << ',' << csv::format(pop.outcome_prob[i]) << ',' << int(pop.outcome[i]) << ','
            << csv::format(pop.inclusion_prob[i]) << ',' << (sampled[i] ? 1 : 0) << '\n';
    }
}

}  // namespace mrpval
