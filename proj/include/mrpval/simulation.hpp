#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrpval {

enum class SamplingConstraint { AllCellsObserved, AllLevelsObserved, Unconstrained };

std::string to_string(SamplingConstraint c);
SamplingConstraint parse_sampling_constraint(std::string_view s);

struct SimConfig {
    std::size_t population_size = 20000;
    std::size_t sample_size = 1000;
    std::size_t num_covariates = 4;
    double covariate_sd = 2.0;
    int levels_per_covariate = 5;
    // Pr(y=1) = inv_logit(outcome_coefs . x), pi = inv_logit(inclusion_coefs . x).
    // X2 is the precision variable, X4 the bias variable.
    std::vector<double> outcome_coefs{0.1, 1.0, 0.1, 1.0};
    std::vector<double> inclusion_coefs{0.1, 0.1, 1.0, 1.0};
    SamplingConstraint constraint = SamplingConstraint::AllCellsObserved;
    std::uint64_t seed = 1;

    void validate() const;
};

// Individuals are stored column-wise; covariates and levels are N x k row-major.
struct Population {
    std::size_t num_covariates = 0;
    int levels = 0;
    std::vector<double> covariates;
    std::vector<int> level_index;
    std::vector<double> outcome_prob;
    std::vector<std::uint8_t> outcome;
    std::vector<double> inclusion_prob;
    std::vector<std::vector<double>> bin_edges;  // k x (levels + 1)

    std::size_t size() const noexcept { return outcome.size(); }
    double x(std::size_t i, std::size_t k) const { return covariates[i * num_covariates + k]; }
    int level(std::size_t i, std::size_t k) const { return level_index[i * num_covariates + k]; }
    std::vector<int> cell_key(std::size_t i) const;
};

using CellKey = std::vector<int>;

struct CellCount {
    std::size_t n = 0;
    std::size_t y = 0;
};

struct SampleCounts {
    std::vector<std::size_t> members;  // individual ids in selection order
    std::map<CellKey, CellCount> cells;
};

struct Discretized {
    std::vector<int> index;
    std::vector<double> edges;  // levels + 1 values, edges.front() == min, edges.back() == max
};

// Equal-width bins over [min, max]. A value on an interior edge goes to the lower
// bin; the global max goes to the top bin.
Discretized discretize(std::span<const double> values, int levels);

Population generate_population(const SimConfig& config);

// Seeded phase according to config.constraint, then pi-weighted sampling without
// replacement until config.sample_size individuals are selected.
SampleCounts draw_sample(const Population& pop, const SimConfig& config);

SampleCounts count_sample(const Population& pop, std::vector<std::size_t> members);

// id, x1..xk, level1..levelk, p_outcome, y, pi, sampled
void write_population_csv(std::ostream& out, const Population& pop, const SampleCounts& sample);

}  // namespace mrpval
