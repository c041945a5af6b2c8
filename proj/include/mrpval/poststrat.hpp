#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrpval/simulation.hpp"

namespace mrpval {

struct Cell {
    std::size_t id = 0;
    std::vector<int> levels;
    std::size_t population_count = 0;  // N_j
    double true_prob = 0.0;            // NaN when the table carries no truth
    std::size_t sample_count = 0;      // n_j
    std::size_t sample_successes = 0;  // y_j

    bool observed() const noexcept { return sample_count > 0; }
};

// Occupied poststratification cells in lexicographic level order. Immutable.
class PostStratTable {
public:
    PostStratTable() = default;
    PostStratTable(std::size_t num_covariates, int levels, std::vector<Cell> cells);

    std::size_t size() const noexcept { return cells_.size(); }
    const Cell& cell(std::size_t j) const { return cells_.at(j); }
    const std::vector<Cell>& cells() const noexcept { return cells_; }
    std::size_t num_covariates() const noexcept { return num_covariates_; }
    int levels() const noexcept { return levels_; }
    double total() const noexcept { return total_; }
    int level(std::size_t j, std::size_t k) const { return cells_[j].levels[k]; }

    const std::vector<double>& weights() const noexcept { return weights_; }  // N_j as reals
    std::vector<double> true_probs() const;
    bool has_truth() const;
    bool all_observed() const;
    std::size_t num_observed() const;
    std::size_t sample_size() const;

    // Sum_j N_j * true_prob_j / N.
    double population_mean() const;

private:
    std::size_t num_covariates_ = 0;
    int levels_ = 0;
    std::vector<Cell> cells_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

struct CellSetDescriptor {
    enum class Kind { Population, Level, Observed, Unobserved, Explicit };

    Kind kind = Kind::Population;
    int variable = -1;  // 0-based covariate index for Kind::Level
    int level = -1;
    std::vector<std::size_t> ids;  // Kind::Explicit

    static CellSetDescriptor population() { return {}; }
    static CellSetDescriptor level_of(int variable, int level) {
        return {Kind::Level, variable, level, {}};
    }
    static CellSetDescriptor observed() { return {Kind::Observed, -1, -1, {}}; }
    static CellSetDescriptor unobserved() { return {Kind::Unobserved, -1, -1, {}}; }
    static CellSetDescriptor explicit_ids(std::vector<std::size_t> ids) {
        return {Kind::Explicit, -1, -1, std::move(ids)};
    }

    std::string kind_name() const;
};

struct CellSet {
    CellSetDescriptor descriptor;
    std::vector<std::size_t> members;  // ascending cell ids

    std::size_t size() const noexcept { return members.size(); }
    bool empty() const noexcept { return members.empty(); }
};

PostStratTable build_table(const Population& pop, const SampleCounts& sample);

CellSet cell_set(const PostStratTable& table, const CellSetDescriptor& descriptor);

// Sum of N_s over the set's members.
double set_weight(const PostStratTable& table, const CellSet& set);

// Columns: j, level1..levelk, N_j, true_prob, n_j, y_j. true_prob may be NA.
void write_table_csv(std::ostream& out, const PostStratTable& table);
// levels <= 0 infers the level count from the largest index present.
PostStratTable read_table_csv(std::istream& in, int levels = 0);

}  // namespace mrpval
