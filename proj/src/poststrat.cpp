#include "mrpval/poststrat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"

namespace mrpval {

PostStratTable::PostStratTable(std::size_t num_covariates, int levels, std::vector<Cell> cells)
    : num_covariates_(num_covariates), levels_(levels), cells_(std::move(cells)) {
    if (levels_ < 2) throw InvalidConfig("table needs at least two levels per covariate");
    std::sort(cells_.begin(), cells_.end(),
              [](const Cell& a, const Cell& b) { return a.levels < b.levels; });
    weights_.reserve(cells_.size());
    for (std::size_t j = 0; j < cells_.size(); ++j) {
        Cell& c = cells_[j];
        c.id = j;
        if (c.levels.size() != num_covariates_) throw InvalidConfig("cell has wrong number of levels");
        for (int l : c.levels) {
            if (l < 0 || l >= levels_) throw UnknownLevel("cell level out of range");
        }
        if (j > 0 && cells_[j - 1].levels == c.levels) throw InvalidConfig("duplicate cell");
        if (c.population_count == 0) throw CellMismatch("table cells must have N_j > 0");
        if (c.sample_count > c.population_count) throw CellMismatch("n_j exceeds N_j");
        if (c.sample_successes > c.sample_count) throw CellMismatch("y_j exceeds n_j");
        if (!std::isnan(c.true_prob) && (c.true_prob < 0.0 || c.true_prob > 1.0)) {
            throw InvalidConfig("true_prob outside [0, 1]");
        }
        weights_.push_back(static_cast<double>(c.population_count));
        total_ += weights_.back();
    }
}

std::vector<double> PostStratTable::true_probs() const {
    std::vector<double> t;
    t.reserve(cells_.size());
    for (const auto& c : cells_) t.push_back(c.true_prob);
    return t;
}

bool PostStratTable::has_truth() const {
    return !cells_.empty() &&
           std::none_of(cells_.begin(), cells_.end(), [](const Cell& c) { return std::isnan(c.true_prob); });
}

bool PostStratTable::all_observed() const {
    return std::all_of(cells_.begin(), cells_.end(), [](const Cell& c) { return c.observed(); });
}

std::size_t PostStratTable::num_observed() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.observed(); }));
}

std::size_t PostStratTable::sample_size() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.sample_count;
    return n;
}

double PostStratTable::population_mean() const {
    double s = 0.0;
    for (std::size_t j = 0; j < cells_.size(); ++j) s += weights_[j] * cells_[j].true_prob;
    return s / total_;
}

std::string CellSetDescriptor::kind_name() const {
    switch (kind) {
        case Kind::Population: return "population";
        case Kind::Level: return "level";
        case Kind::Observed: return "observed";
        case Kind::Unobserved: return "unobserved";
        case Kind::Explicit: return "explicit";
    }
    return "unknown";
}

PostStratTable build_table(const Population& pop, const SampleCounts& sample) {
    struct Acc {
        std::size_t count = 0;
        std::size_t successes = 0;
    };
    std::map<CellKey, Acc> acc;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto& a = acc[pop.cell_key(i)];
        ++a.count;
        a.successes += pop.outcome[i];
    }
    for (const auto& [key, cc] : sample.cells) {
        if (!acc.contains(key)) throw CellMismatch("sampled cell is empty in the population");
    }

    std::vector<Cell> cells;
    cells.reserve(acc.size());
    for (const auto& [key, a] : acc) {
        Cell c;
        c.levels = key;
        c.population_count = a.count;
        c.true_prob = static_cast<double>(a.successes) / static_cast<double>(a.count);
        if (auto it = sample.cells.find(key); it != sample.cells.end()) {
            c.sample_count = it->second.n;
            c.sample_successes = it->second.y;
        }
        cells.push_back(std::move(c));
    }
    return PostStratTable(pop.num_covariates, pop.levels, std::move(cells));
}

CellSet cell_set(const PostStratTable& table, const CellSetDescriptor& descriptor) {
    using Kind = CellSetDescriptor::Kind;
    CellSet set{descriptor, {}};
    const auto& cells = table.cells();
    switch (descriptor.kind) {
        case Kind::Population:
            set.members.resize(cells.size());
            for (std::size_t j = 0; j < cells.size(); ++j) set.members[j] = j;
            break;
        case Kind::Level:
            if (descriptor.variable < 0 ||
                static_cast<std::size_t>(descriptor.variable) >= table.num_covariates() ||
                descriptor.level < 0 || descriptor.level >= table.levels()) {
                throw UnknownLevel("no level " + std::to_string(descriptor.level) + " of variable " +
                                   std::to_string(descriptor.variable + 1));
            }
            for (const auto& c : cells) {
                if (c.levels[static_cast<std::size_t>(descriptor.variable)] == descriptor.level) {
                    set.members.push_back(c.id);
                }
            }
            break;
        case Kind::Observed:
        case Kind::Unobserved: {
            const bool want = descriptor.kind == Kind::Observed;
            for (const auto& c : cells) {
                if (c.observed() == want) set.members.push_back(c.id);
            }
            break;
        }
        case Kind::Explicit: {
            std::set<std::size_t> unique(descriptor.ids.begin(), descriptor.ids.end());
            for (auto id : unique) {
                if (id >= cells.size()) throw UnknownLevel("cell id " + std::to_string(id) + " not in table");
            }
            set.members.assign(unique.begin(), unique.end());
            break;
        }
    }
    return set;
}

double set_weight(const PostStratTable& table, const CellSet& set) {
    double w = 0.0;
    for (auto s : set.members) w += table.weights()[s];
    return w;
}

void write_table_csv(std::ostream& out, const PostStratTable& table) {
    const std::size_t k = table.num_covariates();
    out << "j";
    for (std::size_t c = 0; c < k; ++c) out << ",level" << c + 1;
    out << ",N_j,true_prob,n_j,y_j\n";
    for (const auto& cell : table.cells()) {
        out << cell.id;
        for (int l : cell.levels) out << ',' << l;
        out << ',' << cell.population_count << ',' << csv::format(cell.true_prob) << ','
            << cell.sample_count << ',' << cell.sample_successes << '\n';
    }
}

PostStratTable read_table_csv(std::istream& in, int levels) {
    const auto t = csv::read(in);
    std::vector<std::size_t> level_cols;
    for (std::size_t c = 1;; ++c) {
        const std::string name = "level" + std::to_string(c);
        if (!t.has_column(name)) break;
        level_cols.push_back(t.column(name));
    }
    if (level_cols.empty()) throw ParseError("table has no level columns");
    const auto n_col = t.column("N_j");
    const auto nj_col = t.column("n_j");
    const auto yj_col = t.column("y_j");
    const bool has_truth = t.has_column("true_prob");
    const auto truth_col = has_truth ? t.column("true_prob") : 0;

    int max_level = 1;
    std::vector<Cell> cells;
    cells.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        Cell c;
        for (auto col : level_cols) {
            const auto l = csv::parse_int(row[col]);
            if (l < 0) throw ParseError("negative level index");
            c.levels.push_back(static_cast<int>(l));
            max_level = std::max(max_level, static_cast<int>(l));
        }
        const auto big_n = csv::parse_int(row[n_col]);
        const auto small_n = csv::parse_int(row[nj_col]);
        const auto small_y = csv::parse_int(row[yj_col]);
        if (big_n < 0 || small_n < 0 || small_y < 0) throw ParseError("negative count");
        c.population_count = static_cast<std::size_t>(big_n);
        c.sample_count = static_cast<std::size_t>(small_n);
        c.sample_successes = static_cast<std::size_t>(small_y);
        c.true_prob = has_truth ? csv::parse_double(row[truth_col]) : std::nan("");
        cells.push_back(std::move(c));
    }
    if (levels > 0 && max_level >= levels) throw ParseError("level index exceeds declared level count");
    return PostStratTable(level_cols.size(), levels > 0 ? levels : max_level + 1, std::move(cells));
}

}  // namespace mrpval
