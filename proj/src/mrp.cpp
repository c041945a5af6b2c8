#include "mrpval/mrp.hpp"

#include <numeric>
#include <ostream>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"

namespace mrpval {

EstimateDraws aggregate(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                        std::string label) {
    if (set.empty()) throw EmptySet("cannot aggregate over an empty cell set");
    if (probs.num_cells() != table.size()) throw LengthMismatch("draw columns do not match table cells");
    const double total = set_weight(table, set);
    if (!(total > 0.0)) throw EmptySet("cell set has zero population weight");
    const auto& w = table.weights();
    EstimateDraws est{std::vector<double>(probs.num_draws(), 0.0), set.descriptor, std::move(label)};
    for (std::size_t b = 0; b < probs.num_draws(); ++b) {
        const auto row = probs.row(b);
        double s = 0.0;
        for (auto j : set.members) s += w[j] * row[j];
        est.values[b] = s / total;
    }
    return est;
}

double point_estimate(const EstimateDraws& est) {
    if (est.values.empty()) throw EmptySet("no draws");
    return std::accumulate(est.values.begin(), est.values.end(), 0.0) / static_cast<double>(est.values.size());
}

void write_estimate_csv(std::ostream& out, const EstimateDraws& est) {
    out << "b,value\n";
    for (std::size_t b = 0; b < est.values.size(); ++b) out << b << ',' << csv::format(est.values[b]) << '\n';
}

}  // namespace mrpval
