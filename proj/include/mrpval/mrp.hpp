#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/poststrat.hpp"

namespace mrpval {

struct EstimateDraws {
    std::vector<double> values;  // phi^b
    CellSetDescriptor target;
    std::string label;

    std::size_t size() const noexcept { return values.size(); }
};

// phi^b = sum_s N_s p_s^b / sum_s N_s over the set, for every draw.
EstimateDraws aggregate(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                        std::string label = {});

double point_estimate(const EstimateDraws& est);

// Columns: b, value.
void write_estimate_csv(std::ostream& out, const EstimateDraws& est);

}  // namespace mrpval
