#pragma once

#include <cstdint>
#include <vector>

#include "mrpval/model.hpp"

namespace mrpval::detail {

// Cells collapsed by the included covariates' levels; only groups with n > 0.
struct GroupedData {
    int num_effects = 0;  // included covariates K
    int levels = 0;       // L
    std::vector<int> group_levels;  // G x K
    std::vector<double> n;
    std::vector<double> y;
    std::vector<std::vector<int>> groups_at;  // [k * L + l] -> group ids

    std::size_t size() const noexcept { return n.size(); }
};

GroupedData group_cells(const ModelSpec& spec, const PostStratTable& table,
                        std::optional<std::size_t> held_out);

struct ChainOutput {
    // Kept draws, one row per thinned iteration: intercept, sd[k], z[k,l].
    std::vector<std::vector<double>> draws;
    ChainState final_state;
    double accept_intercept = 0.0;
    double accept_sd = 0.0;
    double accept_effects = 0.0;
};

struct ChainSettings {
    int warmup = 0;
    int iterations = 0;
    int thin = 1;
    double target_accept = 0.44;
    double adapt_offset = 1.0;  // Robbins-Monro time offset; larger means gentler adaptation
};

ChainOutput run_chain(const GroupedData& data, const TPrior& intercept_prior, const TPrior& sd_prior,
                      const ChainSettings& settings, const ChainState* start, std::uint64_t seed);

std::size_t step_count(int num_effects, int levels);

}  // namespace mrpval::detail
