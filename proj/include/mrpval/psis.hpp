#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mrpval {

struct GpdFit {
    double k = 0.0;      // shape, after the weakly informative adjustment towards 0.5
    double sigma = 0.0;  // scale
};

// Profile-posterior-mean GPD fit (Zhang-Stephens grid) to ascending, non-negative
// exceedances. Throws TailTooSmall when fewer than 5 values or all are equal.
GpdFit gpd_fit_tail(std::span<const double> sorted_excesses);

double gpd_quantile(double p, double k, double sigma);

struct SmoothedWeights {
    std::vector<double> weights;
    double khat = 0.0;  // +inf when the tail could not be fitted
    std::size_t tail_size = 0;
    double max_raw = 0.0;
    bool flagged = false;  // khat above the threshold
};

std::size_t psis_tail_size(std::size_t draws);

// Replaces the largest ratios with expected GPD order statistics and caps every
// weight at the largest raw ratio. Ratios must be positive and finite.
SmoothedWeights psis_smooth(std::span<const double> raw_ratios, double khat_threshold = 0.7);

// One uniform per stratum [b/B, (b+1)/B); returns B ascending indices.
// Throws AllZeroWeights when the weights sum to zero.
std::vector<std::size_t> stratified_resample(std::span<const double> weights, std::uint64_t seed);

}  // namespace mrpval
