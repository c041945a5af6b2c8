#pragma once

#include <span>
#include <vector>

namespace mrpval::stats {

// 1-based ranks, ties receive the average rank.
std::vector<double> ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// Kendall's tau-b; NaN when either input is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

}  // namespace mrpval::stats
