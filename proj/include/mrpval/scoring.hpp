#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/mrp.hpp"
#include "mrpval/poststrat.hpp"

namespace mrpval {

// SE: higher is worse. CRPS: <= 0, closer to 0 is better.
enum class Family { SE, CRPS };

enum class Variant {
    TruthDirect,
    TruthCellwise,
    SampleProxy,
    BruteLoco,
    PsisLoco,
    Reference,         // full-fit reference comparison
    ReferenceLoco,     // brute-force LOCO predictions for both models
    ReferencePsis,     // PSIS-LOCO predictions for both models
    PartialReference,
    Combined,
    MeanCellTruth,
    MeanCellSample,
    MeanCellPsis,
};

std::string to_string(Family f);
std::string to_string(Variant v);
Family parse_family(std::string_view s);
Variant parse_variant(std::string_view s);

// Pairing of draws used by the ½E|X - X'| terms. The seeded constructor builds a
// random involution (pairs of swapped draws, one fixed point when B is odd), so
// pairing draw b with draw perm[b] is symmetric.
class Permutation {
public:
    Permutation() = default;
    Permutation(std::size_t size, std::uint64_t seed);
    // Any bijection; throws InvalidConfig otherwise.
    explicit Permutation(std::vector<std::size_t> map, std::uint64_t seed = 0);

    std::size_t operator[](std::size_t b) const { return map_[b]; }
    std::size_t size() const noexcept { return map_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t fixed_points() const;
    bool involution() const noexcept { return involution_; }
    const std::vector<std::size_t>& map() const noexcept { return map_; }

private:
    std::vector<std::size_t> map_;
    std::uint64_t seed_ = 0;
    bool involution_ = true;
};

// Contribution of a swapped pair (b, c) to sum_b [½|x_b - x_c| - |x_b - y|], given the
// errors u = x_b - y and v = x_c - y: |u - v| - |u| - |v|, evaluated in closed form
// (0 when the errors differ in sign, else -2 min(|u|, |v|)) so it is never positive.
inline double crps_pair_term(double u, double v) {
    if ((u > 0.0 && v > 0.0) || (u < 0.0 && v < 0.0)) return -2.0 * std::min(std::abs(u), std::abs(v));
    return 0.0;
}

double se_direct(const EstimateDraws& est, double truth);

// (sum_j N_j (m_j - t_j) / sum_j N_j)^2
double se_cellwise(std::span<const double> cell_means, std::span<const double> cell_truths,
                   std::span<const double> weights);

// sum_j N_j (m_j - t_j)^2 / sum_j N_j
double mean_cell_se(std::span<const double> cell_means, std::span<const double> cell_truths,
                    std::span<const double> weights);

// (1/B) sum_b [½|x_b - x_perm(b)| - |x_b - truth|]. Involutions are summed pairwise with
// crps_pair_term, so the value is exactly <= 0.
double crps_draws(std::span<const double> draws, double truth, const Permutation& perm);
double crps_draws(const EstimateDraws& est, double truth, const Permutation& perm);

// Per-cell truths are indexed by cell id (length J); NaN marks a missing truth.
// Throws UnobservedCell listing members whose truth is missing.
double crps_cellwise(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                     std::span<const double> truths, const Permutation& perm);

double mean_cell_crps(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                      std::span<const double> truths, const Permutation& perm);

// Restricted to the set's members, from column means of the draws.
double se_cellwise(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                   std::span<const double> truths);
double mean_cell_se(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                    std::span<const double> truths);

// y_j / n_j for the set's members (NaN elsewhere); UnobservedCell if any member has n_j = 0.
std::vector<double> sample_proxy_truths(const PostStratTable& table, const CellSet& set);
std::vector<double> sample_proxy_truths(const PostStratTable& table);

// Throws UnobservedCell for members with NaN truths.
void require_truths(const CellSet& set, std::span<const double> truths);

struct ScoreRecord {
    std::size_t rep = 0;
    std::string model;
    Family family = Family::SE;
    Variant variant = Variant::TruthDirect;
    std::string target_kind = "population";  // population | level | level-average | observed
    int target_variable = -1;                // 1-based covariate, -1 when not applicable
    int target_level = -1;                   // 0-based level, -1 when not applicable
    double value = 0.0;
    double khat_max = std::numeric_limits<double>::quiet_NaN();  // NaN when no PSIS was involved
    bool flagged = false;
    std::string reference;  // reference model label for reference-family variants
    std::uint64_t seed = 0;
};

// rep,model,family,variant,target_kind,target_variable,target_level,value,khat_max,flagged,reference,seed
void write_scores_header(std::ostream& out);
void write_score_row(std::ostream& out, const ScoreRecord& r);
void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_scores_csv(std::istream& in);

}  // namespace mrpval
