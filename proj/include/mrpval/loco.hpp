#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/model.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/scoring.hpp"

namespace mrpval {

struct LocoCellPredictions {
    enum class Source { Brute, Psis };

    Source source = Source::Brute;
    DrawMatrix probs;            // B x J; column j holds the held-out prediction of cell j
    std::vector<bool> available;  // cells that were held out
    std::vector<double> rhat;     // brute force: max R-hat of each refit (NaN otherwise)
    std::vector<bool> flagged;    // brute force: refit not converged

    std::size_t num_flagged() const;
};

// One warm-started refit per observed cell of `targets` (all observed cells by
// default), each with that cell's counts removed.
LocoCellPredictions brute_force_loco(const ModelSpec& spec, const PostStratTable& table, const McmcConfig& mcmc,
                                     const CellProbDraws& full, const std::optional<CellSet>& targets = std::nullopt);

// exp(-log_lik - max) so the largest ratio is 1.
std::vector<double> raw_ratios(const CellProbDraws& full, std::size_t j, std::size_t n, std::size_t y);

struct PsisResult {
    // Indexed by cell id; empty vectors for unobserved cells.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<std::size_t>> resample;
    std::vector<double> khat;  // NaN for unobserved cells
    std::vector<std::size_t> tail_size;
    std::vector<double> max_raw;
    std::vector<bool> flagged;
    std::uint64_t resample_seed = 0;

    bool has(std::size_t j) const { return j < weights.size() && !weights[j].empty(); }
    double khat_max(const CellSet& set) const;
    std::size_t num_flagged(const CellSet& set) const;
};

PsisResult compute_psis(const CellProbDraws& full, const PostStratTable& table, std::uint64_t resample_seed,
                        double khat_threshold = 0.7);

// Columns of observed cells hold the resampled full-fit draws; other columns hold
// the full-fit draws unchanged.
DrawMatrix resampled_draws(const CellProbDraws& full, const PsisResult& psis);

// Importance-weighted posterior means per cell; full-fit means for unobserved cells.
std::vector<double> psis_cell_means(const CellProbDraws& full, const PsisResult& psis);

// Throws UnobservedCell listing members without PSIS weights.
void require_observed(const PsisResult& psis, const CellSet& set);

double psis_loco_se(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                    const CellSet& set, std::span<const double> truths);
double psis_loco_crps(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                      const CellSet& set, std::span<const double> truths, const Permutation& perm);

double mean_cell_psis_se(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                         const CellSet& set, std::span<const double> truths);
double mean_cell_psis_crps(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                           const CellSet& set, std::span<const double> truths, const Permutation& perm);

double brute_loco_se(const LocoCellPredictions& loco, const PostStratTable& table, const CellSet& set,
                     std::span<const double> truths);
double brute_loco_crps(const LocoCellPredictions& loco, const PostStratTable& table, const CellSet& set,
                       std::span<const double> truths, const Permutation& perm);

// Arithmetic mean of one score per level.
double level_average_score(std::span<const double> level_scores);
// Records must hold exactly one "level" row for each level 0..levels-1 of one
// variable; throws MissingLevel otherwise.
double level_average_score(const std::vector<ScoreRecord>& records, int levels);

// cell,khat,tail_size,max_raw_ratio,flagged (observed cells only)
void write_psis_diagnostics_csv(std::ostream& out, const PsisResult& psis);

}  // namespace mrpval
