#pragma once

#include <span>
#include <string>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/loco.hpp"
#include "mrpval/model.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/scoring.hpp"

namespace mrpval {

// Non-owning view of one fitted model and its LOCO artefacts.
struct FittedModel {
    const CellProbDraws* draws = nullptr;
    const PsisResult* psis = nullptr;             // required for PSIS, partial and combined forms
    const LocoCellPredictions* loco = nullptr;    // required for the brute-force form

    const std::string& label() const { return draws->label; }
};

struct ReferencePair {
    FittedModel candidate;
    FittedModel reference;
    const PostStratTable* table = nullptr;
    const Permutation* perm = nullptr;
};

enum class ReferenceForm { Full, Loco, Psis };

// (1/B) sum_b [½|x_b - x_perm(b)| + ½|y_b - y_perm(b)| - |x_b - y_perm(b)|], where x_b and
// y_b are N-weighted means over the set of row b of X and Y. <= 0 in expectation; exactly 0
// for X == Y, and equal to crps_cellwise when Y is a point mass.
double energy_score(const DrawMatrix& x, const DrawMatrix& y, const PostStratTable& table, const CellSet& set,
                    const Permutation& perm);

double ref_se(const ReferencePair& pair, const CellSet& set, ReferenceForm form = ReferenceForm::Full);
double ref_crps(const ReferencePair& pair, const CellSet& set, ReferenceForm form = ReferenceForm::Full);

// Observed cells use PSIS-LOCO predictions of both models, unobserved cells the
// full-fit predictions. obs and unobs must partition the table (BadPartition).
double partial_ref_se(const ReferencePair& pair, const CellSet& obs, const CellSet& unobs);
double partial_ref_crps(const ReferencePair& pair, const CellSet& obs, const CellSet& unobs);

// Observed cells: candidate PSIS-LOCO error against truths_obs. Unobserved cells:
// candidate minus reference full-fit predictions.
double combined_se(const FittedModel& candidate, const FittedModel& reference, const PostStratTable& table,
                   const CellSet& obs, const CellSet& unobs, std::span<const double> truths_obs);
double combined_crps(const FittedModel& candidate, const FittedModel& reference, const PostStratTable& table,
                     const CellSet& obs, const CellSet& unobs, std::span<const double> truths_obs,
                     const Permutation& perm);

struct ReferenceCheck {
    std::string reference;
    std::vector<std::string> candidates;
    std::vector<double> cv_se;    // PSIS-LOCO against sample proxies, observed cells
    std::vector<double> ref_se;   // PSIS reference score, observed cells
    std::vector<double> cv_crps;
    std::vector<double> ref_crps;
    double tau_se = 0.0;  // Kendall tau-b between cv and reference scores
    double tau_crps = 0.0;

    std::string to_json() const;
};

// Scores every candidate on the observed-cell subpopulation by PSIS-LOCO
// cross-validation and by the PSIS reference form, and reports rank agreement.
ReferenceCheck reference_check(const std::vector<FittedModel>& candidates, const FittedModel& reference,
                               const PostStratTable& table, const Permutation& perm);

}  // namespace mrpval
