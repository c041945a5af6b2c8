#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mrpval/model.hpp"
#include "mrpval/scoring.hpp"
#include "mrpval/simulation.hpp"

namespace mrpval {

struct ExperimentPlan {
    std::string name = "experiment";
    SimConfig sim;
    McmcConfig mcmc;
    std::vector<std::string> models{"full", "precision", "bias", "nuisance"};
    // Reference models for reference-family scores; each must be a fitted model.
    std::vector<std::string> references{"full"};
    std::set<Variant> variants;  // empty means every variant
    std::size_t replications = 1;
    std::uint64_t base_seed = 1;
    // Reps that run brute-force LOCO. nullopt means every rep.
    std::optional<std::set<std::size_t>> brute_force_reps = std::set<std::size_t>{};
    bool subpopulations = true;  // per-level targets and level averages
    std::size_t workers = 1;
    std::string output_dir = "results";

    void validate() const;
    bool wants(Variant v) const { return variants.empty() || variants.contains(v); }
    bool brute_force_in(std::size_t rep) const { return !brute_force_reps || brute_force_reps->contains(rep); }

    // N=20000, n=1000, R=100, B=1000, brute force off.
    static ExperimentPlan paper();
    // N=2000, n=300, R=10, B=500, brute force on every rep.
    static ExperimentPlan desk();
};

std::string plan_to_json(const ExperimentPlan& plan);
// Missing keys keep the values of `base`.
ExperimentPlan plan_from_json(const std::string& text, const ExperimentPlan& base = ExperimentPlan{});

struct FitSummary {
    std::string model;
    double max_rhat = 0.0;
    double min_bulk_ess = 0.0;
    bool converged = true;
    std::size_t psis_flagged = 0;      // cells with khat above 0.7
    double khat_max = 0.0;
    std::size_t brute_refits = 0;
    std::size_t brute_flagged = 0;
};

struct RepMeta {
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    std::size_t cells = 0;
    std::size_t observed_cells = 0;
    double observed_fraction = 0.0;
    double population_mean = 0.0;
    bool brute_force = false;
    std::string error;  // non-empty when the rep failed
    std::vector<FitSummary> fits;
};

struct ResultsStore {
    std::string directory;
    std::vector<ScoreRecord> records;
    std::vector<RepMeta> reps;
};

std::uint64_t rep_seed(std::uint64_t base_seed, std::size_t rep);

// Scores one replication in memory.
std::vector<ScoreRecord> run_replication(const ExperimentPlan& plan, std::size_t rep, RepMeta& meta);

// Runs every replication not already on disk, then assembles <output_dir>/scores.csv.
ResultsStore run(const ExperimentPlan& plan);

// Loads scores.csv and rep metadata from a results directory.
ResultsStore load_results(const std::string& directory);

std::string rep_meta_to_json(const RepMeta& meta);
RepMeta rep_meta_from_json(const std::string& text);

// ---- summaries ----

struct PairRate {
    std::string better;  // model expected to score better
    std::string worse;
    Family family = Family::SE;
    Variant variant = Variant::TruthCellwise;
    std::string reference;
    std::size_t reps = 0;
    double rate = 0.0;  // fraction of reps where `better` scores better
};

struct UnderRate {
    Family family = Family::SE;
    Variant variant = Variant::SampleProxy;
    std::size_t cells = 0;  // (model x rep) pairs compared
    double rate = 0.0;      // fraction where the estimate understates the true error
};

// Kendall tau-b across models between PSIS-LOCO scores and PSIS reference scores on
// the observed cells (the population when every cell is observed), one per rep.
struct ReferenceAgreement {
    std::size_t rep = 0;
    std::string reference;
    Family family = Family::SE;
    std::size_t models = 0;
    double tau = 0.0;
};

struct Report {
    std::vector<PairRate> orderings;
    std::vector<ReferenceAgreement> reference_agreement;
    std::vector<UnderRate> underestimation;
    double observed_fraction_mean = 0.0;
    double observed_fraction_min = 0.0;
    double observed_fraction_max = 0.0;
    std::size_t reps = 0;
    std::size_t flagged_rows = 0;

    std::string to_json() const;
};

// True when `a` is a better score than `b` under the family's orientation.
bool better_score(Family family, double a, double b);

// Population-target value for (rep, model, family, variant, reference); NaN when absent.
double find_score(const std::vector<ScoreRecord>& records, std::size_t rep, const std::string& model, Family family,
                  Variant variant, const std::string& reference = {}, const std::string& target_kind = "population");

// Writes per-figure CSV extracts and report.json under <directory>/report.
Report summarize(const ResultsStore& store, const std::string& out_dir = {});

}  // namespace mrpval
