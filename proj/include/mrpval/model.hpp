#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrpval/draws.hpp"
#include "mrpval/poststrat.hpp"

namespace mrpval {

// Student-t with df, location and scale; used as half-t (location 0) for group sds.
struct TPrior {
    double df = 3.0;
    double location = 0.0;
    double scale = 2.5;
};

struct ModelSpec {
    std::string label;
    std::vector<int> covariates;  // 0-based, ascending; empty means intercept only
    TPrior intercept_prior;
    TPrior sd_prior;

    void validate(std::size_t num_covariates) const;

    // full, precision, bias, nuisance, x1_only, x3_only, intercept
    static ModelSpec preset(std::string_view label);
    static std::vector<std::string> preset_labels();
};

struct McmcConfig {
    int chains = 4;
    int warmup = 1000;
    int iterations = 1000;  // kept iterations per chain, before thinning
    int thin = 4;
    int refit_warmup = 150;  // warmup for warm-started refits
    double rhat_threshold = 1.05;
    double target_accept = 0.44;
    std::uint64_t seed = 1;

    std::size_t num_draws() const;
    void validate() const;

    static McmcConfig paper();  // 4 x (1000 + 1000), B = 1000
    static McmcConfig desk();   // 4 x (500 + 500), B = 500
};

struct ParameterDiagnostics {
    std::string name;
    double rhat = 0.0;
    double bulk_ess = 0.0;
    double tail_ess = 0.0;
};

struct FitDiagnostics {
    std::vector<ParameterDiagnostics> parameters;
    double max_rhat = 0.0;
    double min_bulk_ess = 0.0;
    double min_tail_ess = 0.0;
    // Post-warmup acceptance rates per update block.
    double accept_intercept = 0.0;
    double accept_sd = 0.0;
    double accept_effects = 0.0;
    bool converged = true;  // max_rhat below the configured threshold

    std::string to_json() const;
};

struct DrawProvenance {
    int chain = 0;
    int iteration = 0;  // post-warmup iteration index within the chain
};

// Final sampler state of every chain, used to warm-start refits.
struct ChainState {
    double intercept = 0.0;
    std::vector<double> log_sd;  // per included covariate
    std::vector<double> z;       // included covariates x levels, row-major
    std::vector<double> step;    // per-coordinate proposal scales
};

struct WarmStart {
    std::vector<ChainState> chains;
};

struct CellProbDraws {
    std::string label;
    DrawMatrix probs;  // B x J, all table cells
    std::vector<std::string> parameter_names;
    DrawMatrix parameters;  // B x P: intercept, sd[k], alpha[k,l]
    std::vector<DrawProvenance> provenance;
    FitDiagnostics diagnostics;
    WarmStart final_state;
    std::optional<std::size_t> held_out;

    std::size_t num_draws() const noexcept { return probs.num_draws(); }
    std::size_t num_cells() const noexcept { return probs.num_cells(); }
    bool flagged() const noexcept { return !diagnostics.converged; }
};

struct FitOptions {
    std::optional<std::size_t> held_out_cell;  // drop this cell's (n_j, y_j) from the likelihood
    const WarmStart* warm_start = nullptr;
    std::optional<std::uint64_t> seed;  // overrides McmcConfig::seed
    bool allow_no_data = false;          // permit a prior-only fit
};

CellProbDraws fit(const ModelSpec& spec, const PostStratTable& table, const McmcConfig& mcmc,
                  const FitOptions& options = {});

double log_binomial_pmf(std::size_t y, std::size_t n, double p);

// Per-draw log Binomial(y | n, p_j^b) using column j of the draws.
std::vector<double> log_lik_cell(const CellProbDraws& draws, std::size_t j, std::size_t n,
                                 std::size_t y);

}  // namespace mrpval
