#include "mrpval/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "mrpval/diagnostics.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/math.hpp"
#include "mrpval/rng.hpp"
#include "sampler.hpp"

namespace mrpval {

void ModelSpec::validate(std::size_t num_covariates) const {
    for (std::size_t i = 0; i < covariates.size(); ++i) {
        if (covariates[i] < 0 || static_cast<std::size_t>(covariates[i]) >= num_covariates) {
            throw InvalidConfig("model " + label + " uses covariate " + std::to_string(covariates[i] + 1) +
                                " outside the table");
        }
        if (i > 0 && covariates[i] <= covariates[i - 1]) {
            throw InvalidConfig("model covariates must be ascending and unique");
        }
    }
    for (const auto* p : {&intercept_prior, &sd_prior}) {
        if (!(p->df > 0.0) || !(p->scale > 0.0)) throw InvalidConfig("prior df and scale must be positive");
    }
}

ModelSpec ModelSpec::preset(std::string_view label) {
    ModelSpec s;
    s.label = std::string(label);
    if (label == "full") {
        s.covariates = {0, 1, 2, 3};
    } else if (label == "precision") {
        s.covariates = {0, 1, 2};
    } else if (label == "bias") {
        s.covariates = {0, 2, 3};
    } else if (label == "nuisance") {
        s.covariates = {0, 2};
    } else if (label == "x1_only") {
        s.covariates = {0};
    } else if (label == "x3_only") {
        s.covariates = {2};
    } else if (label == "intercept") {
        s.covariates = {};
    } else {
        throw InvalidConfig("unknown model label: " + std::string(label));
    }
    return s;
}

std::vector<std::string> ModelSpec::preset_labels() {
    return {"full", "precision", "bias", "nuisance", "x1_only", "x3_only", "intercept"};
}

std::size_t McmcConfig::num_draws() const {
    return static_cast<std::size_t>(chains) * static_cast<std::size_t>(iterations / thin);
}

void McmcConfig::validate() const {
    if (chains < 1 || warmup < 0 || iterations < 1 || thin < 1 || refit_warmup < 0) {
        throw InvalidConfig("invalid MCMC settings");
    }
    if (iterations / thin < 2) throw InvalidConfig("fewer than two kept draws per chain");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw InvalidConfig("target_accept must be in (0, 1)");
}

McmcConfig McmcConfig::paper() { return McmcConfig{}; }

McmcConfig McmcConfig::desk() {
    McmcConfig c;
    c.warmup = 500;
    c.iterations = 500;
    return c;
}

std::string FitDiagnostics::to_json() const {
    nlohmann::json j;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j["max_rhat"] = num(max_rhat);
    j["min_bulk_ess"] = num(min_bulk_ess);
    j["min_tail_ess"] = num(min_tail_ess);
    j["accept"] = {{"intercept", accept_intercept}, {"sd", accept_sd}, {"effects", accept_effects}};
    j["converged"] = converged;
    auto& ps = j["parameters"] = nlohmann::json::array();
    for (const auto& p : parameters) {
        ps.push_back({{"name", p.name}, {"rhat", num(p.rhat)}, {"bulk_ess", num(p.bulk_ess)},
                      {"tail_ess", num(p.tail_ess)}});
    }
    return j.dump(2);
}

namespace {

std::vector<std::string> parameter_names(const ModelSpec& spec, int levels) {
    std::vector<std::string> names{"intercept"};
    for (int c : spec.covariates) names.push_back("sd[x" + std::to_string(c + 1) + "]");
    for (int c : spec.covariates) {
        for (int l = 0; l < levels; ++l) {
            names.push_back("alpha[x" + std::to_string(c + 1) + "," + std::to_string(l) + "]");
        }
    }
    return names;
}

// Diagnostics on the constrained parameters (intercept, sd, alpha) stored in `params`.
FitDiagnostics diagnose(const std::vector<detail::ChainOutput>& chains, const DrawMatrix& params,
                        const std::vector<std::string>& names, double threshold) {
    FitDiagnostics d;
    const std::size_t per_chain = chains.front().draws.size();
    d.max_rhat = 0.0;
    d.min_bulk_ess = std::numeric_limits<double>::infinity();
    d.min_tail_ess = std::numeric_limits<double>::infinity();
    if (per_chain >= 4) {
        for (std::size_t p = 0; p < names.size(); ++p) {
            diagnostics::Chains series(chains.size());
            for (std::size_t c = 0; c < chains.size(); ++c) {
                series[c].reserve(per_chain);
                for (std::size_t i = 0; i < per_chain; ++i) series[c].push_back(params(c * per_chain + i, p));
            }
            ParameterDiagnostics pd{names[p], diagnostics::rhat(series), diagnostics::bulk_ess(series),
                                    diagnostics::tail_ess(series)};
            if (std::isfinite(pd.rhat)) d.max_rhat = std::max(d.max_rhat, pd.rhat);
            if (std::isfinite(pd.bulk_ess)) d.min_bulk_ess = std::min(d.min_bulk_ess, pd.bulk_ess);
            if (std::isfinite(pd.tail_ess)) d.min_tail_ess = std::min(d.min_tail_ess, pd.tail_ess);
            d.parameters.push_back(std::move(pd));
        }
    }
    for (const auto& c : chains) {
        d.accept_intercept += c.accept_intercept / static_cast<double>(chains.size());
        d.accept_sd += c.accept_sd / static_cast<double>(chains.size());
        d.accept_effects += c.accept_effects / static_cast<double>(chains.size());
    }
    d.converged = d.max_rhat < threshold;
    return d;
}

}  // namespace

CellProbDraws fit(const ModelSpec& spec, const PostStratTable& table, const McmcConfig& mcmc,
                  const FitOptions& options) {
    spec.validate(table.num_covariates());
    mcmc.validate();
    if (options.held_out_cell && *options.held_out_cell >= table.size()) {
        throw UnknownLevel("held-out cell " + std::to_string(*options.held_out_cell) + " not in table");
    }
    const auto data = detail::group_cells(spec, table, options.held_out_cell);
    if (data.size() == 0 && !options.allow_no_data) throw InvalidConfig("no observed cells to fit");
    if (options.warm_start && options.warm_start->chains.size() != static_cast<std::size_t>(mcmc.chains)) {
        throw InvalidConfig("warm start has the wrong number of chains");
    }

    const std::uint64_t seed = options.seed.value_or(mcmc.seed);
    detail::ChainSettings settings;
    settings.iterations = mcmc.iterations;
    settings.thin = mcmc.thin;
    settings.target_accept = mcmc.target_accept;
    settings.warmup = options.warm_start ? mcmc.refit_warmup : mcmc.warmup;
    settings.adapt_offset = options.warm_start ? 20.0 : 1.0;

    std::vector<detail::ChainOutput> chains;
    for (int c = 0; c < mcmc.chains; ++c) {
        const ChainState* start = options.warm_start ? &options.warm_start->chains[static_cast<std::size_t>(c)] : nullptr;
        chains.push_back(detail::run_chain(data, spec.intercept_prior, spec.sd_prior, settings, start,
                                           derive_seed(seed, Stage::Chain, static_cast<std::uint64_t>(c))));
    }

    CellProbDraws out;
    out.label = spec.label;
    out.held_out = options.held_out_cell;
    out.parameter_names = parameter_names(spec, table.levels());
    const std::size_t k = spec.covariates.size();
    const auto levels = static_cast<std::size_t>(table.levels());
    const std::size_t per_chain = chains.front().draws.size();
    const std::size_t draws = per_chain * chains.size();
    const std::size_t params = out.parameter_names.size();
    out.probs = DrawMatrix(draws, table.size());
    out.parameters = DrawMatrix(draws, params);
    out.provenance.reserve(draws);

    std::vector<double> alpha(k * levels);
    std::size_t b = 0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (std::size_t i = 0; i < per_chain; ++i, ++b) {
            const auto& row = chains[c].draws[i];  // intercept, sd[k], z[k,l]
            const double intercept = row[0];
            for (std::size_t e = 0; e < k; ++e) {
                for (std::size_t l = 0; l < levels; ++l) alpha[e * levels + l] = row[1 + e] * row[1 + k + e * levels + l];
            }
            auto prow = out.parameters.row(b);
            prow[0] = intercept;
            for (std::size_t e = 0; e < k; ++e) prow[1 + e] = row[1 + e];
            std::copy(alpha.begin(), alpha.end(), prow.begin() + static_cast<std::ptrdiff_t>(1 + k));
            auto cells = out.probs.row(b);
            for (std::size_t j = 0; j < table.size(); ++j) {
                double eta = intercept;
                for (std::size_t e = 0; e < k; ++e) {
                    eta += alpha[e * levels +
                                 static_cast<std::size_t>(table.level(j, static_cast<std::size_t>(spec.covariates[e])))];
                }
                cells[j] = inv_logit(eta);
            }
            out.provenance.push_back({static_cast<int>(c), static_cast<int>((i + 1) * static_cast<std::size_t>(mcmc.thin) - 1)});
        }
    }
    out.diagnostics = diagnose(chains, out.parameters, out.parameter_names, mcmc.rhat_threshold);
    for (auto& ch : chains) out.final_state.chains.push_back(std::move(ch.final_state));
    return out;
}

double log_binomial_pmf(std::size_t y, std::size_t n, double p) {
    const auto yd = static_cast<double>(y);
    const auto nd = static_cast<double>(n);
    double out = log_choose(nd, yd);
    if (y > 0) out += yd * std::log(p);
    if (y < n) out += (nd - yd) * std::log1p(-p);
    return out;
}

std::vector<double> log_lik_cell(const CellProbDraws& draws, std::size_t j, std::size_t n, std::size_t y) {
    if (j >= draws.num_cells()) throw UnknownLevel("cell " + std::to_string(j) + " not in draws");
    if (y > n) throw InvalidConfig("y exceeds n");
    std::vector<double> out(draws.num_draws());
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = log_binomial_pmf(y, n, draws.probs(b, j));
    return out;
}

}  // namespace mrpval
