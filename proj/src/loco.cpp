#include "mrpval/loco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/psis.hpp"
#include "mrpval/rng.hpp"

namespace mrpval {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::size_t LocoCellPredictions::num_flagged() const {
    return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

LocoCellPredictions brute_force_loco(const ModelSpec& spec, const PostStratTable& table, const McmcConfig& mcmc,
                                     const CellProbDraws& full, const std::optional<CellSet>& targets) {
    const CellSet set = targets ? *targets : cell_set(table, CellSetDescriptor::observed());
    std::vector<std::size_t> missing;
    for (auto j : set.members) {
        if (!table.cell(j).observed()) missing.push_back(j);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));

    LocoCellPredictions out;
    out.source = LocoCellPredictions::Source::Brute;
    out.probs = DrawMatrix(full.num_draws(), table.size(), kNaN);
    out.available.assign(table.size(), false);
    out.rhat.assign(table.size(), kNaN);
    out.flagged.assign(table.size(), false);
    for (auto j : set.members) {
        FitOptions opt;
        opt.held_out_cell = j;
        opt.warm_start = &full.final_state;
        opt.seed = derive_seed(mcmc.seed, Stage::LocoRefit, j);
        const auto refit = fit(spec, table, mcmc, opt);
        if (refit.num_draws() != full.num_draws()) throw LengthMismatch("refit draw count differs from full fit");
        out.probs.set_column(j, refit.probs.column(j));
        out.available[j] = true;
        out.rhat[j] = refit.diagnostics.max_rhat;
        out.flagged[j] = refit.flagged();
    }
    return out;
}

std::vector<double> raw_ratios(const CellProbDraws& full, std::size_t j, std::size_t n, std::size_t y) {
    if (n == 0) throw UnobservedCell({j});
    auto ll = log_lik_cell(full, j, n, y);
    double top = -std::numeric_limits<double>::infinity();
    for (double v : ll) top = std::max(top, -v);
    for (auto& v : ll) v = std::exp(-v - top);
    return ll;
}

double PsisResult::khat_max(const CellSet& set) const {
    double m = kNaN;
    for (auto j : set.members) {
        if (!has(j)) continue;
        if (std::isnan(m) || khat[j] > m) m = khat[j];
    }
    return m;
}

std::size_t PsisResult::num_flagged(const CellSet& set) const {
    std::size_t n = 0;
    for (auto j : set.members) n += has(j) && flagged[j];
    return n;
}

PsisResult compute_psis(const CellProbDraws& full, const PostStratTable& table, std::uint64_t resample_seed,
                        double khat_threshold) {
    if (full.num_cells() != table.size()) throw LengthMismatch("draw columns do not match table cells");
    const std::size_t cells = table.size();
    PsisResult r;
    r.weights.resize(cells);
    r.resample.resize(cells);
    r.khat.assign(cells, kNaN);
    r.tail_size.assign(cells, 0);
    r.max_raw.assign(cells, kNaN);
    r.flagged.assign(cells, false);
    r.resample_seed = resample_seed;
    for (std::size_t j = 0; j < cells; ++j) {
        const auto& c = table.cell(j);
        if (!c.observed()) continue;
        auto sm = psis_smooth(raw_ratios(full, j, c.sample_count, c.sample_successes), khat_threshold);
        r.resample[j] = stratified_resample(sm.weights, resample_seed);
        r.khat[j] = sm.khat;
        r.tail_size[j] = sm.tail_size;
        r.max_raw[j] = sm.max_raw;
        r.flagged[j] = sm.flagged;
        r.weights[j] = std::move(sm.weights);
    }
    return r;
}

DrawMatrix resampled_draws(const CellProbDraws& full, const PsisResult& psis) {
    DrawMatrix out = full.probs;
    for (std::size_t j = 0; j < full.num_cells(); ++j) {
        if (!psis.has(j)) continue;
        const auto& idx = psis.resample[j];
        for (std::size_t b = 0; b < full.num_draws(); ++b) out(b, j) = full.probs(idx[b], j);
    }
    return out;
}

std::vector<double> psis_cell_means(const CellProbDraws& full, const PsisResult& psis) {
    auto means = full.probs.column_means();
    for (std::size_t j = 0; j < full.num_cells(); ++j) {
        if (!psis.has(j)) continue;
        const auto& w = psis.weights[j];
        double num = 0.0;
        double den = 0.0;
        for (std::size_t b = 0; b < full.num_draws(); ++b) {
            num += w[b] * full.probs(b, j);
            den += w[b];
        }
        means[j] = num / den;
    }
    return means;
}

void require_observed(const PsisResult& psis, const CellSet& set) {
    std::vector<std::size_t> missing;
    for (auto j : set.members) {
        if (!psis.has(j)) missing.push_back(j);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));
}

namespace {

struct Picked {
    std::vector<double> means;
    std::vector<double> truths;
    std::vector<double> weights;
};

Picked pick(const std::vector<double>& means, const PostStratTable& table, const CellSet& set,
            std::span<const double> truths) {
    if (set.empty()) throw EmptySet("empty cell set");
    require_truths(set, truths);
    Picked p;
    for (auto j : set.members) {
        p.means.push_back(means[j]);
        p.truths.push_back(truths[j]);
        p.weights.push_back(table.weights()[j]);
    }
    return p;
}

void require_available(const LocoCellPredictions& loco, const CellSet& set) {
    std::vector<std::size_t> missing;
    for (auto j : set.members) {
        if (j >= loco.available.size() || !loco.available[j]) missing.push_back(j);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));
}

}  // namespace

double psis_loco_se(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                    const CellSet& set, std::span<const double> truths) {
    require_observed(psis, set);
    const auto p = pick(psis_cell_means(full, psis), table, set, truths);
    return se_cellwise(p.means, p.truths, p.weights);
}

double psis_loco_crps(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                      const CellSet& set, std::span<const double> truths, const Permutation& perm) {
    require_observed(psis, set);
    return crps_cellwise(resampled_draws(full, psis), table, set, truths, perm);
}

double mean_cell_psis_se(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                         const CellSet& set, std::span<const double> truths) {
    require_observed(psis, set);
    const auto p = pick(psis_cell_means(full, psis), table, set, truths);
    return mean_cell_se(p.means, p.truths, p.weights);
}

double mean_cell_psis_crps(const CellProbDraws& full, const PsisResult& psis, const PostStratTable& table,
                           const CellSet& set, std::span<const double> truths, const Permutation& perm) {
    require_observed(psis, set);
    return mean_cell_crps(resampled_draws(full, psis), table, set, truths, perm);
}

double brute_loco_se(const LocoCellPredictions& loco, const PostStratTable& table, const CellSet& set,
                     std::span<const double> truths) {
    require_available(loco, set);
    return se_cellwise(loco.probs, table, set, truths);
}

double brute_loco_crps(const LocoCellPredictions& loco, const PostStratTable& table, const CellSet& set,
                       std::span<const double> truths, const Permutation& perm) {
    require_available(loco, set);
    return crps_cellwise(loco.probs, table, set, truths, perm);
}

double level_average_score(std::span<const double> level_scores) {
    if (level_scores.empty()) throw MissingLevel("no level scores");
    return std::accumulate(level_scores.begin(), level_scores.end(), 0.0) / static_cast<double>(level_scores.size());
}

double level_average_score(const std::vector<ScoreRecord>& records, int levels) {
    if (levels < 1) throw InvalidConfig("levels must be positive");
    std::vector<double> by_level(static_cast<std::size_t>(levels), kNaN);
    int variable = -1;
    for (const auto& r : records) {
        if (r.target_kind != "level") continue;
        if (variable < 0) variable = r.target_variable;
        if (r.target_variable != variable) throw InvalidConfig("level records mix variables");
        if (r.target_level < 0 || r.target_level >= levels) throw UnknownLevel("level out of range");
        auto& slot = by_level[static_cast<std::size_t>(r.target_level)];
        if (!std::isnan(slot)) throw InvalidConfig("duplicate level record");
        slot = r.value;
    }
    for (int l = 0; l < levels; ++l) {
        if (std::isnan(by_level[static_cast<std::size_t>(l)])) {
            throw MissingLevel("no score for level " + std::to_string(l));
        }
    }
    return level_average_score(by_level);
}

void write_psis_diagnostics_csv(std::ostream& out, const PsisResult& psis) {
    out << "cell,khat,tail_size,max_raw_ratio,flagged\n";
    for (std::size_t j = 0; j < psis.weights.size(); ++j) {
        if (!psis.has(j)) continue;
        out << j << ',' << csv::format(psis.khat[j]) << ',' << psis.tail_size[j] << ','
            << csv::format(psis.max_raw[j]) << ',' << (psis.flagged[j] ? 1 : 0) << '\n';
    }
}

}  // namespace mrpval
