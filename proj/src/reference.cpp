#include "mrpval/reference.hpp"

#include <cmath>

#include "json.hpp"

#include "mrpval/errors.hpp"
#include "mrpval/stats.hpp"

namespace mrpval {

namespace {

void check_set(const PostStratTable& table, const CellSet& set) {
    if (set.empty()) throw EmptySet("empty cell set");
    for (auto j : set.members) {
        if (j >= table.size()) throw UnknownLevel("cell " + std::to_string(j) + " not in table");
    }
}

void check_pair(const ReferencePair& pair) {
    if (!pair.table || !pair.candidate.draws || !pair.reference.draws) throw InvalidConfig("incomplete reference pair");
    if (pair.candidate.draws->num_cells() != pair.table->size() ||
        pair.reference.draws->num_cells() != pair.table->size()) {
        throw LengthMismatch("draw columns do not match table cells");
    }
    if (pair.candidate.draws->num_draws() != pair.reference.draws->num_draws()) {
        throw LengthMismatch("models have different draw counts");
    }
}

const PsisResult& need_psis(const FittedModel& m) {
    if (!m.psis) throw InvalidConfig("model " + m.label() + " has no PSIS result");
    return *m.psis;
}

const LocoCellPredictions& need_loco(const FittedModel& m, const CellSet& set) {
    if (!m.loco) throw InvalidConfig("model " + m.label() + " has no brute-force LOCO predictions");
    std::vector<std::size_t> missing;
    for (auto j : set.members) {
        if (!m.loco->available[j]) missing.push_back(j);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));
    return *m.loco;
}

// Column means of the predictions a form uses, indexed by cell id.
std::vector<double> form_means(const FittedModel& m, const CellSet& set, ReferenceForm form) {
    switch (form) {
        case ReferenceForm::Full: return m.draws->probs.column_means();
        case ReferenceForm::Loco: return need_loco(m, set).probs.column_means();
        case ReferenceForm::Psis: {
            const auto& psis = need_psis(m);
            require_observed(psis, set);
            return psis_cell_means(*m.draws, psis);
        }
    }
    return {};
}

DrawMatrix form_draws(const FittedModel& m, const CellSet& set, ReferenceForm form) {
    switch (form) {
        case ReferenceForm::Full: return m.draws->probs;
        case ReferenceForm::Loco: return need_loco(m, set).probs;
        case ReferenceForm::Psis: {
            const auto& psis = need_psis(m);
            require_observed(psis, set);
            return resampled_draws(*m.draws, psis);
        }
    }
    return {};
}

double weighted_sq(const PostStratTable& table, const CellSet& set, const std::vector<double>& diff) {
    const auto& w = table.weights();
    double s = 0.0;
    for (auto j : set.members) s += w[j] * diff[j];
    const double e = s / set_weight(table, set);
    return e * e;
}

void check_partition(const PostStratTable& table, const CellSet& obs, const CellSet& unobs) {
    std::vector<int> hits(table.size(), 0);
    for (auto j : obs.members) {
        if (j >= table.size()) throw BadPartition("observed set references an unknown cell");
        ++hits[j];
    }
    for (auto j : unobs.members) {
        if (j >= table.size()) throw BadPartition("unobserved set references an unknown cell");
        ++hits[j];
    }
    for (int h : hits) {
        if (h != 1) throw BadPartition("observed and unobserved sets must partition the table");
    }
}

CellSet whole(const PostStratTable& table) { return cell_set(table, CellSetDescriptor::population()); }

}  // namespace

double energy_score(const DrawMatrix& x, const DrawMatrix& y, const PostStratTable& table, const CellSet& set,
                    const Permutation& perm) {
    check_set(table, set);
    if (x.num_draws() != y.num_draws() || x.num_cells() != table.size() || y.num_cells() != table.size()) {
        throw LengthMismatch("draw matrices do not align");
    }
    if (perm.size() != x.num_draws()) throw LengthMismatch("permutation size does not match draw count");
    const auto& w = table.weights();
    const double total = set_weight(table, set);
    // Weighted mean over the set of a(row b) - c(row d).
    auto diff = [&](const DrawMatrix& a, std::size_t b, const DrawMatrix& c, std::size_t d) {
        const auto ab = a.row(b);
        const auto cd = c.row(d);
        double v = 0.0;
        for (auto j : set.members) v += w[j] * (ab[j] - cd[j]);
        return v / total;
    };
    double s = 0.0;
    if (perm.involution()) {
        for (std::size_t b = 0; b < x.num_draws(); ++b) {
            const std::size_t c = perm[b];
            if (c == b) {
                s -= std::abs(diff(x, b, y, b));
                continue;
            }
            if (c < b) continue;
            const auto yb = y.row(b);
            const auto yc = y.row(c);
            bool y_tied = true;
            for (auto j : set.members) y_tied = y_tied && yb[j] == yc[j];
            if (y_tied) {
                // Point-mass reference on this pair: same closed form as the CRPS.
                s += crps_pair_term(diff(x, b, y, c), diff(x, c, y, b));
            } else {
                s += std::abs(diff(x, b, x, c)) + std::abs(diff(y, b, y, c)) - std::abs(diff(x, b, y, c)) -
                     std::abs(diff(x, c, y, b));
            }
        }
    } else {
        for (std::size_t b = 0; b < x.num_draws(); ++b) {
            const std::size_t c = perm[b];
            s += 0.5 * std::abs(diff(x, b, x, c)) + 0.5 * std::abs(diff(y, b, y, c)) - std::abs(diff(x, b, y, c));
        }
    }
    return s / static_cast<double>(x.num_draws());
}

double ref_se(const ReferencePair& pair, const CellSet& set, ReferenceForm form) {
    check_pair(pair);
    check_set(*pair.table, set);
    const auto mc = form_means(pair.candidate, set, form);
    const auto mr = form_means(pair.reference, set, form);
    std::vector<double> diff(mc.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = mc[j] - mr[j];
    return weighted_sq(*pair.table, set, diff);
}

double ref_crps(const ReferencePair& pair, const CellSet& set, ReferenceForm form) {
    check_pair(pair);
    check_set(*pair.table, set);
    if (!pair.perm) throw InvalidConfig("reference CRPS needs a permutation");
    return energy_score(form_draws(pair.candidate, set, form), form_draws(pair.reference, set, form), *pair.table,
                        set, *pair.perm);
}

double partial_ref_se(const ReferencePair& pair, const CellSet& obs, const CellSet& unobs) {
    check_pair(pair);
    check_partition(*pair.table, obs, unobs);
    const auto& pc = need_psis(pair.candidate);
    const auto& pr = need_psis(pair.reference);
    require_observed(pc, obs);
    require_observed(pr, obs);
    const auto mc = psis_cell_means(*pair.candidate.draws, pc);
    const auto mr = psis_cell_means(*pair.reference.draws, pr);
    const auto fc = pair.candidate.draws->probs.column_means();
    const auto fr = pair.reference.draws->probs.column_means();
    std::vector<double> diff(pair.table->size());
    for (auto j : obs.members) diff[j] = mc[j] - mr[j];
    for (auto j : unobs.members) diff[j] = fc[j] - fr[j];
    return weighted_sq(*pair.table, whole(*pair.table), diff);
}

namespace {

// Observed columns resampled, unobserved columns from the full fit.
DrawMatrix mixed_draws(const FittedModel& m, const CellSet& obs) {
    const auto& psis = need_psis(m);
    require_observed(psis, obs);
    DrawMatrix out = m.draws->probs;
    const auto rs = resampled_draws(*m.draws, psis);
    for (auto j : obs.members) out.set_column(j, rs.column(j));
    return out;
}

}  // namespace

double partial_ref_crps(const ReferencePair& pair, const CellSet& obs, const CellSet& unobs) {
    check_pair(pair);
    check_partition(*pair.table, obs, unobs);
    if (!pair.perm) throw InvalidConfig("reference CRPS needs a permutation");
    return energy_score(mixed_draws(pair.candidate, obs), mixed_draws(pair.reference, obs), *pair.table,
                        whole(*pair.table), *pair.perm);
}

double combined_se(const FittedModel& candidate, const FittedModel& reference, const PostStratTable& table,
                   const CellSet& obs, const CellSet& unobs, std::span<const double> truths_obs) {
    check_partition(table, obs, unobs);
    require_truths(obs, truths_obs);
    const auto& pc = need_psis(candidate);
    require_observed(pc, obs);
    const auto mc = psis_cell_means(*candidate.draws, pc);
    const auto fc = candidate.draws->probs.column_means();
    std::vector<double> diff(table.size());
    for (auto j : obs.members) diff[j] = mc[j] - truths_obs[j];
    if (!unobs.empty()) {
        if (!reference.draws) throw InvalidConfig("combined score needs a reference model for unobserved cells");
        const auto fr = reference.draws->probs.column_means();
        for (auto j : unobs.members) diff[j] = fc[j] - fr[j];
    }
    return weighted_sq(table, whole(table), diff);
}

double combined_crps(const FittedModel& candidate, const FittedModel& reference, const PostStratTable& table,
                     const CellSet& obs, const CellSet& unobs, std::span<const double> truths_obs,
                     const Permutation& perm) {
    check_partition(table, obs, unobs);
    require_truths(obs, truths_obs);
    const DrawMatrix x = mixed_draws(candidate, obs);
    DrawMatrix y(x.num_draws(), x.num_cells());
    for (auto j : obs.members) {
        for (std::size_t b = 0; b < y.num_draws(); ++b) y(b, j) = truths_obs[j];
    }
    if (!unobs.empty()) {
        if (!reference.draws) throw InvalidConfig("combined score needs a reference model for unobserved cells");
        for (auto j : unobs.members) y.set_column(j, reference.draws->probs.column(j));
    }
    return energy_score(x, y, table, whole(table), perm);
}

ReferenceCheck reference_check(const std::vector<FittedModel>& candidates, const FittedModel& reference,
                               const PostStratTable& table, const Permutation& perm) {
    ReferenceCheck rc;
    rc.reference = reference.label();
    const CellSet obs = cell_set(table, CellSetDescriptor::observed());
    const auto truths = sample_proxy_truths(table, obs);
    for (const auto& c : candidates) {
        const auto& psis = need_psis(c);
        rc.candidates.push_back(c.label());
        rc.cv_se.push_back(psis_loco_se(*c.draws, psis, table, obs, truths));
        rc.cv_crps.push_back(psis_loco_crps(*c.draws, psis, table, obs, truths, perm));
        const ReferencePair pair{c, reference, &table, &perm};
        rc.ref_se.push_back(ref_se(pair, obs, ReferenceForm::Psis));
        rc.ref_crps.push_back(ref_crps(pair, obs, ReferenceForm::Psis));
    }
    if (candidates.size() >= 2) {
        rc.tau_se = stats::kendall_tau_b(rc.cv_se, rc.ref_se);
        rc.tau_crps = stats::kendall_tau_b(rc.cv_crps, rc.ref_crps);
    } else {
        rc.tau_se = rc.tau_crps = std::nan("");
    }
    return rc;
}

std::string ReferenceCheck::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["reference"] = reference;
    j["tau_se"] = num(tau_se);
    j["tau_crps"] = num(tau_crps);
    auto& cs = j["candidates"] = nlohmann::json::array();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        cs.push_back({{"model", candidates[i]},
                      {"cv_se", num(cv_se[i])},
                      {"ref_se", num(ref_se[i])},
                      {"cv_crps", num(cv_crps[i])},
                      {"ref_crps", num(ref_crps[i])}});
    }
    return j.dump(2);
}

}  // namespace mrpval
