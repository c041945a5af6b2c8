#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "mrpval/csv.hpp"
#include "mrpval/experiment.hpp"
#include "mrpval/stats.hpp"

namespace mrpval {

namespace fs = std::filesystem;
using nlohmann::json;

bool better_score(Family family, double a, double b) { return family == Family::SE ? a < b : a > b; }

double find_score(const std::vector<ScoreRecord>& records, std::size_t rep, const std::string& model, Family family,
                  Variant variant, const std::string& reference, const std::string& target_kind) {
    for (const auto& r : records) {
        if (r.rep == rep && r.model == model && r.family == family && r.variant == variant &&
            r.reference == reference && r.target_kind == target_kind && r.target_variable < 0) {
            return r.value;
        }
    }
    return std::nan("");
}

namespace {

using Key = std::tuple<std::size_t, std::string, Family, std::string, int, int, std::string>;

Key key_of(const ScoreRecord& r, bool keep_reference) {
    return {r.rep, r.model, r.family, r.target_kind, r.target_variable, r.target_level,
            keep_reference ? r.reference : std::string()};
}

class Index {
public:
    explicit Index(const std::vector<ScoreRecord>& records) {
        for (const auto& r : records) by_variant_[r.variant][key_of(r, true)] = &r;
    }

    const ScoreRecord* get(Variant v, const Key& k) const {
        const auto it = by_variant_.find(v);
        if (it == by_variant_.end()) return nullptr;
        const auto jt = it->second.find(k);
        return jt == it->second.end() ? nullptr : jt->second;
    }

    const std::map<Key, const ScoreRecord*>& rows(Variant v) const {
        static const std::map<Key, const ScoreRecord*> empty;
        const auto it = by_variant_.find(v);
        return it == by_variant_.end() ? empty : it->second;
    }

private:
    std::map<Variant, std::map<Key, const ScoreRecord*>> by_variant_;
};

std::string opt_int(int v) { return v < 0 ? "NA" : std::to_string(v); }

// Scatter extract joining variant y (possibly reference-tagged) against variant x
// (never reference-tagged) on the same rep, model, family and target.
std::string scatter(const Index& idx, Variant x, Variant y, const std::string& target_filter = {}) {
    std::ostringstream out;
    out << "rep,model,family,target_kind,target_variable,target_level,reference,x_variant,y_variant,x,y\n";
    for (const auto& [key, ry] : idx.rows(y)) {
        if (!target_filter.empty() && ry->target_kind != target_filter) continue;
        Key kx = key;
        std::get<6>(kx).clear();
        const auto* rx = idx.get(x, kx);
        if (!rx) continue;
        out << ry->rep << ',' << ry->model << ',' << to_string(ry->family) << ',' << ry->target_kind << ','
            << opt_int(ry->target_variable) << ',' << opt_int(ry->target_level) << ','
            << (ry->reference.empty() ? "NA" : ry->reference) << ',' << to_string(x) << ',' << to_string(y) << ','
            << csv::format(rx->value) << ',' << csv::format(ry->value) << '\n';
    }
    return out.str();
}

}  // namespace

std::string Report::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["reps"] = reps;
    j["flagged_rows"] = flagged_rows;
    j["observed_fraction"] = {{"mean", num(observed_fraction_mean)},
                              {"min", num(observed_fraction_min)},
                              {"max", num(observed_fraction_max)}};
    auto& o = j["orderings"] = json::array();
    for (const auto& p : orderings) {
        o.push_back({{"better", p.better},
                     {"worse", p.worse},
                     {"family", to_string(p.family)},
                     {"variant", to_string(p.variant)},
                     {"reference", p.reference},
                     {"reps", p.reps},
                     {"rate", num(p.rate)}});
    }
    auto& u = j["underestimation"] = json::array();
    for (const auto& r : underestimation) {
        u.push_back({{"family", to_string(r.family)},
                     {"variant", to_string(r.variant)},
                     {"cells", r.cells},
                     {"rate", num(r.rate)}});
    }
    auto& ra = j["reference_agreement"] = json::array();
    for (const auto& a : reference_agreement) {
        ra.push_back({{"rep", a.rep},
                      {"reference", a.reference},
                      {"family", to_string(a.family)},
                      {"models", a.models},
                      {"tau", num(a.tau)}});
    }
    return j.dump(2) + "\n";
}

Report summarize(const ResultsStore& store, const std::string& out_dir) {
    Report rep;
    const auto& records = store.records;
    std::set<std::size_t> reps;
    std::set<std::string> models;
    std::vector<std::string> model_order;
    for (const auto& r : records) {
        reps.insert(r.rep);
        if (models.insert(r.model).second) model_order.push_back(r.model);
        rep.flagged_rows += r.flagged;
    }
    rep.reps = reps.size();

    if (!store.reps.empty()) {
        std::vector<double> fr;
        for (const auto& m : store.reps) {
            if (m.error.empty()) fr.push_back(m.observed_fraction);
        }
        if (!fr.empty()) {
            rep.observed_fraction_mean = stats::mean(fr);
            rep.observed_fraction_min = *std::min_element(fr.begin(), fr.end());
            rep.observed_fraction_max = *std::max_element(fr.begin(), fr.end());
        }
    }

    const Index idx(records);

    // Pairwise ordering rates on the population target, per (variant, family, reference).
    std::set<std::tuple<Variant, Family, std::string>> combos;
    for (const auto& r : records) {
        if (r.target_kind == "population") combos.insert({r.variant, r.family, r.reference});
    }
    for (const auto& [variant, family, reference] : combos) {
        for (const auto& a : model_order) {
            for (const auto& b : model_order) {
                if (a == b) continue;
                PairRate pr{a, b, family, variant, reference, 0, 0.0};
                std::size_t wins = 0;
                for (auto r : reps) {
                    const auto* ra = idx.get(variant, Key{r, a, family, "population", -1, -1, reference});
                    const auto* rb = idx.get(variant, Key{r, b, family, "population", -1, -1, reference});
                    if (!ra || !rb) continue;
                    ++pr.reps;
                    wins += better_score(family, ra->value, rb->value);
                }
                if (pr.reps == 0) continue;
                pr.rate = static_cast<double>(wins) / static_cast<double>(pr.reps);
                rep.orderings.push_back(pr);
            }
        }
    }

    // Underestimation: estimate understates error relative to the truth-cellwise score.
    for (auto variant : {Variant::SampleProxy, Variant::BruteLoco, Variant::PsisLoco, Variant::Combined,
                         Variant::MeanCellSample, Variant::MeanCellPsis}) {
        for (auto family : {Family::SE, Family::CRPS}) {
            const Variant truth_variant = (variant == Variant::MeanCellSample || variant == Variant::MeanCellPsis)
                                              ? Variant::MeanCellTruth
                                              : Variant::TruthCellwise;
            UnderRate ur{family, variant, 0, 0.0};
            std::size_t under = 0;
            for (const auto& [key, r] : idx.rows(variant)) {
                if (r->family != family || r->target_kind != "population") continue;
                Key kt = key;
                std::get<6>(kt).clear();
                const auto* t = idx.get(truth_variant, kt);
                if (!t) continue;
                ++ur.cells;
                under += family == Family::SE ? r->value < t->value : r->value > t->value;
            }
            if (ur.cells == 0) continue;
            ur.rate = static_cast<double>(under) / static_cast<double>(ur.cells);
            rep.underestimation.push_back(ur);
        }
    }

    std::set<std::string> references;
    for (const auto& r : records) {
        if (r.variant == Variant::ReferencePsis) references.insert(r.reference);
    }
    for (auto r : reps) {
        for (const auto& ref : references) {
            for (auto family : {Family::SE, Family::CRPS}) {
                for (const char* kind : {"observed", "population"}) {
                    std::vector<double> cv;
                    std::vector<double> rs;
                    for (const auto& m : model_order) {
                        const auto* a = idx.get(Variant::PsisLoco, Key{r, m, family, kind, -1, -1, ""});
                        const auto* b = idx.get(Variant::ReferencePsis, Key{r, m, family, kind, -1, -1, ref});
                        if (!a || !b) continue;
                        cv.push_back(a->value);
                        rs.push_back(b->value);
                    }
                    if (cv.size() < 2) continue;
                    rep.reference_agreement.push_back({r, ref, family, cv.size(), stats::kendall_tau_b(cv, rs)});
                    break;
                }
            }
        }
    }

    const std::string dir = out_dir.empty() ? (fs::path(store.directory) / "report").string() : out_dir;
    if (!dir.empty()) {
        const fs::path d(dir);
        csv::write_if_changed((d / "direct_vs_cellwise.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::TruthDirect));
        csv::write_if_changed((d / "truth_vs_proxy.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::SampleProxy));
        csv::write_if_changed((d / "truth_vs_brute_loco.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::BruteLoco));
        csv::write_if_changed((d / "truth_vs_psis_loco.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::PsisLoco));
        csv::write_if_changed((d / "brute_vs_psis.csv").string(), scatter(idx, Variant::BruteLoco, Variant::PsisLoco));
        csv::write_if_changed((d / "reference_scatter.csv").string(),
                              scatter(idx, Variant::PsisLoco, Variant::ReferencePsis));
        csv::write_if_changed((d / "combined_vs_truth.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::Combined, "population"));
        csv::write_if_changed((d / "mean_cell_vs_truth.csv").string(),
                              scatter(idx, Variant::TruthCellwise, Variant::MeanCellTruth));

        // Per-level means across reps (supplementary level plots).
        std::map<std::tuple<std::string, Family, Variant, std::string, int, int>, std::vector<double>> levels;
        for (const auto& r : records) {
            if (r.target_kind != "level") continue;
            levels[{r.model, r.family, r.variant, r.reference, r.target_variable, r.target_level}].push_back(r.value);
        }
        std::ostringstream lv;
        lv << "model,family,variant,reference,target_variable,target_level,reps,mean\n";
        for (const auto& [k, v] : levels) {
            const auto& [model, family, variant, reference, var, level] = k;
            lv << model << ',' << to_string(family) << ',' << to_string(variant) << ','
               << (reference.empty() ? "NA" : reference) << ',' << var << ',' << level << ',' << v.size() << ','
               << csv::format(stats::mean(v)) << '\n';
        }
        csv::write_if_changed((d / "level_means.csv").string(), lv.str());

        std::ostringstream orr;
        orr << "better,worse,family,variant,reference,reps,rate\n";
        for (const auto& p : rep.orderings) {
            orr << p.better << ',' << p.worse << ',' << to_string(p.family) << ',' << to_string(p.variant) << ','
                << (p.reference.empty() ? "NA" : p.reference) << ',' << p.reps << ',' << csv::format(p.rate) << '\n';
        }
        csv::write_if_changed((d / "ordering_rates.csv").string(), orr.str());

        std::ostringstream ur;
        ur << "family,variant,cells,rate\n";
        for (const auto& u : rep.underestimation) {
            ur << to_string(u.family) << ',' << to_string(u.variant) << ',' << u.cells << ',' << csv::format(u.rate)
               << '\n';
        }
        csv::write_if_changed((d / "underestimation_rates.csv").string(), ur.str());
        std::ostringstream ra;
        ra << "rep,reference,family,models,tau\n";
        for (const auto& a : rep.reference_agreement) {
            ra << a.rep << ',' << a.reference << ',' << to_string(a.family) << ',' << a.models << ','
               << csv::format(a.tau) << '\n';
        }
        csv::write_if_changed((d / "reference_agreement.csv").string(), ra.str());
        csv::write_if_changed((d / "report.json").string(), rep.to_json());
    }
    return rep;
}

}  // namespace mrpval
