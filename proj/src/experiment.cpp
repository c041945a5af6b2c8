#include "mrpval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/loco.hpp"
#include "mrpval/mrp.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/reference.hpp"
#include "mrpval/rng.hpp"

namespace mrpval {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentPlan::validate() const {
    sim.validate();
    mcmc.validate();
    if (replications < 1) throw InvalidConfig("replications must be >= 1");
    if (models.empty()) throw InvalidConfig("plan fits no models");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    for (const auto& m : models) ModelSpec::preset(m).validate(sim.num_covariates);
    const bool wants_reference = wants(Variant::Reference) || wants(Variant::ReferenceLoco) ||
                                 wants(Variant::ReferencePsis) || wants(Variant::PartialReference) ||
                                 wants(Variant::Combined);
    for (const auto& r : references) {
        if (std::find(models.begin(), models.end(), r) == models.end()) {
            throw InvalidConfig("reference model " + r + " is not in the fitted set");
        }
    }
    if (wants_reference && !variants.empty() && references.empty()) {
        throw InvalidConfig("reference scores requested without a reference model");
    }
}

ExperimentPlan ExperimentPlan::paper() {
    ExperimentPlan p;
    p.name = "paper";
    p.mcmc = McmcConfig::paper();
    p.replications = 100;
    p.brute_force_reps = std::set<std::size_t>{};
    return p;
}

ExperimentPlan ExperimentPlan::desk() {
    ExperimentPlan p;
    p.name = "desk";
    p.sim.population_size = 2000;
    p.sim.sample_size = 300;
    p.mcmc = McmcConfig::desk();
    p.replications = 10;
    p.brute_force_reps = std::nullopt;
    return p;
}

std::string plan_to_json(const ExperimentPlan& plan) {
    json j;
    j["name"] = plan.name;
    j["sim"] = {{"population_size", plan.sim.population_size},
                {"sample_size", plan.sim.sample_size},
                {"num_covariates", plan.sim.num_covariates},
                {"covariate_sd", plan.sim.covariate_sd},
                {"levels_per_covariate", plan.sim.levels_per_covariate},
                {"outcome_coefs", plan.sim.outcome_coefs},
                {"inclusion_coefs", plan.sim.inclusion_coefs},
                {"constraint", to_string(plan.sim.constraint)}};
    j["mcmc"] = {{"chains", plan.mcmc.chains},
                 {"warmup", plan.mcmc.warmup},
                 {"iterations", plan.mcmc.iterations},
                 {"thin", plan.mcmc.thin},
                 {"refit_warmup", plan.mcmc.refit_warmup},
                 {"rhat_threshold", plan.mcmc.rhat_threshold},
                 {"target_accept", plan.mcmc.target_accept}};
    j["models"] = plan.models;
    j["references"] = plan.references;
    auto& vs = j["variants"] = json::array();
    for (auto v : plan.variants) vs.push_back(to_string(v));
    j["replications"] = plan.replications;
    j["base_seed"] = plan.base_seed;
    if (plan.brute_force_reps) {
        j["brute_force"] = std::vector<std::size_t>(plan.brute_force_reps->begin(), plan.brute_force_reps->end());
    } else {
        j["brute_force"] = "all";
    }
    j["subpopulations"] = plan.subpopulations;
    return j.dump(2) + "\n";
}

ExperimentPlan plan_from_json(const std::string& text, const ExperimentPlan& base) {
    ExperimentPlan p = base;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("plan is not valid JSON: ") + e.what());
    }
    try {
        if (j.contains("name")) p.name = j["name"].get<std::string>();
        if (j.contains("sim")) {
            const auto& s = j["sim"];
            if (s.contains("population_size")) p.sim.population_size = s["population_size"].get<std::size_t>();
            if (s.contains("sample_size")) p.sim.sample_size = s["sample_size"].get<std::size_t>();
            if (s.contains("num_covariates")) p.sim.num_covariates = s["num_covariates"].get<std::size_t>();
            if (s.contains("covariate_sd")) p.sim.covariate_sd = s["covariate_sd"].get<double>();
            if (s.contains("levels_per_covariate")) p.sim.levels_per_covariate = s["levels_per_covariate"].get<int>();
            if (s.contains("outcome_coefs")) p.sim.outcome_coefs = s["outcome_coefs"].get<std::vector<double>>();
            if (s.contains("inclusion_coefs")) p.sim.inclusion_coefs = s["inclusion_coefs"].get<std::vector<double>>();
            if (s.contains("constraint")) p.sim.constraint = parse_sampling_constraint(s["constraint"].get<std::string>());
        }
        if (j.contains("mcmc")) {
            const auto& m = j["mcmc"];
            if (m.contains("chains")) p.mcmc.chains = m["chains"].get<int>();
            if (m.contains("warmup")) p.mcmc.warmup = m["warmup"].get<int>();
            if (m.contains("iterations")) p.mcmc.iterations = m["iterations"].get<int>();
            if (m.contains("thin")) p.mcmc.thin = m["thin"].get<int>();
            if (m.contains("refit_warmup")) p.mcmc.refit_warmup = m["refit_warmup"].get<int>();
            if (m.contains("rhat_threshold")) p.mcmc.rhat_threshold = m["rhat_threshold"].get<double>();
            if (m.contains("target_accept")) p.mcmc.target_accept = m["target_accept"].get<double>();
        }
        if (j.contains("models")) p.models = j["models"].get<std::vector<std::string>>();
        if (j.contains("references")) p.references = j["references"].get<std::vector<std::string>>();
        if (j.contains("reference")) p.references = {j["reference"].get<std::string>()};
        if (j.contains("variants")) {
            p.variants.clear();
            for (const auto& v : j["variants"]) p.variants.insert(parse_variant(v.get<std::string>()));
        }
        if (j.contains("replications")) p.replications = j["replications"].get<std::size_t>();
        if (j.contains("base_seed")) p.base_seed = j["base_seed"].get<std::uint64_t>();
        if (j.contains("brute_force")) {
            const auto& b = j["brute_force"];
            if (b.is_string()) {
                const auto s = b.get<std::string>();
                if (s == "all") {
                    p.brute_force_reps = std::nullopt;
                } else if (s == "none") {
                    p.brute_force_reps = std::set<std::size_t>{};
                } else {
                    throw ParseError("brute_force must be \"all\", \"none\" or a list of reps");
                }
            } else {
                const auto reps = b.get<std::vector<std::size_t>>();
                p.brute_force_reps = std::set<std::size_t>(reps.begin(), reps.end());
            }
        }
        if (j.contains("subpopulations")) p.subpopulations = j["subpopulations"].get<bool>();
        if (j.contains("workers")) p.workers = j["workers"].get<std::size_t>();
        if (j.contains("output_dir")) p.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad plan field: ") + e.what());
    }
    return p;
}

std::uint64_t rep_seed(std::uint64_t base_seed, std::size_t rep) {
    return derive_seed(base_seed, Stage::Replication, rep);
}

namespace {

struct Fitted {
    CellProbDraws draws;
    PsisResult psis;
    std::optional<LocoCellPredictions> loco;

    FittedModel view() const { return {&draws, &psis, loco ? &*loco : nullptr}; }
};

struct Target {
    CellSet set;
    std::string kind;
    int variable = -1;  // 1-based
    int level = -1;
    bool all_observed = false;
};

class Emitter {
public:
    Emitter(std::size_t rep, std::uint64_t seed) : rep_(rep), seed_(seed) {}

    void add(const std::string& model, Family family, Variant variant, const Target& t, double value,
             double khat, bool flagged, const std::string& reference = {}) {
        ScoreRecord r;
        r.rep = rep_;
        r.model = model;
        r.family = family;
        r.variant = variant;
        r.target_kind = t.kind;
        r.target_variable = t.variable;
        r.target_level = t.level;
        r.value = value;
        r.khat_max = khat;
        r.flagged = flagged;
        r.reference = reference;
        r.seed = seed_;
        records.push_back(std::move(r));
    }

    std::vector<ScoreRecord> records;

private:
    std::size_t rep_;
    std::uint64_t seed_;
};

double nan_max(double a, double b) {
    if (std::isnan(a)) return b;
    if (std::isnan(b)) return a;
    return std::max(a, b);
}

std::vector<Target> make_targets(const PostStratTable& table, bool subpopulations) {
    std::vector<Target> out;
    auto push = [&](CellSet set, std::string kind, int variable, int level) {
        if (set.empty()) return;
        bool all = true;
        for (auto j : set.members) all = all && table.cell(j).observed();
        out.push_back({std::move(set), std::move(kind), variable, level, all});
    };
    push(cell_set(table, CellSetDescriptor::population()), "population", -1, -1);
    if (subpopulations) {
        for (std::size_t k = 0; k < table.num_covariates(); ++k) {
            for (int l = 0; l < table.levels(); ++l) {
                push(cell_set(table, CellSetDescriptor::level_of(static_cast<int>(k), l)), "level",
                     static_cast<int>(k) + 1, l);
            }
        }
    }
    if (!table.all_observed() && table.num_observed() > 0) {
        push(cell_set(table, CellSetDescriptor::observed()), "observed", -1, -1);
    }
    return out;
}

void add_level_averages(std::vector<ScoreRecord>& records, int levels) {
    using Key = std::tuple<std::string, Family, Variant, std::string, int>;
    std::map<Key, std::vector<const ScoreRecord*>> groups;
    for (const auto& r : records) {
        if (r.target_kind != "level") continue;
        groups[{r.model, r.family, r.variant, r.reference, r.target_variable}].push_back(&r);
    }
    std::vector<ScoreRecord> extra;
    for (const auto& [key, rows] : groups) {
        if (rows.size() != static_cast<std::size_t>(levels)) continue;
        std::vector<ScoreRecord> copy;
        double khat = std::nan("");
        bool flagged = false;
        for (const auto* r : rows) {
            copy.push_back(*r);
            khat = nan_max(khat, r->khat_max);
            flagged = flagged || r->flagged;
        }
        ScoreRecord avg = *rows.front();
        avg.target_kind = "level-average";
        avg.target_level = -1;
        avg.value = level_average_score(copy, levels);
        avg.khat_max = khat;
        avg.flagged = flagged;
        extra.push_back(std::move(avg));
    }
    records.insert(records.end(), extra.begin(), extra.end());
}

}  // namespace

std::vector<ScoreRecord> run_replication(const ExperimentPlan& plan, std::size_t rep, RepMeta& meta) {
    const std::uint64_t seed = rep_seed(plan.base_seed, rep);
    SimConfig sim = plan.sim;
    sim.seed = seed;
    const auto pop = generate_population(sim);
    const auto sample = draw_sample(pop, sim);
    const auto table = build_table(pop, sample);

    meta.rep = rep;
    meta.seed = seed;
    meta.cells = table.size();
    meta.observed_cells = table.num_observed();
    meta.observed_fraction = static_cast<double>(meta.observed_cells) / static_cast<double>(meta.cells);
    meta.population_mean = table.population_mean();
    const bool brute = plan.brute_force_in(rep) && (plan.wants(Variant::BruteLoco) || plan.wants(Variant::ReferenceLoco));
    meta.brute_force = brute;

    const std::size_t draws = plan.mcmc.num_draws();
    const Permutation perm(draws, derive_seed(seed, Stage::Permutation));
    const std::uint64_t resample_seed = derive_seed(seed, Stage::Resample);

    std::map<std::string, Fitted> fits;
    for (const auto& label : plan.models) {
        const auto spec = ModelSpec::preset(label);
        McmcConfig mc = plan.mcmc;
        mc.seed = derive_seed(seed, {static_cast<std::uint64_t>(Stage::Fit), hash_label(label)});
        Fitted f;
        f.draws = fit(spec, table, mc);
        f.psis = compute_psis(f.draws, table, resample_seed);
        if (brute) f.loco = brute_force_loco(spec, table, mc, f.draws);
        FitSummary s;
        s.model = label;
        s.max_rhat = f.draws.diagnostics.max_rhat;
        s.min_bulk_ess = f.draws.diagnostics.min_bulk_ess;
        s.converged = f.draws.diagnostics.converged;
        const CellSet all = cell_set(table, CellSetDescriptor::population());
        s.psis_flagged = f.psis.num_flagged(all);
        s.khat_max = f.psis.khat_max(all);
        if (f.loco) {
            s.brute_refits = static_cast<std::size_t>(std::count(f.loco->available.begin(), f.loco->available.end(), true));
            s.brute_flagged = f.loco->num_flagged();
        }
        meta.fits.push_back(s);
        fits.emplace(label, std::move(f));
    }

    const auto truths = table.true_probs();
    const auto targets = make_targets(table, plan.subpopulations);
    const CellSet obs = cell_set(table, CellSetDescriptor::observed());
    const CellSet unobs = cell_set(table, CellSetDescriptor::unobserved());
    Emitter out(rep, seed);

    for (const auto& label : plan.models) {
        const Fitted& f = fits.at(label);
        const bool bad_fit = f.draws.flagged();
        const auto& probs = f.draws.probs;
        for (const auto& t : targets) {
            const auto& S = t.set;
            const double wt = [&] {
                double s = 0.0;
                for (auto j : S.members) s += table.weights()[j] * truths[j];
                return s / set_weight(table, S);
            }();
            const auto est = aggregate(probs, table, S, label);
            const double none = std::nan("");
            if (plan.wants(Variant::TruthDirect)) {
                out.add(label, Family::SE, Variant::TruthDirect, t, se_direct(est, wt), none, bad_fit);
                out.add(label, Family::CRPS, Variant::TruthDirect, t, crps_draws(est, wt, perm), none, bad_fit);
            }
            if (plan.wants(Variant::TruthCellwise)) {
                out.add(label, Family::SE, Variant::TruthCellwise, t, se_cellwise(probs, table, S, truths), none, bad_fit);
                out.add(label, Family::CRPS, Variant::TruthCellwise, t, crps_cellwise(probs, table, S, truths, perm), none,
                        bad_fit);
            }
            if (plan.wants(Variant::MeanCellTruth)) {
                out.add(label, Family::SE, Variant::MeanCellTruth, t, mean_cell_se(probs, table, S, truths), none, bad_fit);
                out.add(label, Family::CRPS, Variant::MeanCellTruth, t, mean_cell_crps(probs, table, S, truths, perm), none,
                        bad_fit);
            }
            if (t.all_observed) {
                const auto proxy = sample_proxy_truths(table, S);
                const double khat = f.psis.khat_max(S);
                const bool psis_bad = bad_fit || f.psis.num_flagged(S) > 0;
                if (plan.wants(Variant::SampleProxy)) {
                    out.add(label, Family::SE, Variant::SampleProxy, t, se_cellwise(probs, table, S, proxy), none, bad_fit);
                    out.add(label, Family::CRPS, Variant::SampleProxy, t, crps_cellwise(probs, table, S, proxy, perm),
                            none, bad_fit);
                }
                if (plan.wants(Variant::MeanCellSample)) {
                    out.add(label, Family::SE, Variant::MeanCellSample, t, mean_cell_se(probs, table, S, proxy), none,
                            bad_fit);
                    out.add(label, Family::CRPS, Variant::MeanCellSample, t, mean_cell_crps(probs, table, S, proxy, perm),
                            none, bad_fit);
                }
                if (plan.wants(Variant::PsisLoco)) {
                    out.add(label, Family::SE, Variant::PsisLoco, t, psis_loco_se(f.draws, f.psis, table, S, proxy), khat,
                            psis_bad);
                    out.add(label, Family::CRPS, Variant::PsisLoco, t,
                            psis_loco_crps(f.draws, f.psis, table, S, proxy, perm), khat, psis_bad);
                }
                if (plan.wants(Variant::MeanCellPsis)) {
                    out.add(label, Family::SE, Variant::MeanCellPsis, t, mean_cell_psis_se(f.draws, f.psis, table, S, proxy),
                            khat, psis_bad);
                    out.add(label, Family::CRPS, Variant::MeanCellPsis, t,
                            mean_cell_psis_crps(f.draws, f.psis, table, S, proxy, perm), khat, psis_bad);
                }
                if (f.loco && plan.wants(Variant::BruteLoco)) {
                    bool loco_bad = bad_fit;
                    for (auto j : S.members) loco_bad = loco_bad || f.loco->flagged[j];
                    out.add(label, Family::SE, Variant::BruteLoco, t, brute_loco_se(*f.loco, table, S, proxy), none,
                            loco_bad);
                    out.add(label, Family::CRPS, Variant::BruteLoco, t, brute_loco_crps(*f.loco, table, S, proxy, perm),
                            none, loco_bad);
                }
            }
            for (const auto& ref_label : plan.references) {
                const Fitted& r = fits.at(ref_label);
                const ReferencePair pair{f.view(), r.view(), &table, &perm};
                const bool pair_bad = bad_fit || r.draws.flagged();
                if (plan.wants(Variant::Reference)) {
                    out.add(label, Family::SE, Variant::Reference, t, ref_se(pair, S, ReferenceForm::Full), none, pair_bad,
                            ref_label);
                    out.add(label, Family::CRPS, Variant::Reference, t, ref_crps(pair, S, ReferenceForm::Full), none,
                            pair_bad, ref_label);
                }
                if (t.all_observed && plan.wants(Variant::ReferencePsis)) {
                    const double khat = nan_max(f.psis.khat_max(S), r.psis.khat_max(S));
                    const bool bad = pair_bad || f.psis.num_flagged(S) > 0 || r.psis.num_flagged(S) > 0;
                    out.add(label, Family::SE, Variant::ReferencePsis, t, ref_se(pair, S, ReferenceForm::Psis), khat, bad,
                            ref_label);
                    out.add(label, Family::CRPS, Variant::ReferencePsis, t, ref_crps(pair, S, ReferenceForm::Psis), khat,
                            bad, ref_label);
                }
                if (t.all_observed && f.loco && r.loco && plan.wants(Variant::ReferenceLoco)) {
                    out.add(label, Family::SE, Variant::ReferenceLoco, t, ref_se(pair, S, ReferenceForm::Loco), none,
                            pair_bad, ref_label);
                    out.add(label, Family::CRPS, Variant::ReferenceLoco, t, ref_crps(pair, S, ReferenceForm::Loco), none,
                            pair_bad, ref_label);
                }
                if (t.kind == "population" && !obs.empty()) {
                    const double khat = nan_max(f.psis.khat_max(obs), r.psis.khat_max(obs));
                    const bool bad = pair_bad || f.psis.num_flagged(obs) > 0 || r.psis.num_flagged(obs) > 0;
                    if (plan.wants(Variant::PartialReference)) {
                        out.add(label, Family::SE, Variant::PartialReference, t, partial_ref_se(pair, obs, unobs), khat,
                                bad, ref_label);
                        out.add(label, Family::CRPS, Variant::PartialReference, t, partial_ref_crps(pair, obs, unobs),
                                khat, bad, ref_label);
                    }
                    if (plan.wants(Variant::Combined)) {
                        const auto proxy = sample_proxy_truths(table, obs);
                        const double ck = f.psis.khat_max(obs);
                        const bool cbad = pair_bad || f.psis.num_flagged(obs) > 0;
                        out.add(label, Family::SE, Variant::Combined, t,
                                combined_se(f.view(), r.view(), table, obs, unobs, proxy), ck, cbad, ref_label);
                        out.add(label, Family::CRPS, Variant::Combined, t,
                                combined_crps(f.view(), r.view(), table, obs, unobs, proxy, perm), ck, cbad, ref_label);
                    }
                }
            }
        }
    }
    if (plan.subpopulations) add_level_averages(out.records, table.levels());
    return std::move(out.records);
}

std::string rep_meta_to_json(const RepMeta& m) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["rep"] = m.rep;
    j["seed"] = m.seed;
    j["cells"] = m.cells;
    j["observed_cells"] = m.observed_cells;
    j["observed_fraction"] = num(m.observed_fraction);
    j["population_mean"] = num(m.population_mean);
    j["brute_force"] = m.brute_force;
    j["error"] = m.error;
    auto& fs_ = j["fits"] = json::array();
    for (const auto& f : m.fits) {
        fs_.push_back({{"model", f.model},
                       {"max_rhat", num(f.max_rhat)},
                       {"min_bulk_ess", num(f.min_bulk_ess)},
                       {"converged", f.converged},
                       {"psis_flagged", f.psis_flagged},
                       {"khat_max", num(f.khat_max)},
                       {"brute_refits", f.brute_refits},
                       {"brute_flagged", f.brute_flagged}});
    }
    return j.dump(2) + "\n";
}

RepMeta rep_meta_from_json(const std::string& text) {
    const auto j = json::parse(text);
    auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
    RepMeta m;
    m.rep = j.at("rep").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cells = j.at("cells").get<std::size_t>();
    m.observed_cells = j.at("observed_cells").get<std::size_t>();
    m.observed_fraction = num(j.at("observed_fraction"));
    m.population_mean = num(j.at("population_mean"));
    m.brute_force = j.at("brute_force").get<bool>();
    m.error = j.at("error").get<std::string>();
    for (const auto& f : j.at("fits")) {
        FitSummary s;
        s.model = f.at("model").get<std::string>();
        s.max_rhat = num(f.at("max_rhat"));
        s.min_bulk_ess = num(f.at("min_bulk_ess"));
        s.converged = f.at("converged").get<bool>();
        s.psis_flagged = f.at("psis_flagged").get<std::size_t>();
        s.khat_max = num(f.at("khat_max"));
        s.brute_refits = f.at("brute_refits").get<std::size_t>();
        s.brute_flagged = f.at("brute_flagged").get<std::size_t>();
        m.fits.push_back(std::move(s));
    }
    return m;
}

namespace {

std::string rep_stem(const fs::path& dir, std::size_t rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%04zu", rep);
    return (dir / "reps" / buf).string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Plan identity on disk leaves out run-time knobs (workers, output directory).
std::string plan_identity(const ExperimentPlan& plan) { return plan_to_json(plan); }

}  // namespace

ResultsStore run(const ExperimentPlan& plan) {
    plan.validate();
    const fs::path dir(plan.output_dir);
    fs::create_directories(dir / "reps");
    const fs::path plan_path = dir / "plan.json";
    const std::string identity = plan_identity(plan);
    if (fs::exists(plan_path) && slurp(plan_path) != identity) {
        throw InvalidConfig("results directory " + dir.string() + " holds a different plan");
    }
    csv::write_if_changed(plan_path.string(), identity);

    std::vector<std::size_t> pending;
    for (std::size_t r = 0; r < plan.replications; ++r) {
        if (!fs::exists(rep_stem(dir, r) + ".csv")) pending.push_back(r);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const std::size_t rep = pending[i];
            RepMeta meta;
            meta.rep = rep;
            meta.seed = rep_seed(plan.base_seed, rep);
            std::vector<ScoreRecord> records;
            try {
                records = run_replication(plan, rep, meta);
            } catch (const std::exception& e) {
                meta.error = e.what();
                records.clear();
            }
            std::ostringstream rows;
            write_scores_csv(rows, records);
            const std::string stem = rep_stem(dir, rep);
            csv::write_if_changed(stem + ".json", rep_meta_to_json(meta));
            csv::write_if_changed(stem + ".csv", rows.str());
        }
    };
    const std::size_t n_threads = std::min(plan.workers, std::max<std::size_t>(pending.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::ostringstream all;
    write_scores_header(all);
    for (std::size_t r = 0; r < plan.replications; ++r) {
        const std::string body = slurp(rep_stem(dir, r) + ".csv");
        const auto nl = body.find('\n');
        if (nl != std::string::npos) all << body.substr(nl + 1);
    }
    csv::write_if_changed((dir / "scores.csv").string(), all.str());
    return load_results(plan.output_dir);
}

ResultsStore load_results(const std::string& directory) {
    const fs::path dir(directory);
    ResultsStore store;
    store.directory = directory;
    std::ifstream in(dir / "scores.csv");
    if (!in) throw Error("no scores.csv in " + directory);
    store.records = read_scores_csv(in);
    if (fs::exists(dir / "reps")) {
        std::vector<fs::path> metas;
        for (const auto& e : fs::directory_iterator(dir / "reps")) {
            if (e.path().extension() == ".json") metas.push_back(e.path());
        }
        std::sort(metas.begin(), metas.end());
        for (const auto& p : metas) store.reps.push_back(rep_meta_from_json(slurp(p)));
    }
    return store;
}

}  // namespace mrpval
