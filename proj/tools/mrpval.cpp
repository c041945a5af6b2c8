#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/experiment.hpp"
#include "mrpval/loco.hpp"
#include "mrpval/model.hpp"
#include "mrpval/mrp.hpp"
#include "mrpval/poststrat.hpp"
#include "mrpval/reference.hpp"
#include "mrpval/rng.hpp"
#include "mrpval/scoring.hpp"
#include "mrpval/simulation.hpp"

namespace fs = std::filesystem;
using namespace mrpval;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) { csv::write_if_changed(path, content); }

PostStratTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return read_table_csv(in);
}

DrawMatrix load_draws(const std::string& path) {
    if (path.ends_with(".bin")) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot read " + path);
        return read_draws_binary(in);
    }
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return read_draws_csv(in);
}

McmcConfig scale_mcmc(const std::string& scale) { return scale == "paper" ? McmcConfig::paper() : McmcConfig::desk(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRP cellwise scoring and leave-one-cell-out validation"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string scale = "desk";
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Base seed");
        sub->add_option("--scale", scale, "Preset scale")->check(CLI::IsMember({"paper", "desk"}));
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a population and sample; write CSVs");
    std::string sim_out = "sim";
    std::string constraint = "all-cells";
    std::size_t pop_size = 0;
    std::size_t sample_size = 0;
    add_common(sim);
    sim->add_option("--out", sim_out, "Output directory");
    sim->add_option("--constraint", constraint, "all-cells | all-levels | unconstrained");
    sim->add_option("--population-size", pop_size, "Override N");
    sim->add_option("--sample-size", sample_size, "Override n");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit one model to a poststratification table");
    std::string table_path;
    std::string model = "full";
    std::string draws_out = "draws.csv";
    std::string diag_out;
    add_common(fit_cmd);
    fit_cmd->add_option("--table", table_path, "Table CSV")->required();
    fit_cmd->add_option("--model", model, "Model label");
    fit_cmd->add_option("--out", draws_out, "Draws output (.csv or .bin)");
    fit_cmd->add_option("--diagnostics", diag_out, "Diagnostics JSON output");

    // score
    auto* score = app.add_subcommand("score", "Score cell-probability draws against a table");
    std::string draws_path;
    std::string ref_path;
    std::string score_out;
    std::string label = "model";
    add_common(score);
    score->add_option("--table", table_path, "Table CSV")->required();
    score->add_option("--draws", draws_path, "Candidate draws (.csv or .bin)")->required();
    score->add_option("--reference-draws", ref_path, "Reference model draws");
    score->add_option("--label", label, "Model label for output rows");
    score->add_option("--out", score_out, "scores CSV output (default stdout)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a full experiment plan");
    std::string plan_path;
    std::string out_dir;
    std::size_t workers = 0;
    std::size_t reps = 0;
    add_common(run_cmd);
    run_cmd->add_option("--plan", plan_path, "Plan JSON");
    run_cmd->add_option("--out", out_dir, "Results directory");
    run_cmd->add_option("--workers", workers, "Parallel replications");
    run_cmd->add_option("--reps", reps, "Override replication count");

    // report
    auto* report = app.add_subcommand("report", "Summarize a results directory");
    std::string results_dir = "results";
    report->add_option("--results", results_dir, "Results directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            SimConfig cfg;
            if (scale == "desk") {
                cfg.population_size = 2000;
                cfg.sample_size = 300;
            }
            if (pop_size) cfg.population_size = pop_size;
            if (sample_size) cfg.sample_size = sample_size;
            cfg.constraint = parse_sampling_constraint(constraint);
            cfg.seed = seed;
            cfg.validate();
            const auto pop = generate_population(cfg);
            const auto sample = draw_sample(pop, cfg);
            const auto table = build_table(pop, sample);
            fs::create_directories(sim_out);
            std::ostringstream p;
            write_population_csv(p, pop, sample);
            spit((fs::path(sim_out) / "population.csv").string(), p.str());
            std::ostringstream t;
            write_table_csv(t, table);
            spit((fs::path(sim_out) / "table.csv").string(), t.str());
            std::cout << "cells " << table.size() << " observed " << table.num_observed() << " sample "
                      << table.sample_size() << '\n';
        } else if (*fit_cmd) {
            const auto table = load_table(table_path);
            McmcConfig mc = scale_mcmc(scale);
            mc.seed = seed;
            const auto draws = fit(ModelSpec::preset(model), table, mc);
            std::ostringstream out;
            if (draws_out.ends_with(".bin")) {
                write_draws_binary(out, draws.probs);
            } else {
                write_draws_csv(out, draws.probs);
            }
            spit(draws_out, out.str());
            if (!diag_out.empty()) spit(diag_out, draws.diagnostics.to_json());
            std::cout << "draws " << draws.num_draws() << " max_rhat " << draws.diagnostics.max_rhat
                      << (draws.flagged() ? " NOT CONVERGED" : "") << '\n';
        } else if (*score) {
            const auto table = load_table(table_path);
            CellProbDraws cand;
            cand.label = label;
            cand.probs = load_draws(draws_path);
            if (cand.probs.num_cells() != table.size()) throw CellMismatch("draw columns do not match the table");
            const Permutation perm(cand.num_draws(), derive_seed(seed, Stage::Permutation));
            const auto resample_seed = derive_seed(seed, Stage::Resample);
            const auto psis = compute_psis(cand, table, resample_seed);
            const CellSet all = cell_set(table, CellSetDescriptor::population());
            std::vector<ScoreRecord> rows;
            auto add = [&](Family f, Variant v, double value, double khat = std::nan(""), std::string ref = {}) {
                ScoreRecord r;
                r.model = label;
                r.family = f;
                r.variant = v;
                r.value = value;
                r.khat_max = khat;
                r.flagged = !std::isnan(khat) && psis.num_flagged(all) > 0;
                r.reference = std::move(ref);
                r.seed = seed;
                rows.push_back(std::move(r));
            };
            if (table.has_truth()) {
                const auto truths = table.true_probs();
                const auto est = aggregate(cand.probs, table, all, label);
                add(Family::SE, Variant::TruthDirect, se_direct(est, table.population_mean()));
                add(Family::CRPS, Variant::TruthDirect, crps_draws(est, table.population_mean(), perm));
                add(Family::SE, Variant::TruthCellwise, se_cellwise(cand.probs, table, all, truths));
                add(Family::CRPS, Variant::TruthCellwise, crps_cellwise(cand.probs, table, all, truths, perm));
            }
            if (table.all_observed()) {
                const auto proxy = sample_proxy_truths(table);
                const double khat = psis.khat_max(all);
                add(Family::SE, Variant::SampleProxy, se_cellwise(cand.probs, table, all, proxy));
                add(Family::CRPS, Variant::SampleProxy, crps_cellwise(cand.probs, table, all, proxy, perm));
                add(Family::SE, Variant::PsisLoco, psis_loco_se(cand, psis, table, all, proxy), khat);
                add(Family::CRPS, Variant::PsisLoco, psis_loco_crps(cand, psis, table, all, proxy, perm), khat);
            }
            if (!ref_path.empty()) {
                CellProbDraws ref;
                ref.label = "reference";
                ref.probs = load_draws(ref_path);
                const auto ref_psis = compute_psis(ref, table, resample_seed);
                const ReferencePair pair{{&cand, &psis, nullptr}, {&ref, &ref_psis, nullptr}, &table, &perm};
                add(Family::SE, Variant::Reference, ref_se(pair, all), std::nan(""), ref.label);
                add(Family::CRPS, Variant::Reference, ref_crps(pair, all), std::nan(""), ref.label);
                const CellSet obs = cell_set(table, CellSetDescriptor::observed());
                const CellSet unobs = cell_set(table, CellSetDescriptor::unobserved());
                if (!obs.empty()) {
                    const auto proxy = sample_proxy_truths(table, obs);
                    const double khat = psis.khat_max(obs);
                    add(Family::SE, Variant::PartialReference, partial_ref_se(pair, obs, unobs), khat, ref.label);
                    add(Family::CRPS, Variant::PartialReference, partial_ref_crps(pair, obs, unobs), khat, ref.label);
                    add(Family::SE, Variant::Combined, combined_se(pair.candidate, pair.reference, table, obs, unobs, proxy),
                        khat, ref.label);
                    add(Family::CRPS, Variant::Combined,
                        combined_crps(pair.candidate, pair.reference, table, obs, unobs, proxy, perm), khat, ref.label);
                }
            }
            std::ostringstream out;
            write_scores_csv(out, rows);
            if (score_out.empty()) {
                std::cout << out.str();
            } else {
                spit(score_out, out.str());
            }
        } else if (*run_cmd) {
            ExperimentPlan base = scale == "paper" ? ExperimentPlan::paper() : ExperimentPlan::desk();
            ExperimentPlan plan = plan_path.empty() ? base : plan_from_json(slurp(plan_path), base);
            if (run_cmd->count("--seed")) plan.base_seed = seed;
            if (workers) plan.workers = workers;
            if (reps) plan.replications = reps;
            if (!out_dir.empty()) plan.output_dir = out_dir;
            const auto store = run(plan);
            const auto rep = summarize(store);
            std::cout << "rows " << store.records.size() << " reps " << rep.reps << " flagged " << rep.flagged_rows
                      << " -> " << plan.output_dir << '\n';
        } else if (*report) {
            const auto store = load_results(results_dir);
            const auto rep = summarize(store);
            std::cout << rep.to_json();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
