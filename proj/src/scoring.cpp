#include "mrpval/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <utility>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"
#include "mrpval/rng.hpp"

namespace mrpval {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 13> kVariantNames{{
    {Variant::TruthDirect, "truth-direct"},
    {Variant::TruthCellwise, "truth-cellwise"},
    {Variant::SampleProxy, "sample-proxy"},
    {Variant::BruteLoco, "brute-loco"},
    {Variant::PsisLoco, "psis-loco"},
    {Variant::Reference, "reference"},
    {Variant::ReferenceLoco, "reference-loco"},
    {Variant::ReferencePsis, "reference-psis"},
    {Variant::PartialReference, "partial-reference"},
    {Variant::Combined, "combined"},
    {Variant::MeanCellTruth, "mean-cell-truth"},
    {Variant::MeanCellSample, "mean-cell-sample"},
    {Variant::MeanCellPsis, "mean-cell-psis"},
}};

void check_lengths(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
    if (a.size() != b.size() || a.size() != c.size()) throw LengthMismatch("means, truths and weights differ in length");
    if (a.empty()) throw EmptySet("no cells");
}

void check_perm(std::size_t draws, const Permutation& perm) {
    if (perm.size() != draws) throw LengthMismatch("permutation size does not match draw count");
}

}  // namespace

std::string to_string(Family f) { return f == Family::SE ? "SE" : "CRPS"; }

std::string to_string(Variant v) {
    for (const auto& [var, name] : kVariantNames) {
        if (var == v) return std::string(name);
    }
    return "unknown";
}

Family parse_family(std::string_view s) {
    if (s == "SE") return Family::SE;
    if (s == "CRPS") return Family::CRPS;
    throw ParseError("unknown score family: " + std::string(s));
}

Variant parse_variant(std::string_view s) {
    for (const auto& [var, name] : kVariantNames) {
        if (name == s) return var;
    }
    throw ParseError("unknown score variant: " + std::string(s));
}

Permutation::Permutation(std::size_t size, std::uint64_t seed) : map_(size), seed_(seed) {
    std::iota(map_.begin(), map_.end(), 0);
    if (size < 2) return;
    std::vector<std::size_t> order(map_);
    auto eng = make_engine(seed);
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t i = 0; i + 1 < size; i += 2) {
        map_[order[i]] = order[i + 1];
        map_[order[i + 1]] = order[i];
    }
}

Permutation::Permutation(std::vector<std::size_t> map, std::uint64_t seed) : map_(std::move(map)), seed_(seed) {
    std::vector<bool> seen(map_.size(), false);
    for (auto v : map_) {
        if (v >= map_.size() || seen[v]) throw InvalidConfig("not a permutation");
        seen[v] = true;
    }
    for (std::size_t b = 0; b < map_.size(); ++b) involution_ = involution_ && map_[map_[b]] == b;
}

std::size_t Permutation::fixed_points() const {
    std::size_t n = 0;
    for (std::size_t b = 0; b < map_.size(); ++b) n += map_[b] == b;
    return n;
}

double se_direct(const EstimateDraws& est, double truth) {
    const double e = point_estimate(est) - truth;
    return e * e;
}

double se_cellwise(std::span<const double> cell_means, std::span<const double> cell_truths,
                   std::span<const double> weights) {
    check_lengths(cell_means, cell_truths, weights);
    double s = 0.0;
    double w = 0.0;
    for (std::size_t j = 0; j < cell_means.size(); ++j) {
        s += weights[j] * (cell_means[j] - cell_truths[j]);
        w += weights[j];
    }
    const double e = s / w;
    return e * e;
}

double mean_cell_se(std::span<const double> cell_means, std::span<const double> cell_truths,
                    std::span<const double> weights) {
    check_lengths(cell_means, cell_truths, weights);
    double s = 0.0;
    double w = 0.0;
    for (std::size_t j = 0; j < cell_means.size(); ++j) {
        const double e = cell_means[j] - cell_truths[j];
        s += weights[j] * e * e;
        w += weights[j];
    }
    return s / w;
}

namespace {

// (1/B) sum_b [½|e_b - e_perm(b)| - |e_b|] for per-draw errors e.
double paired_crps(std::span<const double> err, const Permutation& perm) {
    double s = 0.0;
    if (perm.involution()) {
        for (std::size_t b = 0; b < err.size(); ++b) {
            const std::size_t c = perm[b];
            if (c == b) {
                s -= std::abs(err[b]);
            } else if (b < c) {
                s += crps_pair_term(err[b], err[c]);
            }
        }
    } else {
        for (std::size_t b = 0; b < err.size(); ++b) s += 0.5 * std::abs(err[b] - err[perm[b]]) - std::abs(err[b]);
    }
    return s / static_cast<double>(err.size());
}

}  // namespace

double crps_draws(std::span<const double> draws, double truth, const Permutation& perm) {
    check_perm(draws.size(), perm);
    if (draws.empty()) throw EmptySet("no draws");
    std::vector<double> err(draws.size());
    for (std::size_t b = 0; b < draws.size(); ++b) err[b] = draws[b] - truth;
    return paired_crps(err, perm);
}

double crps_draws(const EstimateDraws& est, double truth, const Permutation& perm) {
    return crps_draws(std::span<const double>(est.values), truth, perm);
}

void require_truths(const CellSet& set, std::span<const double> truths) {
    std::vector<std::size_t> missing;
    for (auto s : set.members) {
        if (s >= truths.size() || std::isnan(truths[s])) missing.push_back(s);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));
}

double crps_cellwise(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                     std::span<const double> truths, const Permutation& perm) {
    if (set.empty()) throw EmptySet("empty cell set");
    check_perm(probs.num_draws(), perm);
    require_truths(set, truths);
    const auto& w = table.weights();
    const double total = set_weight(table, set);
    std::vector<double> err(probs.num_draws());
    for (std::size_t b = 0; b < probs.num_draws(); ++b) {
        const auto row = probs.row(b);
        double e = 0.0;
        for (auto j : set.members) e += w[j] * (row[j] - truths[j]);
        err[b] = e / total;
    }
    return paired_crps(err, perm);
}

double mean_cell_crps(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                      std::span<const double> truths, const Permutation& perm) {
    if (set.empty()) throw EmptySet("empty cell set");
    check_perm(probs.num_draws(), perm);
    require_truths(set, truths);
    const auto& w = table.weights();
    double s = 0.0;
    for (auto j : set.members) {
        const auto col = probs.column(j);
        s += w[j] * crps_draws(col, truths[j], perm);
    }
    return s / set_weight(table, set);
}

namespace {

struct Gathered {
    std::vector<double> means;
    std::vector<double> truths;
    std::vector<double> weights;
};

Gathered gather(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                std::span<const double> truths) {
    if (set.empty()) throw EmptySet("empty cell set");
    require_truths(set, truths);
    const auto means = probs.column_means();
    Gathered g;
    for (auto j : set.members) {
        g.means.push_back(means[j]);
        g.truths.push_back(truths[j]);
        g.weights.push_back(table.weights()[j]);
    }
    return g;
}

}  // namespace

double se_cellwise(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                   std::span<const double> truths) {
    const auto g = gather(probs, table, set, truths);
    return se_cellwise(g.means, g.truths, g.weights);
}

double mean_cell_se(const DrawMatrix& probs, const PostStratTable& table, const CellSet& set,
                    std::span<const double> truths) {
    const auto g = gather(probs, table, set, truths);
    return mean_cell_se(g.means, g.truths, g.weights);
}

std::vector<double> sample_proxy_truths(const PostStratTable& table, const CellSet& set) {
    std::vector<double> out(table.size(), std::nan(""));
    std::vector<std::size_t> missing;
    for (auto j : set.members) {
        const auto& c = table.cell(j);
        if (c.sample_count == 0) {
            missing.push_back(j);
            continue;
        }
        out[j] = static_cast<double>(c.sample_successes) / static_cast<double>(c.sample_count);
    }
    if (!missing.empty()) throw UnobservedCell(std::move(missing));
    return out;
}

std::vector<double> sample_proxy_truths(const PostStratTable& table) {
    return sample_proxy_truths(table, cell_set(table, CellSetDescriptor::population()));
}

void write_scores_header(std::ostream& out) {
    out << "rep,model,family,variant,target_kind,target_variable,target_level,value,khat_max,flagged,"
           "reference,seed\n";
}

void write_score_row(std::ostream& out, const ScoreRecord& r) {
    auto opt = [](int v) { return v < 0 ? std::string("NA") : std::to_string(v); };
    out << r.rep << ',' << r.model << ',' << to_string(r.family) << ',' << to_string(r.variant) << ','
        << r.target_kind << ',' << opt(r.target_variable) << ',' << opt(r.target_level) << ','
        << csv::format(r.value) << ',' << csv::format(r.khat_max) << ',' << (r.flagged ? 1 : 0) << ','
        << (r.reference.empty() ? "NA" : r.reference) << ',' << r.seed << '\n';
}

void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& records) {
    write_scores_header(out);
    for (const auto& r : records) write_score_row(out, r);
}

std::vector<ScoreRecord> read_scores_csv(std::istream& in) {
    const auto t = csv::read(in);
    const auto c_rep = t.column("rep");
    const auto c_model = t.column("model");
    const auto c_family = t.column("family");
    const auto c_variant = t.column("variant");
    const auto c_kind = t.column("target_kind");
    const auto c_var = t.column("target_variable");
    const auto c_level = t.column("target_level");
    const auto c_value = t.column("value");
    const auto c_khat = t.column("khat_max");
    const auto c_flag = t.column("flagged");
    const bool has_ref = t.has_column("reference");
    const bool has_seed = t.has_column("seed");
    auto opt = [](const std::string& s) { return s == "NA" ? -1 : static_cast<int>(csv::parse_int(s)); };
    std::vector<ScoreRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        ScoreRecord r;
        r.rep = static_cast<std::size_t>(csv::parse_int(row[c_rep]));
        r.model = row[c_model];
        r.family = parse_family(row[c_family]);
        r.variant = parse_variant(row[c_variant]);
        r.target_kind = row[c_kind];
        r.target_variable = opt(row[c_var]);
        r.target_level = opt(row[c_level]);
        r.value = csv::parse_double(row[c_value]);
        r.khat_max = csv::parse_double(row[c_khat]);
        r.flagged = row[c_flag] == "1" || row[c_flag] == "true";
        if (has_ref && row[t.column("reference")] != "NA") r.reference = row[t.column("reference")];
        if (has_seed) r.seed = std::stoull(row[t.column("seed")]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace mrpval
