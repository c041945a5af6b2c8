#include "sampler.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <map>
#include <random>

#include "mrpval/errors.hpp"
#include "mrpval/math.hpp"
#include "mrpval/rng.hpp"

namespace mrpval::detail {

namespace {

double log_t(double x, const TPrior& p) {
    const double u = (x - p.location) / p.scale;
    return -0.5 * (p.df + 1.0) * std::log1p(u * u / p.df);
}

// Step layout: intercept, log_sd (likelihood move) x K, log_sd (rescaling move) x K,
// z x K*L, translation x K.
struct Layout {
    int k;
    int l;
    std::size_t intercept() const { return 0; }
    std::size_t sd(int c) const { return 1 + static_cast<std::size_t>(c); }
    std::size_t rescale(int c) const { return 1 + static_cast<std::size_t>(k + c); }
    std::size_t z(int c, int lev) const { return 1 + static_cast<std::size_t>(2 * k + c * l + lev); }
    std::size_t shift(int c) const { return 1 + static_cast<std::size_t>(2 * k + k * l + c); }
};

class Chain {
public:
    Chain(const GroupedData& data, const TPrior& ip, const TPrior& sp, std::uint64_t seed)
        : d_(data), ip_(ip), sp_(sp), lay_{data.num_effects, data.levels}, rng_(make_engine(seed)) {}

    void init(const ChainState* start) {
        const auto k = static_cast<std::size_t>(d_.num_effects);
        const auto kl = k * static_cast<std::size_t>(d_.levels);
        if (start) {
            if (start->log_sd.size() != k || start->z.size() != kl ||
                start->step.size() != step_count(d_.num_effects, d_.levels)) {
                throw InvalidConfig("warm start does not match the model");
            }
            s_ = *start;
        } else {
            std::uniform_real_distribution<double> u(-2.0, 2.0);
            s_.intercept = u(rng_);
            s_.log_sd.resize(k);
            for (auto& v : s_.log_sd) v = u(rng_) * 0.5 - 1.0;
            s_.z.resize(kl);
            for (auto& v : s_.z) v = u(rng_);
            s_.step.assign(step_count(d_.num_effects, d_.levels), 0.5);
            s_.step[lay_.intercept()] = 0.1;
        }
        sd_.resize(k);
        for (std::size_t c = 0; c < k; ++c) sd_[c] = std::exp(s_.log_sd[c]);
        eta_.resize(d_.size());
        ll_.resize(d_.size());
        refresh();
    }

    // One sweep over all blocks. Returns nothing; tallies acceptances.
    void sweep(bool adapt, double gamma) {
        adapt_ = adapt;
        gamma_ = gamma;
        update_intercept();
        for (int c = 0; c < d_.num_effects; ++c) {
            update_sd(c);
            update_rescale(c);
            for (int l = 0; l < d_.levels; ++l) update_z(c, l);
            update_shift(c);
        }
    }

    void refresh() {
        total_ = 0.0;
        const auto k = static_cast<std::size_t>(d_.num_effects);
        for (std::size_t g = 0; g < d_.size(); ++g) {
            double e = s_.intercept;
            for (std::size_t c = 0; c < k; ++c) {
                e += sd_[c] * s_.z[c * static_cast<std::size_t>(d_.levels) +
                                   static_cast<std::size_t>(d_.group_levels[g * k + c])];
            }
            eta_[g] = e;
            ll_[g] = group_ll(g, e);
            total_ += ll_[g];
        }
    }

    void record(std::vector<double>& row) const {
        row.clear();
        row.push_back(s_.intercept);
        for (double v : sd_) row.push_back(v);
        for (double v : s_.z) row.push_back(v);
    }

    const ChainState& state() const { return s_; }
    void set_target(double t) { target_ = t; }
    void reset_tallies() { acc_ = {}; tries_ = {}; }
    double rate(int block) const {
        return tries_[block] > 0 ? static_cast<double>(acc_[block]) / tries_[block] : 0.0;
    }

private:
    double group_ll(std::size_t g, double e) const { return d_.y[g] * e - d_.n[g] * softplus(e); }

    double normal() { return norm_(rng_); }
    bool accept(double log_ratio) {
        if (log_ratio >= 0.0) return true;
        return std::log(unif_(rng_)) < log_ratio;
    }
    void tune(std::size_t slot, bool accepted, int block) {
        ++tries_[block];
        if (accepted) ++acc_[block];
        if (adapt_) {
            double& s = s_.step[slot];
            s = std::clamp(s * std::exp(gamma_ * ((accepted ? 1.0 : 0.0) - target_)), 1e-4, 20.0);
        }
    }

    // Shift of eta on a subset of groups (all groups when subset == nullptr).
    template <typename Delta>
    double try_change(const std::vector<int>* subset, Delta delta) {
        double diff = 0.0;
        auto visit = [&](std::size_t g) {
            const double e = eta_[g] + delta(g);
            const double nl = group_ll(g, e);
            scratch_eta_[g] = e;
            scratch_ll_[g] = nl;
            diff += nl - ll_[g];
        };
        ensure_scratch();
        if (subset) {
            for (int g : *subset) visit(static_cast<std::size_t>(g));
        } else {
            for (std::size_t g = 0; g < d_.size(); ++g) visit(g);
        }
        return diff;
    }
    void commit(const std::vector<int>* subset, double diff) {
        auto apply = [&](std::size_t g) {
            eta_[g] = scratch_eta_[g];
            ll_[g] = scratch_ll_[g];
        };
        if (subset) {
            for (int g : *subset) apply(static_cast<std::size_t>(g));
        } else {
            for (std::size_t g = 0; g < d_.size(); ++g) apply(g);
        }
        total_ += diff;
    }
    void ensure_scratch() {
        if (scratch_eta_.size() != d_.size()) {
            scratch_eta_.resize(d_.size());
            scratch_ll_.resize(d_.size());
        }
    }

    void update_intercept() {
        const std::size_t slot = lay_.intercept();
        const double delta = s_.step[slot] * normal();
        const double prop = s_.intercept + delta;
        const double diff = try_change(nullptr, [&](std::size_t) { return delta; });
        const bool ok = accept(diff + log_t(prop, ip_) - log_t(s_.intercept, ip_));
        if (ok) {
            s_.intercept = prop;
            commit(nullptr, diff);
        }
        tune(slot, ok, 0);
    }

    double log_sd_prior(double tau) const { return log_t(std::exp(tau), sp_) + tau; }

    void update_sd(int c) {
        const std::size_t slot = lay_.sd(c);
        const auto cu = static_cast<std::size_t>(c);
        const double tau = s_.log_sd[cu];
        const double prop = tau + s_.step[slot] * normal();
        const double dsd = std::exp(prop) - sd_[cu];
        const auto k = static_cast<std::size_t>(d_.num_effects);
        const auto lv = static_cast<std::size_t>(d_.levels);
        const double diff = try_change(nullptr, [&](std::size_t g) {
            return dsd * s_.z[cu * lv + static_cast<std::size_t>(d_.group_levels[g * k + cu])];
        });
        const bool ok = accept(diff + log_sd_prior(prop) - log_sd_prior(tau));
        if (ok) {
            s_.log_sd[cu] = prop;
            sd_[cu] = std::exp(prop);
            commit(nullptr, diff);
        }
        tune(slot, ok, 1);
    }

    // Move log_sd with alpha = sd * z held fixed; the likelihood does not change.
    void update_rescale(int c) {
        const std::size_t slot = lay_.rescale(c);
        const auto cu = static_cast<std::size_t>(c);
        const auto lv = static_cast<std::size_t>(d_.levels);
        const double tau = s_.log_sd[cu];
        const double prop = tau + s_.step[slot] * normal();
        const double ratio = std::exp(tau - prop);
        double lr = log_sd_prior(prop) - log_sd_prior(tau) + static_cast<double>(lv) * (tau - prop);
        for (std::size_t l = 0; l < lv; ++l) {
            const double z = s_.z[cu * lv + l];
            lr += -0.5 * (z * ratio) * (z * ratio) + 0.5 * z * z;
        }
        const bool ok = accept(lr);
        if (ok) {
            s_.log_sd[cu] = prop;
            sd_[cu] = std::exp(prop);
            for (std::size_t l = 0; l < lv; ++l) s_.z[cu * lv + l] *= ratio;
        }
        tune(slot, ok, 1);
    }

    void update_z(int c, int l) {
        const std::size_t slot = lay_.z(c, l);
        const auto cu = static_cast<std::size_t>(c);
        const auto idx = cu * static_cast<std::size_t>(d_.levels) + static_cast<std::size_t>(l);
        const double z = s_.z[idx];
        const double prop = z + s_.step[slot] * normal();
        const auto& subset = d_.groups_at[idx];
        const double shift = sd_[cu] * (prop - z);
        const double diff = try_change(&subset, [&](std::size_t) { return shift; });
        const bool ok = accept(diff - 0.5 * prop * prop + 0.5 * z * z);
        if (ok) {
            s_.z[idx] = prop;
            commit(&subset, diff);
        }
        tune(slot, ok, 2);
    }

    // intercept += delta, alpha[c, .] -= delta; the linear predictor does not change.
    void update_shift(int c) {
        const std::size_t slot = lay_.shift(c);
        const auto cu = static_cast<std::size_t>(c);
        const auto lv = static_cast<std::size_t>(d_.levels);
        const double delta = s_.step[slot] * normal();
        const double dz = delta / sd_[cu];
        double lr = log_t(s_.intercept + delta, ip_) - log_t(s_.intercept, ip_);
        for (std::size_t l = 0; l < lv; ++l) {
            const double z = s_.z[cu * lv + l];
            lr += -0.5 * (z - dz) * (z - dz) + 0.5 * z * z;
        }
        const bool ok = accept(lr);
        if (ok) {
            s_.intercept += delta;
            for (std::size_t l = 0; l < lv; ++l) s_.z[cu * lv + l] -= dz;
        }
        tune(slot, ok, 0);
    }

    const GroupedData& d_;
    TPrior ip_;
    TPrior sp_;
    Layout lay_;
    Engine rng_;
    std::normal_distribution<double> norm_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    ChainState s_;
    std::vector<double> sd_;
    std::vector<double> eta_;
    std::vector<double> ll_;
    std::vector<double> scratch_eta_;
    std::vector<double> scratch_ll_;
    double total_ = 0.0;
    bool adapt_ = false;
    double gamma_ = 0.0;
    double target_ = 0.44;
    std::array<long, 3> acc_{};
    std::array<long, 3> tries_{};

};

}  // namespace

std::size_t step_count(int num_effects, int levels) {
    return 1 + static_cast<std::size_t>(3 * num_effects + num_effects * levels);
}

GroupedData group_cells(const ModelSpec& spec, const PostStratTable& table,
                        std::optional<std::size_t> held_out) {
    GroupedData d;
    d.num_effects = static_cast<int>(spec.covariates.size());
    d.levels = table.levels();
    std::map<std::vector<int>, std::pair<double, double>> acc;
    for (const auto& cell : table.cells()) {
        if (held_out && cell.id == *held_out) continue;
        if (cell.sample_count == 0) continue;
        std::vector<int> key;
        key.reserve(spec.covariates.size());
        for (int c : spec.covariates) key.push_back(cell.levels[static_cast<std::size_t>(c)]);
        auto& a = acc[key];
        a.first += static_cast<double>(cell.sample_count);
        a.second += static_cast<double>(cell.sample_successes);
    }
    d.groups_at.resize(static_cast<std::size_t>(d.num_effects * d.levels));
    int g = 0;
    for (const auto& [key, ny] : acc) {
        for (std::size_t c = 0; c < key.size(); ++c) {
            d.group_levels.push_back(key[c]);
            d.groups_at[c * static_cast<std::size_t>(d.levels) + static_cast<std::size_t>(key[c])].push_back(g);
        }
        d.n.push_back(ny.first);
        d.y.push_back(ny.second);
        ++g;
    }
    return d;
}

ChainOutput run_chain(const GroupedData& data, const TPrior& intercept_prior, const TPrior& sd_prior,
                      const ChainSettings& settings, const ChainState* start, std::uint64_t seed) {
    Chain chain(data, intercept_prior, sd_prior, seed);
    chain.set_target(settings.target_accept);
    chain.init(start);
    ChainOutput out;
    for (int t = 0; t < settings.warmup; ++t) {
        const double gamma = std::min(1.0, 2.0 * std::pow(settings.adapt_offset + t, -0.6));
        chain.sweep(true, gamma);
        if (t % 25 == 24) chain.refresh();
    }
    chain.reset_tallies();
    chain.refresh();
    std::vector<double> row;
    for (int t = 0; t < settings.iterations; ++t) {
        chain.sweep(false, 0.0);
        if (t % 25 == 24) chain.refresh();
        if ((t + 1) % settings.thin == 0) {
            chain.record(row);
            out.draws.push_back(row);
        }
    }
    out.final_state = chain.state();
    out.accept_intercept = chain.rate(0);
    out.accept_sd = chain.rate(1);
    out.accept_effects = chain.rate(2);
    return out;
}

}  // namespace mrpval::detail
