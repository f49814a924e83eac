#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mecgame/games.hpp"

namespace mecgame {

enum class UpdateMode { Jacobi, GaussSeidel };

inline const char* to_string(UpdateMode m) { return m == UpdateMode::Jacobi ? "jacobi" : "gauss_seidel"; }

/// Default price step [($/cycle) per (cycles/s) of marginal utility]. With loads near 1e9 cycles/s
/// the first step is a few percent of a 0.05 $/Gcycle price.
inline constexpr double kDefaultPriceStep = 2e-21;

struct IspaParams {
    std::vector<double> delta_step;  // per OSP; empty means kDefaultPriceStep for every OSP
    double eta = 1e-12;              // [$/cycle]
    int max_iters = 20;
    UpdateMode update_mode = UpdateMode::Jacobi;
    IpoaParams ipoa;
    bool warm_start = true;  // follower runs start from the latest equilibrium instead of all-local

    double step(std::size_t j) const { return delta_step.empty() ? kDefaultPriceStep : delta_step.at(j); }
};

/// Finite-difference estimate of dU_j/dp_j.
///
/// Central by default: value = (plus_eval - minus_eval) / (2 eta). When p_j - eta would fall below
/// the cost price the difference is one-sided, minus_eval is taken at p_j itself and
/// width = eta. In both cases value = (plus_eval - minus_eval) / width.
struct MarginalUtility {
    double value = 0.0;  // [cycles/s]
    double plus_eval = 0.0;
    double minus_eval = 0.0;
    double width = 0.0;
    bool one_sided = false;
    bool degraded = false;  // a follower run stopped at max_outer_iters
};

namespace detail {

struct FollowerEval {
    IpoaResult eq;
    double utility = 0.0;
};

inline FollowerEval follower(const SystemScenario& s, std::size_t j, const PriceVector& prices,
                             const IpoaParams& params, const StrategyProfile& start) {
    FollowerEval out;
    try {
        out.eq = ipoa(s, prices, params, start);
    } catch (const Error& e) {
        throw FollowerDiverged(std::string("follower game failed: ") + e.what());
    }
    out.utility = osp_utility(s, j, out.eq.profile, prices);
    return out;
}

}  // namespace detail

/// Marginal utility of OSP j at `prices`, re-solving the follower game on each side.
/// `start` seeds both follower runs (all-local when omitted). Non-converged follower runs are
/// flagged as degraded; errors inside them raise FollowerDiverged.
inline MarginalUtility marginal_utility(const SystemScenario& s, std::size_t j, const PriceVector& prices,
                                        const IspaParams& params,
                                        const std::optional<StrategyProfile>& start = std::nullopt) {
    const StrategyProfile init = start ? *start : StrategyProfile::zeros(s);
    MarginalUtility mu;
    PriceVector hi = prices;
    hi[j] += params.eta;
    PriceVector lo = prices;
    mu.one_sided = prices[j] - params.eta < s.osp(j).p_min;
    if (!mu.one_sided) lo[j] -= params.eta;
    const auto plus = detail::follower(s, j, hi, params.ipoa, init);
    const auto minus = detail::follower(s, j, lo, params.ipoa, init);
    mu.plus_eval = plus.utility;
    mu.minus_eval = minus.utility;
    mu.width = mu.one_sided ? params.eta : 2.0 * params.eta;
    mu.value = (mu.plus_eval - mu.minus_eval) / mu.width;
    mu.degraded = !plus.eq.converged || !minus.eq.converged;
    return mu;
}

/// Clipped ascent step p_j <- max(p_j + delta * dU_j/dp_j, p_min).
inline double price_update(double price, double delta, double marginal, double p_min) {
    return std::max(price + delta * marginal, p_min);
}

inline double price_update(const SystemScenario& s, std::size_t j, const PriceVector& prices, const MarginalUtility& mu,
                           const IspaParams& params) {
    return price_update(prices[j], params.step(j), mu.value, s.osp(j).p_min);
}

struct PricingRecord {
    int iter = 0;
    PriceVector prices;
    std::vector<double> utilities;  // per OSP [$/s]
    std::vector<bool> degraded;     // per OSP: a follower run feeding this record did not converge
    std::vector<MarginalUtility> marginals;  // empty for iteration 0 and for blind pricing
    StrategyProfile profile;
};

struct IspaResult {
    PriceVector prices;
    StrategyProfile profile;
    std::vector<PricingRecord> trace;
};

namespace detail {

inline PricingRecord make_record(const SystemScenario& s, int iter, const PriceVector& prices, const IpoaResult& eq) {
    PricingRecord rec;
    rec.iter = iter;
    rec.prices = prices;
    rec.utilities = osp_utilities(s, eq.profile, prices);
    rec.degraded.assign(s.num_osps(), !eq.converged);
    rec.profile = eq.profile;
    return rec;
}

inline void check_prices(const SystemScenario& s, const PriceVector& p) {
    if (p.size() != s.num_osps()) throw InvalidScenario("price vector has the wrong length");
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(p[j] >= s.osp(j).p_min)) throw InvalidScenario("price of OSP " + std::to_string(j) + " is below cost");
    }
}

}  // namespace detail

/// Iterative Stackelberg pricing. Each iteration every OSP estimates its marginal utility, takes a
/// clipped ascent step, and one follower run at the new prices yields the recorded equilibrium.
inline IspaResult ispa(const SystemScenario& s, const IspaParams& params, const PriceVector& p0) {
    detail::check_prices(s, p0);
    if (!(params.eta > 0.0) || params.max_iters < 0) throw InvalidScenario("invalid ISPA parameters");
    if (!params.delta_step.empty() && params.delta_step.size() != s.num_osps()) {
        throw InvalidScenario("delta_step needs one entry per OSP");
    }
    IspaResult res;
    PriceVector p = p0;
    IpoaResult eq;
    try {
        eq = detail::follower(s, 0, p, params.ipoa, StrategyProfile::zeros(s)).eq;
    } catch (const FollowerDiverged& e) {
        throw FollowerDiverged(e.what(), 0);
    }
    res.trace.push_back(detail::make_record(s, 0, p, eq));

    for (int k = 0; k < params.max_iters; ++k) {
        const StrategyProfile start = params.warm_start ? eq.profile : StrategyProfile::zeros(s);
        PriceVector next = p;
        std::vector<MarginalUtility> marginals;
        try {
            for (std::size_t j = 0; j < s.num_osps(); ++j) {
                const PriceVector& basis = params.update_mode == UpdateMode::Jacobi ? p : next;
                const MarginalUtility mu = marginal_utility(s, j, basis, params, start);
                next[j] = price_update(s, j, basis, mu, params);
                marginals.push_back(mu);
            }
            eq = detail::follower(s, 0, next, params.ipoa, start).eq;
        } catch (const FollowerDiverged& e) {
            throw FollowerDiverged(e.what(), k + 1);
        }
        p = next;
        PricingRecord rec = detail::make_record(s, k + 1, p, eq);
        for (std::size_t j = 0; j < s.num_osps(); ++j) rec.degraded[j] = rec.degraded[j] || marginals[j].degraded;
        rec.marginals = std::move(marginals);
        res.trace.push_back(std::move(rec));
    }
    res.prices = p;
    res.profile = eq.profile;
    return res;
}

/// Blind pricing: prices rise linearly from p0 to p_targets over max_iters iterations, ignoring
/// competitors; iteration k (1-based) uses p0 + k/max_iters * (p_targets - p0).
inline IspaResult blind_pricing(const SystemScenario& s, const IspaParams& params, const PriceVector& p0,
                                const PriceVector& p_targets) {
    detail::check_prices(s, p0);
    if (p_targets.size() != p0.size()) throw InvalidScenario("target price vector has the wrong length");
    for (std::size_t j = 0; j < p0.size(); ++j) {
        if (p_targets[j] < p0[j]) throw InvalidScenario("blind pricing targets must not be below the start prices");
    }
    if (params.max_iters < 1) throw InvalidScenario("blind pricing needs at least one iteration");
    IspaResult res;
    StrategyProfile start = StrategyProfile::zeros(s);
    PriceVector p = p0;
    for (int k = 1; k <= params.max_iters; ++k) {
        const double frac = static_cast<double>(k) / params.max_iters;
        for (std::size_t j = 0; j < p.size(); ++j) p[j] = k == params.max_iters ? p_targets[j] : p0[j] + frac * (p_targets[j] - p0[j]);
        IpoaResult eq;
        try {
            eq = detail::follower(s, 0, p, params.ipoa, start).eq;
        } catch (const FollowerDiverged& e) {
            throw FollowerDiverged(e.what(), k);
        }
        if (params.warm_start) start = eq.profile;
        res.trace.push_back(detail::make_record(s, k, p, eq));
        res.profile = eq.profile;
    }
    res.prices = p;
    return res;
}

/// Mean of a record's per-OSP utilities.
inline double mean_utility(const PricingRecord& rec) {
    double acc = 0.0;
    for (double u : rec.utilities) acc += u;
    return acc / static_cast<double>(rec.utilities.size());
}

}  // namespace mecgame
