#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "mecgame/model.hpp"
#include "mecgame/solver.hpp"

namespace mecgame {

enum class CentroidMode { EveryRound, OnInnerConvergence };

inline const char* to_string(CentroidMode m) {
    return m == CentroidMode::EveryRound ? "every_round" : "on_inner_convergence";
}

struct IpoaParams {
    double tau = 0.2;
    double sigma_conv = 1e-3;
    int max_outer_iters = 300;
    CentroidMode centroid_mode = CentroidMode::EveryRound;
    SolverParams solver;
    bool record_profiles = false;
};

struct IpoaRound {
    int round = 0;
    double frobenius_delta = 0.0;  // 0 for the initial record
    std::vector<double> per_device_disutility;
    std::optional<StrategyProfile> profile;
};

struct RunTrace {
    std::vector<IpoaRound> rounds;  // rounds[0] is the initial profile
};

struct IpoaResult {
    StrategyProfile profile;
    int iterations = 0;
    RunTrace trace;
    bool converged = false;
    int failed_solves = 0;     // subproblems that kept their previous row
    int relaxed_solves = 0;    // subproblems solved without C6-C8 because no row satisfies them
    int damped_rounds = 0;     // rounds whose merged step had to be shortened
};

namespace detail {

// Devices carrying a C6-C8 violation.
inline std::set<std::size_t> cap_violators(const FeasibilityReport& rep) {
    std::set<std::size_t> out;
    for (const auto& v : rep.violations) {
        if (v.constraint >= "C6") out.insert(v.index);
    }
    return out;
}

}  // namespace detail

/// Iterative proximal offloading: Jacobi rounds in which every device plays its proximal best
/// response to the previous round's profile.
///
/// The per-device responses each respect C1-C8 against the previous profile, but their union may
/// overload a shared edge server or push a neighbour past a cap. In that case the step toward the
/// new profile is halved until the merged profile is stable and introduces no new cap violation;
/// the fixed points are unchanged. A device for which no row meets its delay, energy and payment
/// caps minimizes its disutility under C1-C5 alone (counted in `relaxed_solves`); a subproblem that
/// still has no strictly feasible point keeps its previous row (counted in `failed_solves`).
inline IpoaResult ipoa(const SystemScenario& s, const PriceVector& prices, const IpoaParams& params,
                       const StrategyProfile& initial) {
    if (!(params.sigma_conv > 0.0) || params.max_outer_iters < 1) throw NoConvergence("invalid IPOA parameters");
    if (initial.rows() != s.num_devices() || initial.cols() != s.num_osps()) {
        throw InfeasibleInitial("initial profile has the wrong shape");
    }
    const FeasibilityMargins margins{params.solver.delta_stab, true};
    FeasibilityReport prev_rep = check_feasible(s, initial, prices, margins);
    if (!prev_rep.stable()) throw InfeasibleInitial("initial profile violates " + prev_rep.violations.front().constraint);

    IpoaResult res;
    StrategyProfile cur = initial;
    StrategyProfile beta = initial;
    auto record = [&](int round, double delta) {
        IpoaRound r;
        r.round = round;
        r.frobenius_delta = delta;
        r.per_device_disutility = all_disutilities(s, cur, prices);
        if (params.record_profiles) r.profile = cur;
        res.trace.rounds.push_back(std::move(r));
    };
    record(0, 0.0);

    const std::size_t m = s.num_devices();
    const std::size_t n = s.num_osps();
    int below = 0;
    StrategyProfile next(m, n);
    std::vector<double> others(n);
    for (int l = 1; l <= params.max_outer_iters; ++l) {
        const auto load = osp_loads(s, cur);
        std::set<std::size_t> relaxed_now;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = s.device(i).cycle_rate();
            for (std::size_t j = 0; j < n; ++j) others[j] = load[j] - cur(i, j) * v;
            try {
                next.set_row(i, solve_proximal(s, i, others, prices, beta.row(i), params.tau, params.solver).row);
            } catch (const InfeasibleSubproblem&) {
                SolverParams relaxed = params.solver;
                relaxed.enforce_caps = false;
                try {
                    next.set_row(i, solve_proximal(s, i, others, prices, beta.row(i), params.tau, relaxed).row);
                    ++res.relaxed_solves;
                    relaxed_now.insert(i);
                } catch (const Error&) {
                    next.set_row(i, cur.row(i));
                    ++res.failed_solves;
                }
            } catch (const NoConvergence&) {
                next.set_row(i, cur.row(i));
                ++res.failed_solves;
            }
        }

        const auto prev_caps = detail::cap_violators(prev_rep);
        StrategyProfile cand = next;
        FeasibilityReport rep = check_feasible(s, cand, prices, margins);
        double gamma = 1.0;
        auto acceptable = [&](const FeasibilityReport& r) {
            if (!r.stable()) return false;
            for (std::size_t k : detail::cap_violators(r)) {
                if (!prev_caps.contains(k) && !relaxed_now.contains(k)) return false;
            }
            return true;
        };
        if (!acceptable(rep)) ++res.damped_rounds;
        bool stalled = false;
        while (!acceptable(rep)) {
            gamma *= 0.5;
            if (gamma < 1e-12) {
                stalled = true;
                break;
            }
            for (std::size_t k = 0; k < cand.data().size(); ++k) {
                cand.data()[k] = cur.data()[k] + gamma * (next.data()[k] - cur.data()[k]);
            }
            rep = check_feasible(s, cand, prices, margins);
        }

        if (stalled) break;  // no admissible step; reported as not converged
        const double delta = frobenius_distance(cand, cur);
        cur = std::move(cand);
        prev_rep = std::move(rep);
        res.iterations = l;
        record(l, delta);

        if (params.centroid_mode == CentroidMode::EveryRound || delta <= 10.0 * params.sigma_conv) beta = cur;
        below = delta <= params.sigma_conv ? below + 1 : 0;
        if (below >= 2) {
            res.converged = true;
            break;
        }
    }
    res.profile = std::move(cur);
    return res;
}

/// All-local starting profile.
inline IpoaResult ipoa(const SystemScenario& s, const PriceVector& prices, const IpoaParams& params = {}) {
    return ipoa(s, prices, params, StrategyProfile::zeros(s));
}

struct NeCheck {
    bool is_ne = false;
    double worst_improvement = 0.0;  // largest unilateral disutility decrease found
    std::size_t worst_device = 0;
};

namespace detail {

// Calls fn(row) for every row on the grid {k * step} with entries summing to at most 1.
template <class Fn>
void for_each_grid_row(std::size_t n, double step, Fn&& fn) {
    const auto steps = static_cast<int>(std::floor(1.0 / step + 1e-9));
    std::vector<int> k(n, 0);
    std::vector<double> row(n, 0.0);
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) row[j] = k[j] * step;
        fn(std::as_const(row));
        std::size_t pos = 0;
        for (; pos < n; ++pos) {
            int used = 0;
            for (std::size_t j = 0; j < n; ++j) used += k[j];
            if (used < steps) {
                ++k[pos];
                break;
            }
            k[pos] = 0;
        }
        if (pos == n) return;
    }
}

// Disutility of device i at `row` against fixed others, or nullopt when the row violates C1-C8.
inline std::optional<double> deviation_value(const SystemScenario& s, std::size_t i, std::span<const double> row,
                                             std::span<const double> others, const PriceVector& prices,
                                             double delta_stab) {
    const DeviceParams& d = s.device(i);
    const double limit = 1.0 - delta_stab;
    const double total = sum(row);
    if (total > 1.0 + 1e-12) return std::nullopt;
    if ((1.0 - total) * d.cycle_rate() / d.f_md > limit) return std::nullopt;
    if (d.lambda * d.z * total / s.rate(i) > limit) return std::nullopt;
    for (std::size_t j = 0; j < s.num_osps(); ++j) {
        const OspParams& o = s.osp(j);
        if (o.is_edge() && (others[j] + row[j] * d.cycle_rate()) / o.f_osp > limit) return std::nullopt;
    }
    const CostBreakdown cb = device_costs(s, i, row, others, prices);
    if (cb.delay > d.d_max || cb.energy > d.e_max || cb.payment > d.p_max) return std::nullopt;
    return cb.disutility;
}

}  // namespace detail

/// Searches every device's unilateral deviations (a feasibility-filtered grid plus the exact best
/// response) and reports the largest disutility improvement.
inline NeCheck verify_ne(const SystemScenario& s, const PriceVector& prices, const StrategyProfile& profile,
                         double eps_ne, double grid_step = 0.05, const SolverParams& solver = {}) {
    NeCheck out;
    const auto load = osp_loads(s, profile);
    const std::vector<double> zeros(s.num_osps(), 0.0);
    std::vector<double> others(s.num_osps());
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        const double v = s.device(i).cycle_rate();
        for (std::size_t j = 0; j < s.num_osps(); ++j) others[j] = load[j] - profile(i, j) * v;
        const double current = device_costs(s, i, profile.row(i), others, prices).disutility;
        double best = current;
        detail::for_each_grid_row(s.num_osps(), grid_step, [&](const std::vector<double>& row) {
            if (auto u = detail::deviation_value(s, i, row, others, prices, solver.delta_stab)) best = std::min(best, *u);
        });
        try {
            const ProximalSolution br = solve_proximal(s, i, others, prices, zeros, 0.0, solver);
            if (auto u = detail::deviation_value(s, i, br.row, others, prices, solver.delta_stab)) best = std::min(best, *u);
        } catch (const Error&) {
        }
        const double gain = current - best;
        if (gain > out.worst_improvement) {
            out.worst_improvement = gain;
            out.worst_device = i;
        }
    }
    out.is_ne = out.worst_improvement <= eps_ne;
    return out;
}

struct LeaderConditionEntry {
    double pi = 0.0;
    double theta_cap = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct LeaderConditionReport {
    std::vector<LeaderConditionEntry> devices;
    bool all_hold = true;
};

/// Per-device sufficient condition for a pricing equilibrium to exist:
///   2 Pi [c^3/(f-lc)^3 + l c^4/(f-lc)^5] <= Theta * S2 * z / r
/// with Pi and Theta the payment-normalized delay/energy weights of the local and transmit
/// powers. S2 is the service-time second moment. A device that ignores payment (theta_p = 0) has
/// unbounded Pi and Theta and fails the condition.
inline LeaderConditionReport check_leader_condition(const SystemScenario& s) {
    LeaderConditionReport rep;
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        const DeviceParams& d = s.device(i);
        LeaderConditionEntry e;
        const double free = d.f_md - d.lambda * d.c;
        const double bracket = std::pow(d.c, 3) / std::pow(free, 3) + d.lambda * std::pow(d.c, 4) / std::pow(free, 5);
        const double tail = s.service_second_moment(i) * d.z / s.rate(i);
        if (d.theta_p > 0.0) {
            const double scale = d.p_max / (d.theta_p * d.lambda * d.c);
            e.pi = scale * (d.theta_d / d.d_max + d.theta_e * d.eps_local / d.e_max);
            e.theta_cap = scale * (d.theta_d / d.d_max + d.theta_e * d.eps_tx / d.e_max);
            e.lhs = 2.0 * e.pi * bracket;
            e.rhs = e.theta_cap * tail;
            e.holds = e.lhs <= e.rhs;
        } else {
            e.pi = e.theta_cap = e.lhs = e.rhs = std::numeric_limits<double>::infinity();
            e.holds = false;
        }
        rep.all_hold = rep.all_hold && e.holds;
        rep.devices.push_back(e);
    }
    return rep;
}

}  // namespace mecgame
