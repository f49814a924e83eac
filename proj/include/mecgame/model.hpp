#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mecgame/errors.hpp"
#include "mecgame/types.hpp"

namespace mecgame {

inline constexpr double kDefaultDeltaStab = 1e-4;

/// Uplink rate r_i of device i [bits/s]. Depends only on the device population.
inline double uplink_rate(const SystemScenario& s, std::size_t i) {
    return uplink_rate(s.devices(), s.net(), i);
}

/// Cycle load routed to every OSP [cycles/s], optionally leaving out device `skip`.
inline std::vector<double> osp_loads(const SystemScenario& s, const StrategyProfile& a,
                                     std::optional<std::size_t> skip = std::nullopt) {
    std::vector<double> load(s.num_osps(), 0.0);
    for (std::size_t k = 0; k < s.num_devices(); ++k) {
        if (skip && *skip == k) continue;
        const double v = s.device(k).cycle_rate();
        for (std::size_t j = 0; j < s.num_osps(); ++j) load[j] += a(k, j) * v;
    }
    return load;
}

namespace detail {

inline double sum(std::span<const double> row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s;
}

}  // namespace detail

/// Expected delay, energy, payment and disutility of device i playing `row` while everyone else
/// contributes `others_load` cycles/s to each OSP.
///
/// Throws StabilityViolation when the local CPU (C3), the wireless interface (C4) or any edge
/// server (C5) would run at utilization >= 1.
inline CostBreakdown device_costs(const SystemScenario& s, std::size_t i, std::span<const double> row,
                                  std::span<const double> others_load, const PriceVector& prices) {
    const DeviceParams& d = s.device(i);
    const double r = s.rate(i);
    const double total = detail::sum(row);

    const double local_load = (1.0 - total) * d.cycle_rate();
    if (local_load >= d.f_md) throw StabilityViolation("C3", i, local_load / d.f_md);
    const double local_den = d.f_md - local_load;
    const double d_local = d.c / local_den;
    const double e_local = d.eps_local * d.c / local_den;

    const double rho = d.lambda * d.z * total / r;
    if (rho >= 1.0) throw StabilityViolation("C4", i, rho);
    const double s2 = s.service_second_moment(i);
    // M/G/1 (Pollaczek-Khinchine) waiting time plus mean service time.
    const double d_wireless = d.lambda * s2 * total / (2.0 * (1.0 - rho)) + d.z / r;

    double d_remote = 0.0;
    double payment = 0.0;
    for (std::size_t j = 0; j < s.num_osps(); ++j) {
        const OspParams& o = s.osp(j);
        double d_off = 0.0;
        if (o.is_edge()) {
            const double load = others_load[j] + row[j] * d.cycle_rate();
            if (load >= o.f_osp) throw StabilityViolation("C5", j, load / o.f_osp);
            d_off = d.c / (o.f_osp - load);
        } else {
            d_off = d.c / o.f_osp;
        }
        d_remote += row[j] * (s.wired_delay(i, j) + d_off);
        payment += row[j] * prices[j] * d.c * d.lambda;
    }

    CostBreakdown out;
    out.rate_r = r;
    out.delay = (1.0 - total) * d_local + total * d_wireless + d_remote;
    out.energy = (1.0 - total) * e_local + total * d.eps_tx * d_wireless;
    out.payment = payment;
    out.disutility = d.theta_d * out.delay / d.d_max + d.theta_e * out.energy / d.e_max +
                     d.theta_p * out.payment / d.p_max;
    return out;
}

inline CostBreakdown cost_breakdown(const SystemScenario& s, std::size_t i, const StrategyProfile& a,
                                    const PriceVector& prices) {
    const auto others = osp_loads(s, a, i);
    return device_costs(s, i, a.row(i), others, prices);
}

inline double disutility(const SystemScenario& s, std::size_t i, const StrategyProfile& a,
                         const PriceVector& prices) {
    return cost_breakdown(s, i, a, prices).disutility;
}

/// Per-device disutilities of the whole profile, computed with one pass over the loads.
inline std::vector<double> all_disutilities(const SystemScenario& s, const StrategyProfile& a,
                                            const PriceVector& prices) {
    const auto load = osp_loads(s, a);
    std::vector<double> out(s.num_devices());
    std::vector<double> others(load.size());
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        const double v = s.device(i).cycle_rate();
        for (std::size_t j = 0; j < load.size(); ++j) others[j] = load[j] - a(i, j) * v;
        out[i] = device_costs(s, i, a.row(i), others, prices).disutility;
    }
    return out;
}

inline double mean_disutility(const SystemScenario& s, const StrategyProfile& a, const PriceVector& prices) {
    const auto u = all_disutilities(s, a, prices);
    double acc = 0.0;
    for (double v : u) acc += v;
    return acc / static_cast<double>(u.size());
}

/// Revenue rate of OSP j [$/s].
inline double osp_utility(const SystemScenario& s, std::size_t j, const StrategyProfile& a,
                          const PriceVector& prices) {
    double load = 0.0;
    for (std::size_t k = 0; k < s.num_devices(); ++k) load += s.device(k).cycle_rate() * a(k, j);
    return prices[j] * load;
}

inline std::vector<double> osp_utilities(const SystemScenario& s, const StrategyProfile& a,
                                         const PriceVector& prices) {
    std::vector<double> out(s.num_osps());
    for (std::size_t j = 0; j < s.num_osps(); ++j) out[j] = osp_utility(s, j, a, prices);
    return out;
}

struct FeasibilityMargins {
    double delta_stab = kDefaultDeltaStab;  // C3-C5 require utilization <= 1 - delta_stab
    bool check_caps = true;                 // evaluate C6-C8
};

/// Evaluates C1-C8 for every device and never throws.
///
/// C5 is checked on edge OSPs only: cloud centers are infinite-server queues. Margins are
/// normalized (utilization excess for C3-C5, relative cap excess for C6-C8). Caps are evaluated
/// only for devices whose own C1-C4 hold and when no edge is saturated, since costs are undefined
/// otherwise.
inline FeasibilityReport check_feasible(const SystemScenario& s, const StrategyProfile& a,
                                        const PriceVector& prices, const FeasibilityMargins& margins = {}) {
    constexpr double kTol = 1e-12;
    FeasibilityReport rep;
    auto add = [&](const char* tag, std::size_t idx, double margin) {
        rep.violations.push_back({tag, idx, margin});
    };
    const double limit = 1.0 - margins.delta_stab;
    const auto load = osp_loads(s, a);

    bool edge_ok = true;
    for (std::size_t j = 0; j < s.num_osps(); ++j) {
        if (!s.osp(j).is_edge()) continue;
        const double util = load[j] / s.osp(j).f_osp;
        if (util > limit) {
            add("C5", j, util - limit);
            edge_ok = false;
        }
    }

    std::vector<double> others(s.num_osps());
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        const DeviceParams& d = s.device(i);
        bool device_ok = true;
        const double total = a.row_sum(i);
        if (total < -kTol || total > 1.0 + kTol) {
            add("C1", i, total < 0.0 ? -total : total - 1.0);
            device_ok = false;
        }
        for (std::size_t j = 0; j < s.num_osps(); ++j) {
            const double v = a(i, j);
            if (!(v >= -kTol && v <= 1.0 + kTol)) {
                add("C2", i, v < 0.0 ? -v : v - 1.0);
                device_ok = false;
            }
        }
        const double local_util = (1.0 - total) * d.cycle_rate() / d.f_md;
        if (local_util > limit) {
            add("C3", i, local_util - limit);
            device_ok = false;
        }
        const double tx_util = d.lambda * d.z * total / s.rate(i);
        if (tx_util > limit) {
            add("C4", i, tx_util - limit);
            device_ok = false;
        }
        if (!margins.check_caps || !device_ok || !edge_ok) continue;
        for (std::size_t j = 0; j < s.num_osps(); ++j) others[j] = load[j] - a(i, j) * d.cycle_rate();
        const CostBreakdown cb = device_costs(s, i, a.row(i), others, prices);
        if (cb.delay > d.d_max) add("C6", i, cb.delay / d.d_max - 1.0);
        if (cb.energy > d.e_max) add("C7", i, cb.energy / d.e_max - 1.0);
        if (cb.payment > d.p_max) add("C8", i, cb.payment / d.p_max - 1.0);
    }
    rep.feasible = rep.violations.empty();
    return rep;
}

}  // namespace mecgame
