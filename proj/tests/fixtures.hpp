#pragma once

#include <vector>

#include "mecgame/mecgame.hpp"

namespace fixtures {

using namespace mecgame;

inline NetworkParams table_net() { return {1e8, 1e-8, 1e10, 0.0}; }

/// Midpoint of the default parameter ranges with equal weights.
inline DeviceParams midpoint_device() {
    DeviceParams d;
    d.lambda = 24.5 / 60.0;
    d.c = 3e8;
    d.z = 5e5;
    d.f_md = 3.75e8;
    d.eps_local = 0.5;
    d.eps_tx = 0.55;
    d.h = 1e-5;
    d.sigma2_service = 0.0;
    d.d_max = 1.0;
    d.e_max = 1.0;
    d.p_max = 0.1;
    d.theta_d = 1.0 / 3.0;
    d.theta_e = 1.0 / 3.0;
    d.theta_p = 1.0 - 2.0 / 3.0;
    return d;
}

inline OspParams cloud(double f = 2e9, double p_min = 5e-11) { return {OspKind::Cloud, f, p_min, 1.0}; }
inline OspParams edge(double f = 2e9, double p_min = 5e-11) { return {OspKind::Edge, f, p_min, 1.0}; }

inline SystemScenario make(std::vector<DeviceParams> d, std::vector<OspParams> o, NetworkParams net = table_net()) {
    return SystemScenario(std::move(d), std::move(o), net);
}

inline PriceVector prices_gcycle(std::initializer_list<double> usd_per_gcycle) {
    PriceVector p;
    for (double v : usd_per_gcycle) p.p.push_back(units::usd_per_gcycle(v));
    return p;
}

/// Figure settings: lambda = 25 tasks/min, eps_tx = 0.4 W, everything else from the default table.
inline ScenarioSpec figure_spec(std::uint64_t seed, std::size_t m = 50) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.m = m;
    spec.overrides["lambda_tasks_per_min"] = ParamRange::fixed(25.0);
    spec.overrides["eps_tx_w"] = ParamRange::fixed(0.4);
    return spec;
}

inline PriceVector figure_prices() { return prices_gcycle({0.2, 0.1, 0.1, 0.1}); }

inline std::vector<DeviceParams> devs(const SystemScenario& s) { return {s.devices().begin(), s.devices().end()}; }
inline std::vector<OspParams> osps(const SystemScenario& s) { return {s.osps().begin(), s.osps().end()}; }

inline std::vector<double> flat(const StrategyProfile& a) { return {a.data().begin(), a.data().end()}; }

}  // namespace fixtures
