// Follower equilibrium for the convergence-figure setting, compared with the fixed schemes.
#include <cstdio>

#include "mecgame/mecgame.hpp"

using namespace mecgame;

int main() {
    ScenarioSpec spec;
    spec.overrides["lambda_tasks_per_min"] = ParamRange::fixed(25.0);
    spec.overrides["eps_tx_w"] = ParamRange::fixed(0.4);
    const SystemScenario s = generate_scenario(spec);

    PriceVector prices;
    for (const auto& o : s.osps()) prices.p.push_back(units::usd_per_gcycle(o.is_edge() ? 0.1 : 0.2));

    const IpoaResult ne = ipoa(s, prices);
    std::printf("IPOA: %s after %d rounds\n", ne.converged ? "converged" : "stopped", ne.iterations);
    std::printf("  mean disutility %.6f\n", mean_disutility(s, ne.profile, prices));
    const auto load = osp_loads(s, ne.profile);
    for (std::size_t j = 0; j < s.num_osps(); ++j) {
        std::printf("  OSP %zu (%s): load %.3g cycles/s, utility %.4f $/s\n", j, to_string(s.osp(j).kind), load[j],
                    osp_utility(s, j, ne.profile, prices));
    }
    for (BaselineKind k : {BaselineKind::LocalOnly, BaselineKind::CloudOnly, BaselineKind::Evenly}) {
        const auto ev = evaluate_profile(s, baseline_profile(s, k), prices);
        std::printf("%-7s mean disutility %.6f %s\n", to_string(k), ev.mean_disutility, ev.flag.c_str());
    }
    const PoaReport rep = poa(s, prices);
    std::printf("social optimum %.6f, price of anarchy %.4f\n", rep.avg_so, rep.poa);
}
