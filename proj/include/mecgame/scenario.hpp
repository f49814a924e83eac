#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "mecgame/errors.hpp"
#include "mecgame/rng.hpp"
#include "mecgame/types.hpp"
#include "mecgame/units.hpp"

namespace mecgame {

/// A parameter value in native units: fixed when lo == hi, uniform on [lo, hi] otherwise.
struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;

    static ParamRange fixed(double v) { return {v, v}; }
    bool is_fixed() const noexcept { return lo == hi; }
    bool operator==(const ParamRange&) const = default;
};

/// Recipe for a randomly drawn scenario. Overrides are keyed by the unit-bearing parameter names
/// listed in `table2_defaults()`.
struct ScenarioSpec {
    std::size_t m = 50;
    std::size_t n_cloud = 1;
    std::size_t n_edge = 3;
    std::uint64_t seed = 1;
    std::map<std::string, ParamRange> overrides;
};

enum class ParamScope { Device, Osp, Network };

struct ParamInfo {
    std::string_view name;
    ParamScope scope;
    ParamRange range;  // default, native units
    std::uint64_t slot;  // substream slot
};

/// Default simulation parameters in their native units.
inline const std::array<ParamInfo, 18>& table2_defaults() {
    static const std::array<ParamInfo, 18> table{{
        {"lambda_tasks_per_min", ParamScope::Device, {20.0, 29.0}, 1},
        {"c_mcycles", ParamScope::Device, {300.0, 300.0}, 2},
        {"z_kb", ParamScope::Device, {500.0, 500.0}, 3},
        {"f_md_mhz", ParamScope::Device, {300.0, 450.0}, 4},
        {"eps_local_w", ParamScope::Device, {0.5, 0.5}, 5},
        {"eps_tx_w", ParamScope::Device, {0.1, 1.0}, 6},
        {"h_db", ParamScope::Device, {-50.0, -50.0}, 7},
        {"sigma2_s2", ParamScope::Device, {0.0, 0.0}, 8},
        {"d_max_s", ParamScope::Device, {1.0, 1.0}, 9},
        {"e_max_j", ParamScope::Device, {1.0, 1.0}, 10},
        {"p_max_usd_per_s", ParamScope::Device, {0.1, 0.1}, 11},
        {"f_osp_ghz", ParamScope::Osp, {1.44, 2.9}, 1},
        {"p_min_usd_per_gcycle", ParamScope::Osp, {0.05, 0.05}, 2},
        {"amplifiers", ParamScope::Osp, {1.0, 1.0}, 3},
        {"bandwidth_mhz", ParamScope::Network, {100.0, 100.0}, 0},
        {"w0_w", ParamScope::Network, {1e-8, 1e-8}, 0},
        {"fiber_rate_gbps", ParamScope::Network, {10.0, 10.0}, 0},
        {"prop_delay_s", ParamScope::Network, {0.0, 0.0}, 0},
    }};
    return table;
}

inline constexpr std::uint64_t kThetaSlot = 100;

/// Effective native-unit range for `name` after overrides.
inline ParamRange effective_range(const ScenarioSpec& spec, std::string_view name) {
    for (const auto& p : table2_defaults()) {
        if (p.name != name) continue;
        auto it = spec.overrides.find(std::string(name));
        return it == spec.overrides.end() ? p.range : it->second;
    }
    throw InvalidOverride("unknown parameter '" + std::string(name) + "'");
}

inline void validate(const ScenarioSpec& spec) {
    if (spec.m < 1) throw InvalidOverride("m must be >= 1");
    if (spec.n_cloud + spec.n_edge < 1) throw InvalidOverride("need at least one OSP");
    for (const auto& [name, range] : spec.overrides) {
        bool known = false;
        for (const auto& p : table2_defaults()) known = known || p.name == name;
        if (!known) throw InvalidOverride("unknown parameter '" + name + "'");
        if (!(range.lo <= range.hi)) throw InvalidOverride("range for '" + name + "' has lo > hi");
        if (name != "sigma2_s2" && name != "prop_delay_s" && name != "h_db" &&
            name != "p_min_usd_per_gcycle" && name != "amplifiers" && !(range.lo > 0.0)) {
            throw InvalidOverride("'" + name + "' must be positive");
        }
    }
}

/// Draws a scenario from the default parameter table plus overrides, converting to SI.
///
/// Each (device, parameter) and (OSP, parameter) pair has its own substream, so scenarios of
/// different sizes share their common prefix exactly. Weights are three uniforms on [0,1]
/// normalized by their sum.
inline SystemScenario generate_scenario(const ScenarioSpec& spec) {
    validate(spec);
    auto draw_device = [&](std::string_view name, std::size_t i) {
        for (const auto& p : table2_defaults()) {
            if (p.name != name) continue;
            rng::Substream st(spec.seed, rng::Stream::Device, i, p.slot);
            const ParamRange r = effective_range(spec, name);
            return st.uniform(r.lo, r.hi);
        }
        throw InvalidOverride("unknown parameter");
    };
    auto draw_osp = [&](std::string_view name, std::size_t j) {
        for (const auto& p : table2_defaults()) {
            if (p.name != name) continue;
            rng::Substream st(spec.seed, rng::Stream::Osp, j, p.slot);
            const ParamRange r = effective_range(spec, name);
            return st.uniform(r.lo, r.hi);
        }
        throw InvalidOverride("unknown parameter");
    };
    auto fixed_network = [&](std::string_view name) {
        const ParamRange r = effective_range(spec, name);
        if (!r.is_fixed()) throw InvalidOverride("network parameter '" + std::string(name) + "' must be fixed");
        return r.lo;
    };

    std::vector<DeviceParams> devices(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        DeviceParams& d = devices[i];
        d.lambda = units::tasks_per_min(draw_device("lambda_tasks_per_min", i));
        d.c = units::mcycles(draw_device("c_mcycles", i));
        d.z = units::kilobits(draw_device("z_kb", i));
        d.f_md = units::mhz(draw_device("f_md_mhz", i));
        d.eps_local = draw_device("eps_local_w", i);
        d.eps_tx = draw_device("eps_tx_w", i);
        d.h = units::db_to_linear(draw_device("h_db", i));
        d.sigma2_service = draw_device("sigma2_s2", i);
        d.d_max = draw_device("d_max_s", i);
        d.e_max = draw_device("e_max_j", i);
        d.p_max = draw_device("p_max_usd_per_s", i);
        rng::Substream st(spec.seed, rng::Stream::Device, i, kThetaSlot);
        double w[3] = {st.uniform(), st.uniform(), st.uniform()};
        double total = w[0] + w[1] + w[2];
        if (!(total > 0.0)) {
            w[0] = w[1] = w[2] = 1.0;
            total = 3.0;
        }
        d.theta_d = w[0] / total;
        d.theta_e = w[1] / total;
        d.theta_p = 1.0 - d.theta_d - d.theta_e;
    }

    std::vector<OspParams> osps(spec.n_cloud + spec.n_edge);
    for (std::size_t j = 0; j < osps.size(); ++j) {
        OspParams& o = osps[j];
        o.kind = j < spec.n_cloud ? OspKind::Cloud : OspKind::Edge;
        o.f_osp = units::ghz(draw_osp("f_osp_ghz", j));
        o.p_min = units::usd_per_gcycle(draw_osp("p_min_usd_per_gcycle", j));
        o.a = draw_osp("amplifiers", j);
    }

    NetworkParams net;
    net.bandwidth_b = units::mhz(fixed_network("bandwidth_mhz"));
    net.w0 = fixed_network("w0_w");
    net.fiber_rate_r = units::gbps(fixed_network("fiber_rate_gbps"));
    net.prop_delay_t = fixed_network("prop_delay_s");
    return SystemScenario(std::move(devices), std::move(osps), net);
}

}  // namespace mecgame
