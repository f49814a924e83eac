#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mecgame/baselines.hpp"
#include "mecgame/games.hpp"
#include "mecgame/pricing.hpp"
#include "mecgame/scenario.hpp"

namespace mecgame::io {

using Json = nlohmann::json;

/// Shortest decimal text that parses back to the same double; "inf", "-inf", "nan" otherwise.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// JSON has no infinity; +/-inf and nan become strings so traces stay parseable.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

inline double read_number(const Json& j, std::string_view what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw InvalidScenario("field '" + std::string(what) + "' must be a number");
}

/// Rejects any key of `obj` outside `allowed`.
inline void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view context) {
    if (!obj.is_object()) throw InvalidScenario(std::string(context) + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw InvalidScenario("unknown field '" + key + "' in " + std::string(context));
    }
}

inline Json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidScenario("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidScenario("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

// ScenarioSpec. Overrides are a number (fixed) or a two-element [lo, hi] array, in native units.

inline Json to_json(const ScenarioSpec& spec) {
    Json ov = Json::object();
    for (const auto& [name, r] : spec.overrides) ov[name] = r.is_fixed() ? Json(r.lo) : Json::array({r.lo, r.hi});
    return {{"m", spec.m}, {"n_cloud", spec.n_cloud}, {"n_edge", spec.n_edge}, {"seed", spec.seed}, {"overrides", ov}};
}

/// Fills `spec` from `j`; absent fields keep their current values.
inline void merge_spec(const Json& j, ScenarioSpec& spec) {
    check_keys(j, {"m", "n_cloud", "n_edge", "seed", "overrides"}, "scenario spec");
    if (j.contains("m")) spec.m = j.at("m").get<std::size_t>();
    if (j.contains("n_cloud")) spec.n_cloud = j.at("n_cloud").get<std::size_t>();
    if (j.contains("n_edge")) spec.n_edge = j.at("n_edge").get<std::size_t>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("overrides")) {
        const Json& ov = j.at("overrides");
        if (!ov.is_object()) throw InvalidOverride("overrides must be an object");
        for (const auto& [name, v] : ov.items()) {
            if (v.is_number()) {
                spec.overrides[name] = ParamRange::fixed(v.get<double>());
            } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
                spec.overrides[name] = {v[0].get<double>(), v[1].get<double>()};
            } else {
                throw InvalidOverride("override '" + name + "' must be a number or [lo, hi]");
            }
        }
    }
    validate(spec);
}

inline ScenarioSpec spec_from_json(const Json& j) {
    ScenarioSpec spec;
    merge_spec(j, spec);
    return spec;
}

/// Every Table-style parameter with its effective native-unit range, defaults included.
inline Json effective_parameters(const ScenarioSpec& spec) {
    Json out = Json::object();
    for (const auto& p : table2_defaults()) {
        const ParamRange r = effective_range(spec, p.name);
        out[std::string(p.name)] = r.is_fixed() ? Json(r.lo) : Json::array({r.lo, r.hi});
    }
    return out;
}

// Materialized scenario. Fields are SI with the unit in the name, so a write/read cycle is exact.

inline Json to_json(const SystemScenario& s) {
    Json devices = Json::array();
    for (const auto& d : s.devices()) {
        devices.push_back({{"lambda_tasks_per_s", d.lambda},
                           {"c_cycles", d.c},
                           {"z_bits", d.z},
                           {"f_md_hz", d.f_md},
                           {"eps_local_w", d.eps_local},
                           {"eps_tx_w", d.eps_tx},
                           {"h_linear", d.h},
                           {"sigma2_s2", d.sigma2_service},
                           {"d_max_s", d.d_max},
                           {"e_max_j", d.e_max},
                           {"p_max_usd_per_s", d.p_max},
                           {"theta_d", d.theta_d},
                           {"theta_e", d.theta_e},
                           {"theta_p", d.theta_p}});
    }
    Json osps = Json::array();
    for (const auto& o : s.osps()) {
        osps.push_back({{"kind", to_string(o.kind)},
                        {"f_osp_hz", o.f_osp},
                        {"p_min_usd_per_cycle", o.p_min},
                        {"amplifiers", o.a}});
    }
    const NetworkParams& n = s.net();
    return {{"devices", devices},
            {"osps", osps},
            {"network",
             {{"bandwidth_hz", n.bandwidth_b},
              {"w0_w", n.w0},
              {"fiber_rate_bps", n.fiber_rate_r},
              {"prop_delay_s", n.prop_delay_t}}}};
}

inline SystemScenario scenario_from_json(const Json& j) {
    check_keys(j, {"devices", "osps", "network"}, "scenario");
    auto get = [](const Json& obj, const char* key) {
        if (!obj.contains(key)) throw InvalidScenario(std::string("missing field '") + key + "'");
        return obj.at(key).get<double>();
    };
    std::vector<DeviceParams> devices;
    for (const Json& jd : j.at("devices")) {
        check_keys(jd,
                   {"lambda_tasks_per_s", "c_cycles", "z_bits", "f_md_hz", "eps_local_w", "eps_tx_w", "h_linear",
                    "sigma2_s2", "d_max_s", "e_max_j", "p_max_usd_per_s", "theta_d", "theta_e", "theta_p"},
                   "device");
        DeviceParams d;
        d.lambda = get(jd, "lambda_tasks_per_s");
        d.c = get(jd, "c_cycles");
        d.z = get(jd, "z_bits");
        d.f_md = get(jd, "f_md_hz");
        d.eps_local = get(jd, "eps_local_w");
        d.eps_tx = get(jd, "eps_tx_w");
        d.h = get(jd, "h_linear");
        d.sigma2_service = get(jd, "sigma2_s2");
        d.d_max = get(jd, "d_max_s");
        d.e_max = get(jd, "e_max_j");
        d.p_max = get(jd, "p_max_usd_per_s");
        d.theta_d = get(jd, "theta_d");
        d.theta_e = get(jd, "theta_e");
        d.theta_p = get(jd, "theta_p");
        devices.push_back(d);
    }
    std::vector<OspParams> osps;
    for (const Json& jo : j.at("osps")) {
        check_keys(jo, {"kind", "f_osp_hz", "p_min_usd_per_cycle", "amplifiers"}, "osp");
        OspParams o;
        const std::string kind = jo.at("kind").get<std::string>();
        if (kind != "cloud" && kind != "edge") throw InvalidScenario("osp kind must be 'cloud' or 'edge'");
        o.kind = kind == "cloud" ? OspKind::Cloud : OspKind::Edge;
        o.f_osp = get(jo, "f_osp_hz");
        o.p_min = get(jo, "p_min_usd_per_cycle");
        o.a = get(jo, "amplifiers");
        osps.push_back(o);
    }
    const Json& jn = j.at("network");
    check_keys(jn, {"bandwidth_hz", "w0_w", "fiber_rate_bps", "prop_delay_s"}, "network");
    NetworkParams net;
    net.bandwidth_b = get(jn, "bandwidth_hz");
    net.w0 = get(jn, "w0_w");
    net.fiber_rate_r = get(jn, "fiber_rate_bps");
    net.prop_delay_t = get(jn, "prop_delay_s");
    return SystemScenario(std::move(devices), std::move(osps), net);
}

// Algorithm parameters.

inline Json to_json(const IpoaParams& p) {
    return {{"tau", p.tau},
            {"sigma_conv", p.sigma_conv},
            {"max_outer_iters", p.max_outer_iters},
            {"centroid_mode", to_string(p.centroid_mode)},
            {"delta_stab", p.solver.delta_stab},
            {"solver_tol_kkt", p.solver.tol_kkt},
            {"record_profiles", p.record_profiles}};
}

inline void merge_ipoa(const Json& j, IpoaParams& p) {
    check_keys(j, {"tau", "sigma_conv", "max_outer_iters", "centroid_mode", "delta_stab", "solver_tol_kkt", "record_profiles"},
               "ipoa params");
    if (j.contains("tau")) p.tau = j.at("tau").get<double>();
    if (j.contains("sigma_conv")) p.sigma_conv = j.at("sigma_conv").get<double>();
    if (j.contains("max_outer_iters")) p.max_outer_iters = j.at("max_outer_iters").get<int>();
    if (j.contains("centroid_mode")) {
        const auto m = j.at("centroid_mode").get<std::string>();
        if (m == "every_round") p.centroid_mode = CentroidMode::EveryRound;
        else if (m == "on_inner_convergence") p.centroid_mode = CentroidMode::OnInnerConvergence;
        else throw InvalidScenario("unknown centroid_mode '" + m + "'");
    }
    if (j.contains("delta_stab")) p.solver.delta_stab = j.at("delta_stab").get<double>();
    if (j.contains("solver_tol_kkt")) p.solver.tol_kkt = j.at("solver_tol_kkt").get<double>();
    if (j.contains("record_profiles")) p.record_profiles = j.at("record_profiles").get<bool>();
}

inline Json to_json(const IspaParams& p, std::size_t n_osps) {
    Json steps = Json::array();
    for (std::size_t j = 0; j < n_osps; ++j) steps.push_back(p.step(j));
    return {{"delta_step", steps},
            {"eta_usd_per_cycle", p.eta},
            {"max_iters", p.max_iters},
            {"update_mode", to_string(p.update_mode)},
            {"warm_start", p.warm_start}};
}

inline void merge_ispa(const Json& j, IspaParams& p) {
    check_keys(j, {"delta_step", "eta_usd_per_cycle", "max_iters", "update_mode", "warm_start"}, "ispa params");
    if (j.contains("delta_step")) {
        const Json& d = j.at("delta_step");
        p.delta_step = d.is_array() ? d.get<std::vector<double>>() : std::vector<double>{d.get<double>()};
    }
    if (j.contains("eta_usd_per_cycle")) p.eta = j.at("eta_usd_per_cycle").get<double>();
    if (j.contains("max_iters")) p.max_iters = j.at("max_iters").get<int>();
    if (j.contains("update_mode")) {
        const auto m = j.at("update_mode").get<std::string>();
        if (m == "jacobi") p.update_mode = UpdateMode::Jacobi;
        else if (m == "gauss_seidel") p.update_mode = UpdateMode::GaussSeidel;
        else throw InvalidScenario("unknown update_mode '" + m + "'");
    }
    if (j.contains("warm_start")) p.warm_start = j.at("warm_start").get<bool>();
}

inline Json to_json(const SocialParams& p) { return {{"restarts", p.restarts}, {"seed", p.seed}}; }

inline void merge_social(const Json& j, SocialParams& p) {
    check_keys(j, {"restarts", "seed"}, "social params");
    if (j.contains("restarts")) p.restarts = j.at("restarts").get<int>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
}

// Traces.

inline Json to_json(const IpoaRound& r) {
    Json u = Json::array();
    for (double v : r.per_device_disutility) u.push_back(number(v));
    Json out = {{"round", r.round}, {"frobenius_delta", r.frobenius_delta}, {"per_device_disutility", u}};
    if (r.profile) {
        Json rows = Json::array();
        for (std::size_t i = 0; i < r.profile->rows(); ++i) {
            const auto row = r.profile->row(i);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        out["profile"] = rows;
    }
    return out;
}

/// One JSON object per round, newline terminated.
inline void write_jsonl(std::ostream& os, const RunTrace& t) {
    for (const auto& r : t.rounds) os << to_json(r).dump() << '\n';
}

/// Prices in $/cycle, utilities in $/s.
inline Json to_json(const PricingRecord& rec) {
    Json u = Json::array();
    for (double v : rec.utilities) u.push_back(number(v));
    Json dg = Json::array();
    for (bool b : rec.degraded) dg.push_back(b);
    return {{"iter", rec.iter}, {"prices", rec.prices.p}, {"utilities", u}, {"degraded_flags", dg}};
}

inline void write_jsonl(std::ostream& os, const std::vector<PricingRecord>& trace) {
    for (const auto& r : trace) os << to_json(r).dump() << '\n';
}

/// Minimal CSV writer: the header is fixed at construction and rows must match its width.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), width_(header.size()) {
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw Error("CSV row width does not match the header");
        write_row(cells);
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) os_ << (k ? "," : "") << cells[k];
        os_ << '\n';
    }

    std::ostream& os_;
    std::size_t width_;
};

inline void write_csv(std::ostream& os, const RunTrace& t) {
    std::vector<std::string> header = {"round_idx", "frobenius_delta_dimless"};
    const std::size_t m = t.rounds.empty() ? 0 : t.rounds.front().per_device_disutility.size();
    for (std::size_t i = 0; i < m; ++i) header.push_back("disutility_md" + std::to_string(i) + "_dimless");
    CsvWriter csv(os, header);
    for (const auto& r : t.rounds) {
        std::vector<std::string> cells = {std::to_string(r.round), format_double(r.frobenius_delta)};
        for (double v : r.per_device_disutility) cells.push_back(format_double(v));
        csv.row(cells);
    }
}

inline void write_csv(std::ostream& os, const std::vector<PricingRecord>& trace) {
    const std::size_t n = trace.empty() ? 0 : trace.front().prices.size();
    std::vector<std::string> header = {"iter_idx"};
    for (std::size_t j = 0; j < n; ++j) header.push_back("price_osp" + std::to_string(j) + "_usd_per_gcycle");
    for (std::size_t j = 0; j < n; ++j) header.push_back("utility_osp" + std::to_string(j) + "_usd_per_s");
    for (std::size_t j = 0; j < n; ++j) header.push_back("degraded_osp" + std::to_string(j) + "_flag");
    CsvWriter csv(os, header);
    for (const auto& r : trace) {
        std::vector<std::string> cells = {std::to_string(r.iter)};
        for (std::size_t j = 0; j < n; ++j) cells.push_back(format_double(units::to_usd_per_gcycle(r.prices[j])));
        for (double v : r.utilities) cells.push_back(format_double(v));
        for (bool b : r.degraded) cells.push_back(b ? "1" : "0");
        csv.row(cells);
    }
}

}  // namespace mecgame::io
