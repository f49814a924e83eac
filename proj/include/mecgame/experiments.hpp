#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mecgame/baselines.hpp"
#include "mecgame/json_io.hpp"
#include "mecgame/pricing.hpp"
#include "mecgame/scenario.hpp"

namespace mecgame {

inline constexpr const char* kVersion = "0.1.0";

enum class Recipe { ConvergenceTrace, DisutilityVsLambda, DisutilityVsPower, PriceTrace, UtilityTrace, IspaVsBlind, PoaSweep };

inline const char* to_string(Recipe r) {
    switch (r) {
        case Recipe::ConvergenceTrace: return "convergence";
        case Recipe::DisutilityVsLambda: return "disutility_vs_lambda";
        case Recipe::DisutilityVsPower: return "disutility_vs_power";
        case Recipe::PriceTrace: return "price_trace";
        case Recipe::UtilityTrace: return "utility_trace";
        case Recipe::IspaVsBlind: return "ispa_vs_blind";
        case Recipe::PoaSweep: return "poa_sweep";
    }
    return "?";
}

inline Recipe recipe_from_string(const std::string& name) {
    for (Recipe r : {Recipe::ConvergenceTrace, Recipe::DisutilityVsLambda, Recipe::DisutilityVsPower, Recipe::PriceTrace,
                     Recipe::UtilityTrace, Recipe::IspaVsBlind, Recipe::PoaSweep}) {
        if (name == to_string(r)) return r;
    }
    throw InvalidScenario("unknown recipe '" + name + "'");
}

/// Device indices traced by the convergence recipe (MD 5, 15, 25, 35, 45 counted from 1).
inline const std::vector<std::size_t> kTrackedDevices = {4, 14, 24, 34, 44};

struct ExperimentSpec {
    Recipe recipe = Recipe::ConvergenceTrace;
    ScenarioSpec scenario;
    IpoaParams ipoa;
    IspaParams ispa;
    SocialParams social;
    std::vector<double> prices_usd_per_gcycle;  // follower-game prices; empty means 0.2 cloud, 0.1 edge
    std::string sweep_axis;  // "lambda_tasks_per_min", "eps_tx_w", "m" or empty
    std::vector<double> sweep_values;
    bool full = false;
    std::string out_dir = ".";
};

/// Figure settings: 50 devices, 1 cloud and 3 edge OSPs, lambda = 25 tasks/min and eps_tx = 0.4 W
/// unless the swept axis replaces them. `full` selects paper scale (50 ISPA iterations, 10
/// planner restarts, five device counts).
inline ExperimentSpec default_experiment(Recipe r, bool full = false) {
    ExperimentSpec e;
    e.recipe = r;
    e.full = full;
    e.scenario.overrides["lambda_tasks_per_min"] = ParamRange::fixed(25.0);
    e.scenario.overrides["eps_tx_w"] = ParamRange::fixed(0.4);
    e.ispa.max_iters = full ? 50 : 20;
    e.social.restarts = full ? 10 : 4;
    switch (r) {
        case Recipe::DisutilityVsLambda:
        case Recipe::PoaSweep:
            e.sweep_axis = "lambda_tasks_per_min";
            e.sweep_values = {20, 21, 22, 23, 24, 25, 26, 27, 28, 29};
            break;
        case Recipe::DisutilityVsPower:
            e.sweep_axis = "eps_tx_w";
            e.sweep_values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
            break;
        case Recipe::PriceTrace:
        case Recipe::UtilityTrace:
            e.sweep_axis = "m";
            e.sweep_values = full ? std::vector<double>{10, 30, 50, 70, 90} : std::vector<double>{10, 50, 90};
            break;
        default: break;
    }
    return e;
}

/// Prices for the follower-game recipes [$/cycle].
inline PriceVector experiment_prices(const ExperimentSpec& e, const SystemScenario& s) {
    PriceVector p;
    if (e.prices_usd_per_gcycle.empty()) {
        for (const auto& o : s.osps()) p.p.push_back(units::usd_per_gcycle(o.is_edge() ? 0.1 : 0.2));
    } else {
        if (e.prices_usd_per_gcycle.size() != s.num_osps()) throw InvalidScenario("need one price per OSP");
        for (double v : e.prices_usd_per_gcycle) p.p.push_back(units::usd_per_gcycle(v));
    }
    return p;
}

/// Scenario spec of one sweep point.
inline ScenarioSpec point_spec(const ExperimentSpec& e, double value) {
    ScenarioSpec spec = e.scenario;
    if (e.sweep_axis == "m") spec.m = static_cast<std::size_t>(value);
    else if (!e.sweep_axis.empty()) spec.overrides[e.sweep_axis] = ParamRange::fixed(value);
    return spec;
}

struct PointOutcome {
    std::string label;
    bool ok = false;
    std::string error;
    io::Json summary;
};

struct ExperimentResult {
    std::vector<PointOutcome> points;
    std::vector<std::string> files;  // relative to out_dir
    io::Json manifest;

    bool all_failed() const {
        for (const auto& p : points) {
            if (p.ok) return false;
        }
        return !points.empty();
    }
};

namespace detail {

inline std::string label(const ExperimentSpec& e, double v) {
    return e.sweep_axis.empty() ? std::string("single") : e.sweep_axis + "=" + io::format_double(v);
}

inline std::string cell(double v) { return io::format_double(v); }

// Runs fn for every sweep point (once when there is no axis), recording failures instead of
// aborting.
template <class Fn>
void for_each_point(const ExperimentSpec& e, ExperimentResult& res, std::ostream* log, Fn&& fn) {
    const std::vector<double> values = e.sweep_axis.empty() ? std::vector<double>{0.0} : e.sweep_values;
    for (double v : values) {
        PointOutcome out;
        out.label = label(e, v);
        try {
            out.summary = fn(v);
            out.ok = true;
        } catch (const Error& err) {
            out.error = err.what();
        }
        if (log) *log << out.label << ": " << (out.ok ? "ok" : "failed: " + out.error) << '\n';
        res.points.push_back(std::move(out));
    }
}

inline std::string scheme_cell(const ProfileEvaluation& ev, std::string_view name, std::vector<std::string>& flags) {
    if (!ev.stable) flags.push_back(std::string(name) + ":" + ev.flag);
    return cell(ev.mean_disutility);
}

}  // namespace detail

/// Runs the recipe, writing traces, a CSV summary and manifest.json into e.out_dir. Per-point
/// failures are recorded in the manifest.
inline ExperimentResult run_experiment(const ExperimentSpec& e, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(e.out_dir);
    ExperimentResult res;
    auto path = [&](const std::string& name) {
        res.files.push_back(name);
        return (fs::path(e.out_dir) / name).string();
    };

    switch (e.recipe) {
        case Recipe::ConvergenceTrace: {
            std::ofstream jsonl(path("ipoa_trace.jsonl"), std::ios::binary);
            std::ofstream csv_file(path("convergence.csv"), std::ios::binary);
            detail::for_each_point(e, res, log, [&](double) {
                const SystemScenario s = generate_scenario(e.scenario);
                const PriceVector prices = experiment_prices(e, s);
                const IpoaResult r = ipoa(s, prices, e.ipoa);
                io::write_jsonl(jsonl, r.trace);
                std::vector<std::string> header = {"round_idx", "frobenius_delta_dimless"};
                for (std::size_t i : kTrackedDevices) {
                    if (i < s.num_devices()) header.push_back("disutility_md" + std::to_string(i + 1) + "_dimless");
                }
                io::CsvWriter csv(csv_file, header);
                for (const auto& round : r.trace.rounds) {
                    std::vector<std::string> cells = {std::to_string(round.round), detail::cell(round.frobenius_delta)};
                    for (std::size_t i : kTrackedDevices) {
                        if (i < s.num_devices()) cells.push_back(detail::cell(round.per_device_disutility[i]));
                    }
                    csv.row(cells);
                }
                return io::Json{{"converged", r.converged},
                                {"iterations", r.iterations},
                                {"relaxed_solves", r.relaxed_solves},
                                {"failed_solves", r.failed_solves}};
            });
            break;
        }
        case Recipe::DisutilityVsLambda:
        case Recipe::DisutilityVsPower: {
            const std::string unit = e.sweep_axis;
            std::ofstream csv_file(path(std::string(to_string(e.recipe)) + ".csv"), std::ios::binary);
            std::ofstream jsonl(path("points.jsonl"), std::ios::binary);
            io::CsvWriter csv(csv_file, {unit, "ipoa_dimless", "social_dimless", "local_dimless", "cloud_dimless",
                                         "evenly_dimless", "poa_dimless", "infeasible_flags"});
            detail::for_each_point(e, res, log, [&](double v) {
                const SystemScenario s = generate_scenario(point_spec(e, v));
                const PriceVector prices = experiment_prices(e, s);
                const IpoaResult ne = ipoa(s, prices, e.ipoa);
                const SocialResult so = socially_optimal(s, prices, e.social, {ne.profile});
                const double avg_ne = mean_disutility(s, ne.profile, prices);
                std::vector<std::string> flags;
                const auto local = evaluate_profile(s, baseline_profile(s, BaselineKind::LocalOnly), prices);
                const auto cloud = evaluate_profile(s, baseline_profile(s, BaselineKind::CloudOnly), prices);
                const auto evenly = evaluate_profile(s, baseline_profile(s, BaselineKind::Evenly), prices);
                std::vector<std::string> cells = {detail::cell(v), detail::cell(avg_ne), detail::cell(so.objective)};
                cells.push_back(detail::scheme_cell(local, "local", flags));
                cells.push_back(detail::scheme_cell(cloud, "cloud", flags));
                cells.push_back(detail::scheme_cell(evenly, "evenly", flags));
                cells.push_back(detail::cell(avg_ne / so.objective));
                std::string joined;
                for (const auto& f : flags) joined += (joined.empty() ? "" : ";") + f;
                cells.push_back(joined);
                csv.row(cells);
                io::Json point = {{unit, v},
                                  {"ipoa", avg_ne},
                                  {"ipoa_converged", ne.converged},
                                  {"ipoa_iterations", ne.iterations},
                                  {"social", so.objective},
                                  {"social_spread", so.spread()},
                                  {"local", io::number(local.mean_disutility)},
                                  {"cloud", io::number(cloud.mean_disutility)},
                                  {"evenly", io::number(evenly.mean_disutility)},
                                  {"infeasible_flags", flags}};
                jsonl << point.dump() << '\n';
                return point;
            });
            break;
        }
        case Recipe::PoaSweep: {
            std::ofstream csv_file(path("poa_sweep.csv"), std::ios::binary);
            io::CsvWriter csv(csv_file, {e.sweep_axis, "avg_ne_dimless", "avg_so_dimless", "poa_dimless",
                                         "so_spread_dimless", "ne_converged_flag"});
            detail::for_each_point(e, res, log, [&](double v) {
                const SystemScenario s = generate_scenario(point_spec(e, v));
                const PoaReport rep = poa(s, experiment_prices(e, s), e.ipoa, e.social);
                csv.row({detail::cell(v), detail::cell(rep.avg_ne), detail::cell(rep.avg_so), detail::cell(rep.poa),
                         detail::cell(rep.so_spread), rep.ne_converged ? "1" : "0"});
                return io::Json{{"poa", rep.poa}, {"ne_converged", rep.ne_converged}};
            });
            break;
        }
        case Recipe::PriceTrace:
        case Recipe::UtilityTrace: {
            std::ofstream csv_file(path(std::string(to_string(e.recipe)) + ".csv"), std::ios::binary);
            bool header_written = false;
            detail::for_each_point(e, res, log, [&](double v) {
                const SystemScenario s = generate_scenario(point_spec(e, v));
                const IspaResult r = ispa(s, e.ispa, PriceVector::floors(s));
                const std::string tag = e.sweep_axis.empty() ? "" : "_m" + std::to_string(s.num_devices());
                std::ofstream jsonl(path("ispa_trace" + tag + ".jsonl"), std::ios::binary);
                io::write_jsonl(jsonl, r.trace);
                std::ostringstream one;
                io::write_csv(one, r.trace);
                std::istringstream lines(one.str());
                std::string line;
                bool first = true;
                while (std::getline(lines, line)) {
                    if (first) {
                        if (!header_written) csv_file << "m_devices," << line << '\n';
                        header_written = true;
                        first = false;
                        continue;
                    }
                    csv_file << s.num_devices() << ',' << line << '\n';
                }
                int degraded = 0;
                for (const auto& rec : r.trace) {
                    for (bool b : rec.degraded) degraded += b ? 1 : 0;
                }
                std::vector<double> final_prices;
                for (double p : r.prices.p) final_prices.push_back(units::to_usd_per_gcycle(p));
                return io::Json{{"final_prices_usd_per_gcycle", final_prices}, {"degraded_entries", degraded}};
            });
            break;
        }
        case Recipe::IspaVsBlind: {
            std::ofstream csv_file(path("ispa_vs_blind.csv"), std::ios::binary);
            std::ofstream ispa_jsonl(path("ispa_trace.jsonl"), std::ios::binary);
            std::ofstream blind_jsonl(path("blind_trace.jsonl"), std::ios::binary);
            detail::for_each_point(e, res, log, [&](double) {
                const SystemScenario s = generate_scenario(e.scenario);
                const PriceVector p0 = PriceVector::floors(s);
                const IspaResult r = ispa(s, e.ispa, p0);
                double mean_price = 0.0;
                for (double p : r.prices.p) mean_price += p / static_cast<double>(r.prices.size());
                PriceVector target = p0;
                for (double& p : target.p) p = std::max(p, mean_price);
                const IspaResult b = blind_pricing(s, e.ispa, p0, target);
                io::write_jsonl(ispa_jsonl, r.trace);
                io::write_jsonl(blind_jsonl, b.trace);
                io::CsvWriter csv(csv_file, {"iter_idx", "ispa_mean_price_usd_per_gcycle", "blind_mean_price_usd_per_gcycle",
                                             "ispa_mean_utility_usd_per_s", "blind_mean_utility_usd_per_s"});
                auto avg = [](const PriceVector& p) {
                    double acc = 0.0;
                    for (double v : p.p) acc += v;
                    return units::to_usd_per_gcycle(acc / static_cast<double>(p.size()));
                };
                for (std::size_t k = 0; k < b.trace.size(); ++k) {
                    const PricingRecord& ri = r.trace[k + 1];
                    const PricingRecord& rb = b.trace[k];
                    csv.row({std::to_string(rb.iter), detail::cell(avg(ri.prices)), detail::cell(avg(rb.prices)),
                             detail::cell(mean_utility(ri)), detail::cell(mean_utility(rb))});
                }
                return io::Json{{"ispa_final_mean_utility_usd_per_s", mean_utility(r.trace.back())},
                                {"blind_final_mean_utility_usd_per_s", mean_utility(b.trace.back())}};
            });
            break;
        }
    }

    io::Json points = io::Json::array();
    for (const auto& p : res.points) {
        io::Json jp = {{"label", p.label}, {"status", p.ok ? "ok" : "failed"}};
        if (!p.ok) jp["error"] = p.error;
        else jp["summary"] = p.summary;
        points.push_back(jp);
    }
    std::vector<std::string> files = res.files;
    files.push_back("manifest.json");
    const std::size_t n_osps = e.scenario.n_cloud + e.scenario.n_edge;
    res.manifest = {{"recipe", to_string(e.recipe)},
                    {"version", kVersion},
                    {"seed", e.scenario.seed},
                    {"full", e.full},
                    {"scenario", io::to_json(e.scenario)},
                    {"parameters_native_units", io::effective_parameters(e.scenario)},
                    {"ipoa", io::to_json(e.ipoa)},
                    {"ispa", io::to_json(e.ispa, n_osps)},
                    {"social", io::to_json(e.social)},
                    {"prices_usd_per_gcycle", e.prices_usd_per_gcycle.empty()
                                                  ? io::Json("cloud 0.2, edge 0.1")
                                                  : io::Json(e.prices_usd_per_gcycle)},
                    {"sweep", {{"axis", e.sweep_axis}, {"values", e.sweep_values}}},
                    {"points", points},
                    {"files", files}};
    io::write_file(path("manifest.json"), res.manifest.dump(2) + "\n");
    res.files = files;
    return res;
}

}  // namespace mecgame
