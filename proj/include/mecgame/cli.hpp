#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mecgame/baselines.hpp"
#include "mecgame/experiments.hpp"
#include "mecgame/json_io.hpp"
#include "mecgame/pricing.hpp"
#include "mecgame/scenario.hpp"
#include "mecgame/validation.hpp"

namespace mecgame::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Raised for bad flags, unreadable configs and invalid parameter values.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out = ".";
    std::string format = "jsonl";
    bool quiet = false;
    std::optional<std::size_t> m;
    std::vector<std::string> set;  // name=value or name=lo:hi, native units
    std::string scenario_file;
    std::vector<double> prices;  // $/Gcycle

    // ipoa
    std::optional<double> tau, sigma;
    std::optional<int> max_rounds;
    std::string centroid;
    bool record_profiles = false;
    // ispa
    std::optional<int> iters;
    std::optional<double> delta, eta;
    std::string mode;
    // baseline / poa
    std::string scheme = "all";
    std::optional<int> restarts;
    // experiment
    std::string recipe;
    bool full = false;
    // validate
    int points = 100;
};

namespace detail {

inline ParamRange parse_range(const std::string& text) {
    try {
        const auto colon = text.find(':');
        if (colon == std::string::npos) return ParamRange::fixed(std::stod(text));
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("cannot parse value '" + text + "'");
    }
}

// Everything the subcommands share: config, scenario, prices and algorithm parameters, applied in
// the order defaults < config file < flags.
struct Setup {
    io::Json config = io::Json::object();
    ScenarioSpec spec;
    std::optional<SystemScenario> scenario;
    IpoaParams ipoa;
    IspaParams ispa;
    SocialParams social;
    std::vector<double> prices;
    std::string out;
};

inline Setup prepare(const Options& o, ScenarioSpec base = {}) {
    Setup st;
    st.spec = std::move(base);
    try {
        if (!o.config.empty()) {
            if (!std::filesystem::exists(o.config)) throw UsageError("config file '" + o.config + "' not found");
            st.config = io::read_file(o.config);
            io::check_keys(st.config, {"scenario", "ipoa", "ispa", "social", "prices_usd_per_gcycle", "recipe", "sweep_values", "full"},
                           "config");
            if (st.config.contains("scenario")) io::merge_spec(st.config.at("scenario"), st.spec);
            if (st.config.contains("ipoa")) io::merge_ipoa(st.config.at("ipoa"), st.ipoa);
            if (st.config.contains("ispa")) io::merge_ispa(st.config.at("ispa"), st.ispa);
            if (st.config.contains("social")) io::merge_social(st.config.at("social"), st.social);
            if (st.config.contains("prices_usd_per_gcycle")) {
                st.prices = st.config.at("prices_usd_per_gcycle").get<std::vector<double>>();
            }
        }
        if (o.seed) st.spec.seed = *o.seed, st.social.seed = *o.seed;
        if (o.m) st.spec.m = *o.m;
        for (const auto& kv : o.set) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects name=value, got '" + kv + "'");
            st.spec.overrides[kv.substr(0, eq)] = parse_range(kv.substr(eq + 1));
        }
        validate(st.spec);
        if (o.tau) st.ipoa.tau = *o.tau;
        if (o.sigma) st.ipoa.sigma_conv = *o.sigma;
        if (o.max_rounds) st.ipoa.max_outer_iters = *o.max_rounds;
        if (!o.centroid.empty()) io::merge_ipoa({{"centroid_mode", o.centroid}}, st.ipoa);
        st.ipoa.record_profiles = st.ipoa.record_profiles || o.record_profiles;
        if (o.iters) st.ispa.max_iters = *o.iters;
        if (o.delta) st.ispa.delta_step = {*o.delta};
        if (o.eta) st.ispa.eta = *o.eta;
        if (!o.mode.empty()) io::merge_ispa({{"update_mode", o.mode}}, st.ispa);
        if (o.restarts) st.social.restarts = *o.restarts;
        if (!o.prices.empty()) st.prices = o.prices;
        if (!o.scenario_file.empty()) {
            if (!std::filesystem::exists(o.scenario_file)) {
                throw UsageError("scenario file '" + o.scenario_file + "' not found");
            }
            st.scenario.emplace(io::scenario_from_json(io::read_file(o.scenario_file)));
        }
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(e.what());
    } catch (const io::Json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    }
    const char* env = std::getenv("MECGAME_OUT_DIR");
    st.out = env && *env ? env : o.out;
    return st;
}

inline SystemScenario scenario_of(const Setup& st) {
    return st.scenario ? *st.scenario : generate_scenario(st.spec);
}

// A single delta applies to every OSP.
inline void expand_delta(IspaParams& p, std::size_t n) {
    if (p.delta_step.size() == 1 && n > 1) p.delta_step.assign(n, p.delta_step.front());
}

inline PriceVector prices_of(const Setup& st, const SystemScenario& s) {
    if (st.prices.empty()) {
        PriceVector p;
        for (const auto& o : s.osps()) p.p.push_back(units::usd_per_gcycle(o.is_edge() ? 0.1 : 0.2));
        return p;
    }
    if (st.prices.size() != s.num_osps()) throw UsageError("--prices needs one value per OSP");
    PriceVector p;
    for (double v : st.prices) p.p.push_back(units::usd_per_gcycle(v));
    return p;
}

inline std::string out_path(const Setup& st, const std::string& name) {
    std::filesystem::create_directories(st.out);
    return (std::filesystem::path(st.out) / name).string();
}

}  // namespace detail

/// Runs the command line; returns 0 on success, 1 on runtime failure, 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Edge-cloud offloading and pricing game simulator", "mecgame"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--seed", o.seed, "RNG seed");
    app.add_option("--config", o.config, "JSON config file");
    app.add_option("--out", o.out, "output directory (MECGAME_OUT_DIR overrides)");
    app.add_option("--format", o.format, "trace format")->check(CLI::IsMember({"csv", "jsonl"}));
    app.add_flag("--quiet", o.quiet, "suppress progress output");
    app.add_option("--m", o.m, "number of devices");
    app.add_option("--set", o.set, "parameter override name=value or name=lo:hi (native units)");

    auto* gen = app.add_subcommand("generate", "draw a scenario and write scenario.json");
    auto* cmd_ipoa = app.add_subcommand("ipoa", "solve the follower game at fixed prices");
    auto* cmd_ispa = app.add_subcommand("ispa", "run iterative Stackelberg pricing");
    auto* cmd_base = app.add_subcommand("baseline", "evaluate comparison schemes");
    auto* cmd_poa = app.add_subcommand("poa", "price of anarchy at fixed prices");
    auto* cmd_exp = app.add_subcommand("experiment", "run a figure recipe");
    auto* cmd_val = app.add_subcommand("validate", "check derivatives and convexity on a scenario");

    for (auto* c : {cmd_ipoa, cmd_ispa, cmd_base, cmd_poa}) {
        c->add_option("--scenario", o.scenario_file, "materialized scenario JSON");
    }
    for (auto* c : {cmd_ipoa, cmd_base, cmd_poa}) {
        c->add_option("--prices", o.prices, "prices per OSP [$/Gcycle]")->delimiter(',');
        c->add_option("--tau", o.tau, "proximal weight");
        c->add_option("--sigma", o.sigma, "convergence threshold");
        c->add_option("--max-rounds", o.max_rounds, "IPOA round limit");
        c->add_option("--centroid", o.centroid, "every_round or on_inner_convergence");
    }
    cmd_ipoa->add_flag("--record-profiles", o.record_profiles, "include profiles in the trace");
    cmd_ispa->add_option("--iters", o.iters, "ISPA iterations");
    cmd_ispa->add_option("--delta", o.delta, "price step");
    cmd_ispa->add_option("--eta", o.eta, "finite-difference half width [$/cycle]");
    cmd_ispa->add_option("--mode", o.mode, "jacobi or gauss_seidel");
    cmd_base->add_option("--scheme", o.scheme, "scheme")->check(CLI::IsMember({"local", "cloud", "evenly", "social", "all"}));
    for (auto* c : {cmd_base, cmd_poa, cmd_exp}) c->add_option("--restarts", o.restarts, "planner restarts");
    cmd_exp->add_option("--recipe", o.recipe, "recipe name")->required();
    cmd_exp->add_flag("--full", o.full, "paper scale");
    cmd_val->add_option("--points", o.points, "sample points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    std::ostream* log = o.quiet ? nullptr : &out;
    try {
        if (*cmd_exp) {
            Recipe recipe;
            try {
                recipe = recipe_from_string(o.recipe);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            ExperimentSpec e = default_experiment(recipe, o.full);
            detail::Setup st = detail::prepare(o, e.scenario);
            if (!o.restarts && !st.config.contains("social")) st.social.restarts = e.social.restarts;
            if (!o.iters && !(st.config.contains("ispa") && st.config.at("ispa").contains("max_iters"))) {
                st.ispa.max_iters = e.ispa.max_iters;
            }
            e.scenario = st.spec;
            e.ipoa = st.ipoa;
            e.ispa = st.ispa;
            detail::expand_delta(e.ispa, e.scenario.n_cloud + e.scenario.n_edge);
            e.social = st.social;
            e.prices_usd_per_gcycle = st.prices;
            if (st.config.contains("sweep_values")) e.sweep_values = st.config.at("sweep_values").get<std::vector<double>>();
            e.out_dir = st.out;
            const ExperimentResult r = run_experiment(e, log);
            return r.all_failed() ? kExitRuntime : kExitOk;
        }

        detail::Setup st = detail::prepare(o);
        if (*gen) {
            const SystemScenario s = generate_scenario(st.spec);
            const std::string path = detail::out_path(st, "scenario.json");
            io::write_file(path, io::to_json(s).dump(2) + "\n");
            if (log) *log << "wrote " << path << '\n';
            return kExitOk;
        }

        const SystemScenario s = detail::scenario_of(st);
        if (*cmd_val) {
            const ValidationReport rep = validate_derivatives(s, PriceVector::floors(s), o.points, st.spec.seed);
            if (log) {
                *log << "points " << rep.points << " grad_rel_err " << rep.max_grad_rel_err << " hess_rel_err "
                     << rep.max_hess_rel_err << " min_eigenvalue " << rep.min_eigenvalue << '\n'
                     << (rep.passed ? "PASS" : "FAIL") << '\n';
            }
            return rep.passed ? kExitOk : kExitRuntime;
        }

        if (*cmd_ispa) {
            detail::expand_delta(st.ispa, s.num_osps());
            const PriceVector p0 = st.prices.empty() ? PriceVector::floors(s) : detail::prices_of(st, s);
            const IspaResult r = ispa(s, st.ispa, p0);
            const std::string path = detail::out_path(st, "ispa_trace." + o.format);
            std::ofstream f(path, std::ios::binary);
            if (o.format == "csv") io::write_csv(f, r.trace);
            else io::write_jsonl(f, r.trace);
            if (log) {
                *log << "final prices [$/Gcycle]:";
                for (double p : r.prices.p) *log << ' ' << units::to_usd_per_gcycle(p);
                *log << "\nwrote " << path << '\n';
            }
            return kExitOk;
        }

        const PriceVector prices = detail::prices_of(st, s);
        if (*cmd_ipoa) {
            const IpoaResult r = ipoa(s, prices, st.ipoa);
            const std::string path = detail::out_path(st, "ipoa_trace." + o.format);
            std::ofstream f(path, std::ios::binary);
            if (o.format == "csv") io::write_csv(f, r.trace);
            else io::write_jsonl(f, r.trace);
            if (log) {
                *log << (r.converged ? "converged" : "not converged") << " after " << r.iterations
                     << " rounds, mean disutility " << mean_disutility(s, r.profile, prices) << "\nwrote " << path << '\n';
            }
            return kExitOk;
        }

        if (*cmd_poa) {
            const PoaReport rep = poa(s, prices, st.ipoa, st.social);
            const io::Json j = {{"avg_ne", rep.avg_ne},     {"avg_so", rep.avg_so},
                                {"poa", rep.poa},           {"ne_converged", rep.ne_converged},
                                {"so_spread", rep.so_spread}, {"ne_iterations", rep.ne_iterations}};
            const std::string path = detail::out_path(st, "poa." + o.format);
            std::ofstream f(path, std::ios::binary);
            if (o.format == "csv") {
                io::CsvWriter csv(f, {"avg_ne_dimless", "avg_so_dimless", "poa_dimless", "so_spread_dimless",
                                      "ne_converged_flag"});
                csv.row({io::format_double(rep.avg_ne), io::format_double(rep.avg_so), io::format_double(rep.poa),
                         io::format_double(rep.so_spread), rep.ne_converged ? "1" : "0"});
            } else {
                f << j.dump() << '\n';
            }
            if (log) *log << "poa " << rep.poa << "\nwrote " << path << '\n';
            return kExitOk;
        }

        if (*cmd_base) {
            std::vector<std::pair<std::string, ProfileEvaluation>> rows;
            for (BaselineKind k : {BaselineKind::LocalOnly, BaselineKind::CloudOnly, BaselineKind::Evenly}) {
                if (o.scheme == "all" || o.scheme == to_string(k)) {
                    rows.emplace_back(to_string(k), evaluate_profile(s, baseline_profile(s, k), prices));
                }
            }
            if (o.scheme == "all" || o.scheme == "social") {
                const IpoaResult ne = ipoa(s, prices, st.ipoa);
                const SocialResult so = socially_optimal(s, prices, st.social, {ne.profile});
                rows.emplace_back("social", evaluate_profile(s, so.profile, prices));
            }
            const std::string path = detail::out_path(st, "baseline." + o.format);
            std::ofstream f(path, std::ios::binary);
            if (o.format == "csv") {
                io::CsvWriter csv(f, {"scheme", "mean_disutility_dimless", "infeasible_flag"});
                for (const auto& [name, ev] : rows) csv.row({name, io::format_double(ev.mean_disutility), ev.flag});
            } else {
                for (const auto& [name, ev] : rows) {
                    f << io::Json{{"scheme", name}, {"mean_disutility", io::number(ev.mean_disutility)}, {"flag", ev.flag}}.dump()
                      << '\n';
                }
            }
            if (log) {
                for (const auto& [name, ev] : rows) {
                    *log << name << ' ' << ev.mean_disutility << (ev.flag.empty() ? "" : " (" + ev.flag + ")") << '\n';
                }
                *log << "wrote " << path << '\n';
            }
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace mecgame::cli
