#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mecgame;
using namespace fixtures;

TEST(BaselineProfile, LocalOnlyIsZero) {
    const auto s = generate_scenario(figure_spec(1, 5));
    EXPECT_EQ(baseline_profile(s, BaselineKind::LocalOnly), StrategyProfile::zeros(s));
}

TEST(BaselineProfile, EvenlySplitsOverAllChoices) {
    const auto s = generate_scenario(figure_spec(1, 5));
    const auto a = baseline_profile(s, BaselineKind::Evenly);
    for (double v : a.data()) EXPECT_EQ(v, 0.2);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a.row_sum(i), 0.8, 1e-15);
}

TEST(BaselineProfile, CloudOnlyFillsCloudColumns) {
    const auto s = generate_scenario(figure_spec(1, 5));
    const auto a = baseline_profile(s, BaselineKind::CloudOnly);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a(i, 0), 1.0);
        for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(a(i, j), 0.0);
    }
}

TEST(BaselineProfile, SocialHasNoClosedForm) {
    const auto s = generate_scenario(figure_spec(1, 2));
    EXPECT_THROW(baseline_profile(s, BaselineKind::SociallyOptimal), InvalidScenario);
}

TEST(EvaluateProfile, OverloadedEdgeIsFlaggedNotValued) {
    std::vector<DeviceParams> devs(20, midpoint_device());
    const auto s = make(devs, {cloud(), edge(5e8)});
    const auto ev = evaluate_profile(s, baseline_profile(s, BaselineKind::Evenly), prices_gcycle({0.2, 0.1}));
    EXPECT_FALSE(ev.stable);
    EXPECT_TRUE(ev.report.has("C5"));
    EXPECT_FALSE(ev.flag.empty());
    EXPECT_TRUE(std::isinf(ev.mean_disutility));
}

TEST(LocalOnly, IndependentOfTransmitPower) {
    std::vector<double> values;
    for (double eps : {0.1, 0.4, 1.0}) {
        auto spec = figure_spec(1, 20);
        spec.overrides["eps_tx_w"] = ParamRange::fixed(eps);
        const auto s = generate_scenario(spec);
        values.push_back(evaluate_profile(s, baseline_profile(s, BaselineKind::LocalOnly), figure_prices()).mean_disutility);
    }
    EXPECT_EQ(values[0], values[1]);
    EXPECT_EQ(values[1], values[2]);
}

TEST(SociallyOptimal, SingleDeviceMatchesBestResponse) {
    const auto s = make({midpoint_device()}, {cloud(), edge()});
    const auto prices = prices_gcycle({0.2, 0.1});
    const auto so = socially_optimal(s, prices);
    const std::vector<double> zeros(2, 0.0);
    const auto br = solve_proximal(s, 0, zeros, prices, zeros, 0.0);
    const double u_br = device_costs(s, 0, br.row, zeros, prices).disutility;
    EXPECT_NEAR(so.objective, u_br, 1e-7);
}

TEST(SociallyOptimal, NoWorseThanEquilibrium) {
    const auto s = make({midpoint_device(), midpoint_device()}, {edge(1.2e9)});
    const auto prices = prices_gcycle({0.08});
    const auto ne = ipoa(s, prices);
    const auto so = socially_optimal(s, prices);
    EXPECT_LE(so.objective, mean_disutility(s, ne.profile, prices) + 1e-9);
}

TEST(SociallyOptimal, MatchesJointGrid) {
    DeviceParams a = midpoint_device();
    a.d_max = 3.0;
    DeviceParams b = a;
    b.lambda = 28.0 / 60.0;
    b.f_md = 3.2e8;
    const std::vector<DeviceParams> ds = {a, b};
    const std::vector<OspParams> os = {cloud(1.5e9), edge(9e8)};
    const auto s = make(ds, os);
    const auto prices = prices_gcycle({0.15, 0.1});
    const auto so = socially_optimal(s, prices);
    ASSERT_TRUE(so.capped[0] && so.capped[1]);

    double best = std::numeric_limits<double>::infinity();
    const int k = 20;
    std::vector<double> x(4);
    for (int p = 0; p <= k; ++p) {
        for (int q = 0; p + q <= k; ++q) {
            for (int r = 0; r <= k; ++r) {
                for (int t = 0; r + t <= k; ++t) {
                    x = {p / 20.0, q / 20.0, r / 20.0, t / 20.0};
                    double total = 0.0;
                    bool ok = true;
                    for (std::size_t i = 0; i < 2 && ok; ++i) {
                        const double off = x[2 * i] + x[2 * i + 1];
                        ok = (1.0 - off) * ds[i].cycle_rate() / ds[i].f_md <= 1.0 - 1e-4;
                        const auto c = oracle::costs(ds, os, table_net(), x, i, prices.p);
                        ok = ok && c && c->delay <= ds[i].d_max && c->energy <= ds[i].e_max && c->payment <= ds[i].p_max;
                        if (ok) total += c->disutility;
                    }
                    if (ok) best = std::min(best, total / 2.0);
                }
            }
        }
    }
    ASSERT_TRUE(std::isfinite(best));
    EXPECT_LE(so.objective, best + 1e-9);
    EXPECT_GE(so.objective, best - 1e-3);
}

TEST(SociallyOptimal, ResultIsFeasible) {
    const auto s = generate_scenario(figure_spec(2, 8));
    const auto so = socially_optimal(s, figure_prices());
    const auto rep = check_feasible(s, so.profile, figure_prices());
    EXPECT_TRUE(rep.stable());
    for (const auto& v : rep.violations) EXPECT_FALSE(so.capped[v.index]) << v.constraint << " on device " << v.index;
}

TEST(SociallyOptimal, DeterministicAcrossRuns) {
    const auto s = generate_scenario(figure_spec(3, 5));
    const auto a = socially_optimal(s, figure_prices());
    const auto b = socially_optimal(s, figure_prices());
    EXPECT_EQ(a.profile, b.profile);
    EXPECT_EQ(a.start_objectives, b.start_objectives);
}

TEST(Poa, SinglePlayerIsOne) {
    const auto s = make({midpoint_device()}, {cloud(), edge()});
    IpoaParams ip;
    ip.sigma_conv = 1e-9;
    const auto rep = poa(s, prices_gcycle({0.2, 0.1}), ip);
    EXPECT_NEAR(rep.poa, 1.0, 1e-6);
}

TEST(Poa, NeverBelowOneAndOrdersBaselines) {
    const auto s = generate_scenario(figure_spec(1, 10));
    const auto prices = figure_prices();
    const auto rep = poa(s, prices);
    EXPECT_GE(rep.poa, 1.0 - 1e-6);
    EXPECT_LE(rep.poa, 1.5);
    for (auto kind : {BaselineKind::LocalOnly, BaselineKind::CloudOnly, BaselineKind::Evenly}) {
        const auto ev = evaluate_profile(s, baseline_profile(s, kind), prices);
        if (ev.stable) EXPECT_LE(rep.avg_ne, ev.mean_disutility) << to_string(kind);
    }
}
