#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mecgame/barrier.hpp"
#include "mecgame/derivatives.hpp"
#include "mecgame/games.hpp"
#include "mecgame/rng.hpp"
#include "mecgame/solver.hpp"

namespace mecgame {

enum class BaselineKind { LocalOnly, CloudOnly, Evenly, SociallyOptimal };

inline const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::LocalOnly: return "local";
        case BaselineKind::CloudOnly: return "cloud";
        case BaselineKind::Evenly: return "evenly";
        case BaselineKind::SociallyOptimal: return "social";
    }
    return "?";
}

/// Fixed comparison profiles. CloudOnly splits every row evenly over the cloud columns (all-local
/// when there is no cloud OSP). SociallyOptimal has no closed form; see socially_optimal().
inline StrategyProfile baseline_profile(const SystemScenario& s, BaselineKind kind) {
    const std::size_t m = s.num_devices();
    const std::size_t n = s.num_osps();
    StrategyProfile a(m, n);
    switch (kind) {
        case BaselineKind::LocalOnly: break;
        case BaselineKind::CloudOnly:
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < s.num_cloud(); ++j) a(i, j) = 1.0 / static_cast<double>(s.num_cloud());
            }
            break;
        case BaselineKind::Evenly:
            a = StrategyProfile(m, n, 1.0 / static_cast<double>(n + 1));
            break;
        case BaselineKind::SociallyOptimal:
            throw InvalidScenario("the socially optimal profile is computed by socially_optimal()");
    }
    return a;
}

/// A profile's mean disutility with its feasibility verdict. When C1-C5 fail the costs are undefined
/// and mean_disutility is +inf with `flag` naming the first violated constraint; C6-C8 violations are
/// listed in `report` but the value is still reported.
struct ProfileEvaluation {
    StrategyProfile profile;
    FeasibilityReport report;
    bool stable = false;
    double mean_disutility = std::numeric_limits<double>::infinity();
    std::string flag;
};

inline ProfileEvaluation evaluate_profile(const SystemScenario& s, const StrategyProfile& a, const PriceVector& prices,
                                          double delta_stab = kDefaultDeltaStab) {
    ProfileEvaluation out;
    out.profile = a;
    out.report = check_feasible(s, a, prices, {delta_stab, true});
    out.stable = out.report.stable();
    if (out.stable) {
        out.mean_disutility = mean_disutility(s, a, prices);
    } else {
        for (const auto& v : out.report.violations) {
            if (v.constraint <= "C5") {
                out.flag = v.constraint;
                break;
            }
        }
    }
    return out;
}

/// Joint problem of a planner minimizing the mean disutility over the whole M x N profile subject to
/// every device's C1-C5 and the C6-C8 caps of the devices listed in `capped`.
///
/// Edge queues couple devices: the objective and each delay cap contain the cross terms
/// a_x c_i / (f_x - L_x), so the Hessian is dense on every edge column. The problem is not jointly
/// convex; the barrier engine shifts indefinite Newton systems.
class SocialProblem final : public barrier::Problem {
public:
    SocialProblem(const SystemScenario& s, const PriceVector& prices, std::vector<bool> capped, double delta_stab)
        : s_(s), prices_(prices), capped_(std::move(capped)) {
        const std::size_t m = s.num_devices();
        const std::size_t n = s.num_osps();
        const double limit = 1.0 - delta_stab;
        std::vector<Eigen::Triplet<double>> trip;
        std::vector<double> rhs;
        auto next_row = [&] { return static_cast<int>(rhs.size()); };
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                trip.emplace_back(next_row(), var(i, j), -1.0);
                rhs.push_back(0.0);
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            const DeviceParams& d = s.device(i);
            const int r = next_row();
            for (std::size_t j = 0; j < n; ++j) trip.emplace_back(r, var(i, j), 1.0);
            rhs.push_back(1.0);
            const double local_util = d.cycle_rate() / d.f_md;
            if (local_util > limit) {
                const int r3 = next_row();
                for (std::size_t j = 0; j < n; ++j) trip.emplace_back(r3, var(i, j), -local_util);
                rhs.push_back(limit - local_util);
            }
            const double tx = d.lambda * d.z / s.rate(i);
            if (tx > limit) {
                const int r4 = next_row();
                for (std::size_t j = 0; j < n; ++j) trip.emplace_back(r4, var(i, j), tx);
                rhs.push_back(limit);
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            const OspParams& o = s.osp(j);
            if (!o.is_edge()) continue;
            const int r = next_row();
            for (std::size_t i = 0; i < m; ++i) trip.emplace_back(r, var(i, j), s.device(i).cycle_rate() / o.f_osp);
            rhs.push_back(limit);
        }
        a_.resize(static_cast<barrier::Index>(rhs.size()), static_cast<barrier::Index>(m * n));
        a_.setFromTriplets(trip.begin(), trip.end());
        b_ = Eigen::Map<const Vector>(rhs.data(), static_cast<barrier::Index>(rhs.size()));
        for (std::size_t i = 0; i < m; ++i) {
            if (capped_[i]) cap_devices_.push_back(i);
        }
    }

    barrier::Index dim() const override { return static_cast<barrier::Index>(s_.num_devices() * s_.num_osps()); }
    const barrier::SparseMatrix& lin_a() const override { return a_; }
    const Vector& lin_b() const override { return b_; }

    bool objective(const Vector& x, double& f) const override {
        const auto& st = state(x);
        f = 0.0;
        for (const auto& rd : st.rd) f += rd.costs.disutility;
        f /= static_cast<double>(s_.num_devices());
        return true;
    }

    void objective_derivatives(const Vector& x, Vector& grad, Matrix& hess) const override {
        const auto& st = state(x);
        const std::size_t m = s_.num_devices();
        const std::size_t n = s_.num_osps();
        const double inv_m = 1.0 / static_cast<double>(m);
        grad.setZero(dim());
        hess.setZero(dim(), dim());
        for (std::size_t i = 0; i < m; ++i) {
            const auto& rd = st.rd[i];
            const auto base = static_cast<barrier::Index>(i * n);
            grad.segment(base, static_cast<barrier::Index>(n)) = inv_m * rd.grad_disutility;
            hess.block(base, base, static_cast<barrier::Index>(n), static_cast<barrier::Index>(n)) =
                inv_m * rd.hess_disutility;
        }
        std::vector<double> u(m);
        for (std::size_t x_col = 0; x_col < n; ++x_col) {
            if (!s_.osp(x_col).is_edge()) continue;
            for (std::size_t k = 0; k < m; ++k) {
                const DeviceParams& d = s_.device(k);
                u[k] = inv_m * d.theta_d / d.d_max * d.c;
            }
            add_edge_terms(st, x_col, u, 1.0, grad, hess, [&](std::size_t k) {
                const DeviceParams& d = s_.device(k);
                return inv_m * d.theta_d / d.d_max;
            });
        }
    }

    barrier::Index num_nonlinear() const override { return static_cast<barrier::Index>(3 * cap_devices_.size()); }

    bool nonlinear_values(const Vector& x, Vector& h) const override {
        const auto& st = state(x);
        h.resize(num_nonlinear());
        for (std::size_t c = 0; c < cap_devices_.size(); ++c) {
            const std::size_t i = cap_devices_[c];
            const DeviceParams& d = s_.device(i);
            const CostBreakdown& cb = st.rd[i].costs;
            const auto r = static_cast<barrier::Index>(3 * c);
            h[r] = cb.delay / d.d_max - 1.0;
            h[r + 1] = cb.energy / d.e_max - 1.0;
            h[r + 2] = cb.payment / d.p_max - 1.0;
        }
        return h.allFinite();
    }

    void nonlinear_jacobian(const Vector& x, Matrix& jac) const override {
        const auto& st = state(x);
        const std::size_t m = s_.num_devices();
        const std::size_t n = s_.num_osps();
        jac.setZero(num_nonlinear(), dim());
        for (std::size_t c = 0; c < cap_devices_.size(); ++c) {
            const std::size_t i = cap_devices_[c];
            const DeviceParams& d = s_.device(i);
            const auto& rd = st.rd[i];
            const auto r = static_cast<barrier::Index>(3 * c);
            const auto base = static_cast<barrier::Index>(i * n);
            const auto nn = static_cast<barrier::Index>(n);
            jac.row(r).segment(base, nn) = rd.grad_delay.transpose() / d.d_max;
            jac.row(r + 1).segment(base, nn) = rd.grad_energy.transpose() / d.e_max;
            jac.row(r + 2).segment(base, nn) = rd.grad_payment.transpose() / d.p_max;
            for (std::size_t xc = 0; xc < n; ++xc) {
                if (!s_.osp(xc).is_edge()) continue;
                const double free = st.free[xc];
                const double coef = x[var(i, xc)] * d.c / (free * free) / d.d_max;
                for (std::size_t k = 0; k < m; ++k) {
                    if (k != i) jac(r, var(k, xc)) += coef * s_.device(k).cycle_rate();
                }
            }
        }
    }

    void add_nonlinear_hessians(const Vector& x, const Vector& w, Matrix& hess) const override {
        const auto& st = state(x);
        const std::size_t m = s_.num_devices();
        const std::size_t n = s_.num_osps();
        std::vector<double> u(m, 0.0);
        Vector dummy = Vector::Zero(dim());
        for (std::size_t c = 0; c < cap_devices_.size(); ++c) {
            const std::size_t i = cap_devices_[c];
            const DeviceParams& d = s_.device(i);
            const auto& rd = st.rd[i];
            const auto base = static_cast<barrier::Index>(i * n);
            const auto nn = static_cast<barrier::Index>(n);
            const double wd = w[static_cast<barrier::Index>(3 * c)];
            const double we = w[static_cast<barrier::Index>(3 * c + 1)];
            hess.block(base, base, nn, nn) += wd / d.d_max * rd.hess_delay + we / d.e_max * rd.hess_energy;
            u[i] = d.c / d.d_max;
            for (std::size_t xc = 0; xc < n; ++xc) {
                if (!s_.osp(xc).is_edge()) continue;
                add_edge_terms(st, xc, u, wd, dummy, hess, [&](std::size_t k) { return k == i ? 1.0 / d.d_max : 0.0; },
                               false);
            }
            u[i] = 0.0;
        }
    }

    barrier::Index var(std::size_t i, std::size_t j) const {
        return static_cast<barrier::Index>(i * s_.num_osps() + j);
    }

    StrategyProfile to_profile(const Vector& x) const {
        StrategyProfile a(s_.num_devices(), s_.num_osps());
        for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] = x[static_cast<barrier::Index>(k)];
        return a;
    }

    Vector from_profile(const StrategyProfile& a) const {
        Vector x(dim());
        for (std::size_t k = 0; k < a.data().size(); ++k) x[static_cast<barrier::Index>(k)] = a.data()[k];
        return x;
    }

private:
    struct State {
        std::vector<RowDerivatives> rd;
        std::vector<double> free;  // f_x - L_x per edge (0 on cloud columns)
        std::vector<double> a_sum;  // scratch
    };

    const State& state(const Vector& x) const {
        if (cached_ && cached_x_.size() == x.size() && cached_x_ == x) return st_;
        const StrategyProfile a = to_profile(x);
        const auto load = osp_loads(s_, a);
        const std::size_t m = s_.num_devices();
        const std::size_t n = s_.num_osps();
        st_.rd.resize(m);
        std::vector<double> others(n);
        for (std::size_t i = 0; i < m; ++i) {
            const double v = s_.device(i).cycle_rate();
            for (std::size_t j = 0; j < n; ++j) others[j] = load[j] - a(i, j) * v;
            st_.rd[i] = row_derivatives(s_, i, a.row(i), others, prices_);
        }
        st_.free.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (s_.osp(j).is_edge()) st_.free[j] = s_.osp(j).f_osp - load[j];
        }
        cached_x_ = x;
        cached_ = true;
        return st_;
    }

    // Adds the derivatives of  sum_k u_k a_kx / (f_x - L_x)  on edge column x, scaled by `scale`,
    // minus the own-row edge curvature already contained in the per-device blocks (weighted by
    // own_weight(k), the factor that multiplied device k's delay in those blocks). With
    // `with_grad`, the cross-device gradient is added as well.
    template <class OwnWeight>
    void add_edge_terms(const State& st, std::size_t xc, const std::vector<double>& u, double scale, Vector& grad,
                        Matrix& hess, OwnWeight own_weight, bool with_grad = true) const {
        const std::size_t m = s_.num_devices();
        const double free = st.free[xc];
        const double f2 = free * free;
        const double f3 = f2 * free;
        double a_sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) a_sum += u[k] * cached_x_[var(k, xc)];
        for (std::size_t k = 0; k < m; ++k) {
            const double vk = s_.device(k).cycle_rate();
            const barrier::Index ik = var(k, xc);
            if (with_grad) grad[ik] += scale * (a_sum - u[k] * cached_x_[ik]) * vk / f2;
            for (std::size_t l = 0; l < m; ++l) {
                const double vl = s_.device(l).cycle_rate();
                hess(ik, var(l, xc)) += scale * ((u[k] * vl + u[l] * vk) / f2 + 2.0 * a_sum * vk * vl / f3);
            }
            const double ow = own_weight(k);
            if (ow != 0.0) hess(ik, ik) -= scale * ow * st.rd[k].curvature.psi[static_cast<barrier::Index>(xc)];
        }
    }

    const SystemScenario& s_;
    PriceVector prices_;
    std::vector<bool> capped_;
    std::vector<std::size_t> cap_devices_;
    barrier::SparseMatrix a_;
    Vector b_;
    mutable State st_;
    mutable Vector cached_x_;
    mutable bool cached_ = false;
};

struct SocialParams {
    int restarts = 4;  // seeded random starts, in addition to any extra starts
    std::uint64_t seed = 1;
    SolverParams solver;
};

struct SocialResult {
    StrategyProfile profile;
    double objective = std::numeric_limits<double>::infinity();  // mean disutility
    std::vector<double> start_objectives;  // per start (extra starts first); +inf when the start failed
    std::size_t best_start = 0;
    std::vector<bool> capped;  // devices whose C6-C8 were enforced

    double spread() const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (double v : start_objectives) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi >= lo ? hi - lo : 0.0;
    }
};

/// Devices that can meet their delay, energy and payment caps with every edge server idle. The
/// planner enforces C6-C8 for these devices only.
inline std::vector<bool> cap_feasible_devices(const SystemScenario& s, const PriceVector& prices,
                                              const SolverParams& solver = {}) {
    std::vector<bool> out(s.num_devices(), false);
    const std::vector<double> zeros(s.num_osps(), 0.0);
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        try {
            solve_proximal(s, i, zeros, prices, zeros, 0.0, solver);
            out[i] = true;
        } catch (const Error&) {
        }
    }
    return out;
}

namespace detail {

inline StrategyProfile random_start(const SystemScenario& s, std::uint64_t seed, std::size_t restart) {
    StrategyProfile a(s.num_devices(), s.num_osps());
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        rng::Substream st(seed, rng::Stream::Restart, restart, i);
        const double total = st.uniform();
        std::vector<double> w(s.num_osps());
        double sum = 0.0;
        for (double& v : w) sum += (v = st.uniform() + 1e-12);
        for (std::size_t j = 0; j < s.num_osps(); ++j) a(i, j) = total * w[j] / sum;
    }
    return a;
}

}  // namespace detail

/// Planner's problem: minimize the mean disutility over the joint profile from each of
/// `extra_starts` and `params.restarts` seeded random starts, returning the best local optimum.
/// Every start is pulled slightly inside the box and repaired with phase-1 solves when needed.
/// Throws NoConvergence when no start yields a solution.
inline SocialResult socially_optimal(const SystemScenario& s, const PriceVector& prices, const SocialParams& params = {},
                                     const std::vector<StrategyProfile>& extra_starts = {}) {
    SocialResult res;
    res.capped = cap_feasible_devices(s, prices, params.solver);
    SocialProblem prob(s, prices, res.capped, params.solver.delta_stab);
    const barrier::Options opt = params.solver.barrier_options();

    std::vector<StrategyProfile> starts = extra_starts;
    for (int r = 0; r < params.restarts; ++r) starts.push_back(detail::random_start(s, params.seed, static_cast<std::size_t>(r)));

    Vector interior = Vector::Constant(prob.dim(), 1e-3);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        double value = std::numeric_limits<double>::infinity();
        try {
            Vector x = 0.99 * prob.from_profile(starts[k]) + 0.01 * interior;
            const Vector slack = prob.lin_b() - prob.lin_a() * x;
            if (!(slack.array() > 0.0).all()) x = barrier::find_interior(prob, x, true, false, 1e-6, opt);
            Vector h;
            bool caps_ok = false;
            try {
                caps_ok = prob.nonlinear_values(x, h) && (h.array() < 0.0).all();
            } catch (const StabilityViolation&) {
            }
            if (!caps_ok && prob.num_nonlinear() > 0) x = barrier::find_interior(prob, x, false, true, 1e-3, opt);
            const barrier::Result r = barrier::minimize(prob, x, opt);
            const StrategyProfile a = prob.to_profile(r.x);
            value = mean_disutility(s, a, prices);
            if (value < res.objective) {
                res.objective = value;
                res.profile = a;
                res.best_start = k;
            }
        } catch (const Error&) {
        }
        res.start_objectives.push_back(value);
    }
    if (!std::isfinite(res.objective)) throw NoConvergence("social optimum: every start failed");
    return res;
}

struct PoaReport {
    double avg_ne = 0.0;
    double avg_so = 0.0;
    double poa = 0.0;
    bool ne_converged = false;
    int ne_iterations = 0;
    double so_spread = 0.0;
    StrategyProfile ne_profile;
    StrategyProfile so_profile;
};

/// Price of anarchy: mean disutility at the IPOA equilibrium over the planner's optimum. The
/// equilibrium is also handed to the planner as a start.
inline PoaReport poa(const SystemScenario& s, const PriceVector& prices, const IpoaParams& ipoa_params = {},
                     const SocialParams& so_params = {}) {
    PoaReport rep;
    const IpoaResult ne = ipoa(s, prices, ipoa_params);
    const SocialResult so = socially_optimal(s, prices, so_params, {ne.profile});
    rep.avg_ne = mean_disutility(s, ne.profile, prices);
    rep.avg_so = so.objective;
    rep.poa = rep.avg_ne / rep.avg_so;
    rep.ne_converged = ne.converged;
    rep.ne_iterations = ne.iterations;
    rep.so_spread = so.spread();
    rep.ne_profile = ne.profile;
    rep.so_profile = so.profile;
    return rep;
}

}  // namespace mecgame
