#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mecgame/barrier.hpp"
#include "mecgame/derivatives.hpp"
#include "mecgame/model.hpp"

namespace mecgame {

struct SolverParams {
    double barrier_t0 = 1.0;
    double barrier_mu = 10.0;
    double tol_kkt = 1e-8;
    int max_newton_iters = 2000;
    double delta_stab = kDefaultDeltaStab;
    double start_value = 1e-6;  // initial entry of every free column
    bool enforce_caps = true;   // include C6-C8; off only for devices whose caps cannot all hold
    double warm_t0 = 1e6;       // barrier parameter when starting next to beta; 0 disables warm starts

    barrier::Options barrier_options() const {
        barrier::Options o;
        o.t0 = barrier_t0;
        o.mu = barrier_mu;
        o.tol = tol_kkt;
        o.max_newton_iters = max_newton_iters;
        return o;
    }
};

struct ProximalSolution {
    std::vector<double> row;    // length N
    double stationarity = 0.0;  // Lagrangian gradient norm with barrier multipliers
    double gap = 0.0;           // complementarity m / t
    int newton_iterations = 0;

    double kkt_residual() const { return std::max(stationarity, gap); }
};

/// Device i's proximally regularized best-response problem
///   min U_i(row, others) + tau/2 |row - beta|^2   s.t. C1-C8
/// expressed over the columns that can carry load.
class DeviceProblem final : public barrier::Problem {
public:
    DeviceProblem(const SystemScenario& s, std::size_t i, std::span<const double> others_load,
                  const PriceVector& prices, std::span<const double> beta, double tau, double delta_stab,
                  bool caps = true)
        : s_(s), i_(i), others_(others_load.begin(), others_load.end()), prices_(prices),
          beta_(beta.begin(), beta.end()), tau_(tau), caps_(caps), full_(s.num_osps(), 0.0) {
        const DeviceParams& d = s.device(i);
        const double limit = 1.0 - delta_stab;
        const double v = d.cycle_rate();
        for (std::size_t j = 0; j < s.num_osps(); ++j) {
            const OspParams& o = s.osp(j);
            if (o.is_edge() && (limit * o.f_osp - others_[j]) / o.f_osp <= 1e-9) continue;
            free_.push_back(j);
        }
        const auto n = static_cast<barrier::Index>(free_.size());
        std::vector<Eigen::Triplet<double>> trip;
        std::vector<double> rhs;
        auto add_row = [&](std::vector<std::pair<barrier::Index, double>> coeffs, double b) {
            const auto r = static_cast<int>(rhs.size());
            for (auto [col, val] : coeffs) trip.emplace_back(r, col, val);
            rhs.push_back(b);
        };
        for (barrier::Index k = 0; k < n; ++k) add_row({{k, -1.0}}, 0.0);  // C2 lower
        std::vector<std::pair<barrier::Index, double>> all;
        for (barrier::Index k = 0; k < n; ++k) all.emplace_back(k, 1.0);
        add_row(all, 1.0);  // C1
        const double local_util = v / d.f_md;
        if (local_util > limit) {  // C3 can bind: (1 - s) v / f_md <= limit
            auto row = all;
            for (auto& [col, val] : row) val = -local_util;
            add_row(row, limit - local_util);
        }
        const double tx_coeff = d.lambda * d.z / s.rate(i);
        if (tx_coeff > limit) {  // C4
            auto row = all;
            for (auto& [col, val] : row) val = tx_coeff;
            add_row(row, limit);
        }
        for (barrier::Index k = 0; k < n; ++k) {  // C5 on edges that could saturate
            const OspParams& o = s.osp(free_[static_cast<std::size_t>(k)]);
            if (!o.is_edge()) continue;
            const double room = limit - others_[free_[static_cast<std::size_t>(k)]] / o.f_osp;
            if (v / o.f_osp > room) add_row({{k, v / o.f_osp}}, room);
        }
        a_.resize(static_cast<barrier::Index>(rhs.size()), n);
        a_.setFromTriplets(trip.begin(), trip.end());
        b_ = Eigen::Map<const Vector>(rhs.data(), static_cast<barrier::Index>(rhs.size()));
    }

    barrier::Index dim() const override { return static_cast<barrier::Index>(free_.size()); }
    const barrier::SparseMatrix& lin_a() const override { return a_; }
    const Vector& lin_b() const override { return b_; }

    bool objective(const Vector& x, double& f) const override {
        expand(x);
        f = device_costs(s_, i_, full_, others_, prices_).disutility + prox_value();
        return true;
    }

    void objective_derivatives(const Vector& x, Vector& grad, Matrix& hess) const override {
        const RowDerivatives& rd = derivs(x);
        const auto n = dim();
        grad.resize(n);
        hess.resize(n, n);
        for (barrier::Index a = 0; a < n; ++a) {
            const auto ja = static_cast<barrier::Index>(free_[static_cast<std::size_t>(a)]);
            grad[a] = rd.grad_disutility[ja] + tau_ * (x[a] - beta_[static_cast<std::size_t>(ja)]);
            for (barrier::Index b = 0; b < n; ++b) {
                hess(a, b) = rd.hess_disutility(ja, static_cast<barrier::Index>(free_[static_cast<std::size_t>(b)]));
            }
            hess(a, a) += tau_;
        }
    }

    barrier::Index num_nonlinear() const override { return caps_ ? 3 : 0; }

    bool nonlinear_values(const Vector& x, Vector& h) const override {
        if (!caps_) {
            h.resize(0);
            return true;
        }
        expand(x);
        const DeviceParams& d = s_.device(i_);
        const CostBreakdown cb = device_costs(s_, i_, full_, others_, prices_);
        h.resize(3);
        h << cb.delay / d.d_max - 1.0, cb.energy / d.e_max - 1.0, cb.payment / d.p_max - 1.0;
        return h.allFinite();
    }

    void nonlinear_jacobian(const Vector& x, Matrix& jac) const override {
        if (!caps_) {
            jac.resize(0, dim());
            return;
        }
        const RowDerivatives& rd = derivs(x);
        const DeviceParams& d = s_.device(i_);
        const auto n = dim();
        jac.resize(3, n);
        for (barrier::Index a = 0; a < n; ++a) {
            const auto ja = static_cast<barrier::Index>(free_[static_cast<std::size_t>(a)]);
            jac(0, a) = rd.grad_delay[ja] / d.d_max;
            jac(1, a) = rd.grad_energy[ja] / d.e_max;
            jac(2, a) = rd.grad_payment[ja] / d.p_max;
        }
    }

    void add_nonlinear_hessians(const Vector& x, const Vector& w, Matrix& hess) const override {
        if (!caps_) return;
        const RowDerivatives& rd = derivs(x);
        const DeviceParams& d = s_.device(i_);
        const auto n = dim();
        for (barrier::Index a = 0; a < n; ++a) {
            const auto ja = static_cast<barrier::Index>(free_[static_cast<std::size_t>(a)]);
            for (barrier::Index b = 0; b < n; ++b) {
                const auto jb = static_cast<barrier::Index>(free_[static_cast<std::size_t>(b)]);
                hess(a, b) += w[0] * rd.hess_delay(ja, jb) / d.d_max + w[1] * rd.hess_energy(ja, jb) / d.e_max;
            }
        }
    }

    /// Embeds a reduced point into a full length-N row (fixed columns at zero).
    std::vector<double> full_row(const Vector& x) const {
        expand(x);
        return full_;
    }

    Vector start_point(double value) const { return Vector::Constant(dim(), value); }

    /// Restriction of a full length-N row to the free columns.
    Vector reduce(std::span<const double> row) const {
        Vector x(dim());
        for (std::size_t k = 0; k < free_.size(); ++k) x[static_cast<barrier::Index>(k)] = row[free_[k]];
        return x;
    }

    ProximalSolution finish(const barrier::Result& r) const {
        ProximalSolution out;
        out.row = full_row(r.x);
        out.stationarity = r.stationarity;
        out.gap = r.gap;
        out.newton_iterations = r.newton_iterations;
        return out;
    }

private:
    void expand(const Vector& x) const {
        std::fill(full_.begin(), full_.end(), 0.0);
        for (std::size_t k = 0; k < free_.size(); ++k) full_[free_[k]] = x[static_cast<barrier::Index>(k)];
    }

    // Uses the row last written by expand().
    double prox_value() const {
        double acc = 0.0;
        for (std::size_t j = 0; j < full_.size(); ++j) {
            const double dlt = full_[j] - beta_[j];
            acc += dlt * dlt;
        }
        return 0.5 * tau_ * acc;
    }

    const RowDerivatives& derivs(const Vector& x) const {
        if (cached_ && cached_x_.size() == x.size() && cached_x_ == x) return cache_;
        expand(x);
        cache_ = row_derivatives(s_, i_, full_, others_, prices_);
        cached_x_ = x;
        cached_ = true;
        return cache_;
    }

    const SystemScenario& s_;
    std::size_t i_;
    std::vector<double> others_;
    PriceVector prices_;
    std::vector<double> beta_;
    double tau_;
    bool caps_;
    std::vector<std::size_t> free_;
    barrier::SparseMatrix a_;
    Vector b_;
    mutable std::vector<double> full_;
    mutable RowDerivatives cache_;
    mutable Vector cached_x_;
    mutable bool cached_ = false;
};

/// Proximal best response of device i against the loads others place on each OSP.
///
/// Starts from the near-zero row, restores strict feasibility of the linear constraints and of the
/// delay/energy/payment caps with phase-1 solves when needed, then runs the barrier method.
/// Throws InfeasibleSubproblem or NoConvergence.
inline ProximalSolution solve_proximal(const SystemScenario& s, std::size_t i, std::span<const double> others_load,
                                       const PriceVector& prices, std::span<const double> beta, double tau,
                                       const SolverParams& params = {}) {
    DeviceProblem prob(s, i, others_load, prices, beta, tau, params.delta_stab, params.enforce_caps);
    const barrier::Options opt = params.barrier_options();
    if (prob.dim() == 0) {
        ProximalSolution out;
        out.row.assign(s.num_osps(), 0.0);
        Vector h;
        prob.nonlinear_values(Vector(), h);
        if ((h.array() >= 0.0).any()) throw InfeasibleSubproblem("device " + std::to_string(i) + ": no usable OSP");
        return out;
    }
    if (params.warm_t0 > 0.0 && tau > 0.0) {
        // Beta is usually within a small step of the solution: start there, nudged inside.
        Vector x = prob.start_point(params.start_value);
        const Vector b = prob.reduce(beta);
        x = 0.999 * b + 0.001 * x;
        barrier::Options warm = opt;
        warm.t0 = std::max(opt.t0, params.warm_t0);
        try {
            return prob.finish(barrier::minimize(prob, x, warm));
        } catch (const InfeasibleSubproblem&) {
            // beta is outside the feasible set; fall through to the cold start
        }
    }
    Vector x = prob.start_point(params.start_value);
    const Vector slack = prob.lin_b() - prob.lin_a() * x;
    if (!(slack.array() > 0.0).all()) x = barrier::find_interior(prob, x, true, false, 1e-6, opt);
    Vector h;
    bool caps_ok = false;
    try {
        caps_ok = prob.nonlinear_values(x, h) && (h.array() < 0.0).all();
    } catch (const StabilityViolation&) {
        throw InfeasibleSubproblem("device " + std::to_string(i) + ": start point saturates a queue");
    }
    if (!caps_ok && prob.num_nonlinear() > 0) x = barrier::find_interior(prob, x, false, true, 1e-3, opt);

    return prob.finish(barrier::minimize(prob, x, opt));
}

/// Convenience overload: others' loads are taken from `profile` (row i is ignored).
inline ProximalSolution solve_proximal(const SystemScenario& s, std::size_t i, const StrategyProfile& profile,
                                       const PriceVector& prices, std::span<const double> beta, double tau,
                                       const SolverParams& params = {}) {
    const auto others = osp_loads(s, profile, i);
    return solve_proximal(s, i, others, prices, beta, tau, params);
}

}  // namespace mecgame
