#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mecgame/errors.hpp"

// Log-barrier interior-point method with damped Newton centering steps.
//
// Problems are  min f(x)  s.t.  A x < b  (linear, strict)  and  h_k(x) < 0  (smooth).
// Linear rows must hold at the starting point; PhaseOne finds such a point when they do not.
namespace mecgame::barrier {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

class Problem {
public:
    virtual ~Problem() = default;

    virtual Index dim() const = 0;
    virtual const SparseMatrix& lin_a() const = 0;
    virtual const Vector& lin_b() const = 0;

    /// Objective value; false when x lies outside the objective's domain.
    virtual bool objective(const Vector& x, double& f) const = 0;
    virtual void objective_derivatives(const Vector& x, Vector& grad, Matrix& hess) const = 0;

    virtual Index num_nonlinear() const { return 0; }
    /// Values h_k(x); false when they cannot be evaluated at x.
    virtual bool nonlinear_values(const Vector& /*x*/, Vector& h) const {
        h.resize(0);
        return true;
    }
    /// Row k of `jac` is grad h_k(x).
    virtual void nonlinear_jacobian(const Vector& x, Matrix& jac) const { jac.resize(0, x.size()); }
    /// hess += sum_k weights[k] * hess h_k(x).
    virtual void add_nonlinear_hessians(const Vector& /*x*/, const Vector& /*weights*/, Matrix& /*hess*/) const {}

    Index num_constraints() const { return lin_a().rows() + num_nonlinear(); }
};

struct Options {
    double t0 = 1.0;
    double mu = 10.0;
    double tol = 1e-8;          // stop when m / t <= tol
    int max_newton_iters = 2000;  // across all centering steps
    double centering_tol = 1e-12;  // Newton decrement^2 / 2
};

struct Result {
    Vector x;
    double t = 0.0;
    double gap = 0.0;           // m / t
    double stationarity = 0.0;  // ||grad f + sum lambda_k grad g_k||_inf with lambda_k = 1/(t slack_k)
    int newton_iterations = 0;
    bool stopped_early = false;
};

namespace detail {

struct Evaluation {
    bool ok = false;
    double f = 0.0;
    double phi = 0.0;
    Vector slack;  // b - A x
    Vector h;      // nonlinear values (< 0)
};

inline Evaluation evaluate(const Problem& p, const Vector& x, double t) {
    Evaluation e;
    e.slack = p.lin_b() - p.lin_a() * x;
    if (!(e.slack.array() > 0.0).all()) return e;
    try {
        if (!p.nonlinear_values(x, e.h)) return e;
        if (e.h.size() > 0 && !(e.h.array() < 0.0).all()) return e;
        if (!p.objective(x, e.f) || !std::isfinite(e.f)) return e;
    } catch (const StabilityViolation&) {
        return e;
    }
    double phi = t * e.f - e.slack.array().log().sum();
    if (e.h.size() > 0) phi -= (-e.h.array()).log().sum();
    if (!std::isfinite(phi)) return e;
    e.phi = phi;
    e.ok = true;
    return e;
}

/// Solve H d = -g, shifting the diagonal until the factorization succeeds (non-convex objectives).
inline Vector newton_direction(const Matrix& hess, const Vector& grad) {
    const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    double shift = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Matrix h = hess;
        if (shift > 0.0) h.diagonal().array() += shift;
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() == Eigen::Success) {
            Vector d = llt.solve(-grad);
            if (d.allFinite()) return d;
        }
        shift = shift == 0.0 ? 1e-12 * scale : shift * 10.0;
    }
    return -grad / scale;
}

}  // namespace detail

/// Runs the barrier method from a point satisfying every constraint strictly.
/// `early_stop(x)` is polled after each Newton step.
template <class EarlyStop>
Result minimize(const Problem& p, Vector x, const Options& opt, EarlyStop early_stop) {
    const SparseMatrix& a = p.lin_a();
    const Index m = p.num_constraints();
    double t = opt.t0;
    Result res;

    auto e = detail::evaluate(p, x, t);
    if (!e.ok) throw InfeasibleSubproblem("barrier start point is not strictly feasible");

    Vector grad_f, grad;
    Matrix hess_f, hess, jac;
    auto assemble = [&](const detail::Evaluation& ev) {
        p.objective_derivatives(x, grad_f, hess_f);
        const Vector inv = ev.slack.cwiseInverse();
        grad = t * grad_f + a.transpose() * inv;
        hess = t * hess_f;
        for (Index r = 0; r < a.outerSize(); ++r) {
            const double w = inv[r] * inv[r];
            for (SparseMatrix::InnerIterator i1(a, r); i1; ++i1) {
                for (SparseMatrix::InnerIterator i2(a, r); i2; ++i2) hess(i1.col(), i2.col()) += w * i1.value() * i2.value();
            }
        }
        if (ev.h.size() > 0) {
            p.nonlinear_jacobian(x, jac);
            const Vector ninv = (-ev.h).cwiseInverse();
            grad.noalias() += jac.transpose() * ninv;
            hess.noalias() += jac.transpose() * ninv.cwiseProduct(ninv).asDiagonal() * jac;
            p.add_nonlinear_hessians(x, ninv, hess);
        }
    };

    for (;;) {
        // Centering at the current t. Steps accepted only through the round-off allowance count as
        // stalls; a few in a row end the centering.
        int stalls = 0;
        for (;;) {
            e = detail::evaluate(p, x, t);
            assemble(e);
            const Vector dx = detail::newton_direction(hess, grad);
            const double slope = grad.dot(dx);
            if (-slope / 2.0 <= opt.centering_tol || slope >= 0.0) break;

            double step = 1.0;
            const Vector adx = a * dx;
            for (Index k = 0; k < adx.size(); ++k) {
                if (adx[k] > 0.0) step = std::min(step, 0.99 * e.slack[k] / adx[k]);
            }
            const double slack_tol = 1e-13 * std::max(1.0, std::abs(e.phi));
            bool moved = false;
            while (step > 1e-14) {
                const Vector xn = x + step * dx;
                const auto en = detail::evaluate(p, xn, t);
                if (en.ok && en.phi <= e.phi + 0.25 * step * slope + slack_tol) {
                    x = xn;
                    moved = true;
                    stalls = en.phi < e.phi - slack_tol ? 0 : stalls + 1;
                    break;
                }
                step *= 0.5;
            }
            if (++res.newton_iterations > opt.max_newton_iters) {
                throw NoConvergence("barrier method exceeded " + std::to_string(opt.max_newton_iters) +
                                    " Newton iterations");
            }
            if (!moved || stalls >= 3) break;
            if (early_stop(x)) {
                res.stopped_early = true;
                res.x = x;
                res.t = t;
                res.gap = static_cast<double>(m) / t;
                return res;
            }
        }
        if (static_cast<double>(m) / t <= opt.tol) break;
        t *= opt.mu;
    }

    e = detail::evaluate(p, x, t);
    assemble(e);
    res.x = x;
    res.t = t;
    res.gap = static_cast<double>(m) / t;
    res.stationarity = grad.cwiseAbs().maxCoeff() / t;
    return res;
}

inline Result minimize(const Problem& p, Vector x, const Options& opt) {
    return minimize(p, std::move(x), opt, [](const Vector&) { return false; });
}

/// Feasibility problem over (x, s):  min s  s.t.  A x - s <= b  (when soft_linear)  and
/// h_k(x) - s <= 0  (when soft_nonlinear). Constraints not softened stay hard; nonlinear
/// constraints are dropped entirely when `use_nonlinear` is false.
class PhaseOne final : public Problem {
public:
    PhaseOne(const Problem& base, bool soft_linear, bool use_nonlinear)
        : base_(base), soft_linear_(soft_linear), use_nonlinear_(use_nonlinear) {
        const SparseMatrix& a = base.lin_a();
        const Index n = base.dim();
        std::vector<Eigen::Triplet<double>> trip;
        for (Index r = 0; r < a.outerSize(); ++r) {
            for (SparseMatrix::InnerIterator it(a, r); it; ++it) trip.emplace_back(r, it.col(), it.value());
            if (soft_linear_) trip.emplace_back(r, n, -1.0);
        }
        a_.resize(a.rows(), n + 1);
        a_.setFromTriplets(trip.begin(), trip.end());
        b_ = base.lin_b();
    }

    Index dim() const override { return base_.dim() + 1; }
    const SparseMatrix& lin_a() const override { return a_; }
    const Vector& lin_b() const override { return b_; }

    bool objective(const Vector& x, double& f) const override {
        f = x[x.size() - 1];
        return true;
    }
    void objective_derivatives(const Vector& x, Vector& grad, Matrix& hess) const override {
        grad = Vector::Zero(x.size());
        grad[x.size() - 1] = 1.0;
        hess = Matrix::Zero(x.size(), x.size());
    }

    Index num_nonlinear() const override { return use_nonlinear_ ? base_.num_nonlinear() : 0; }
    bool nonlinear_values(const Vector& x, Vector& h) const override {
        if (!use_nonlinear_) {
            h.resize(0);
            return true;
        }
        if (!base_.nonlinear_values(x.head(base_.dim()), h)) return false;
        h.array() -= x[x.size() - 1];
        return true;
    }
    void nonlinear_jacobian(const Vector& x, Matrix& jac) const override {
        if (!use_nonlinear_) {
            jac.resize(0, x.size());
            return;
        }
        Matrix base_jac;
        base_.nonlinear_jacobian(x.head(base_.dim()), base_jac);
        jac.resize(base_jac.rows(), x.size());
        jac.leftCols(base_.dim()) = base_jac;
        jac.col(x.size() - 1).setConstant(-1.0);
    }
    void add_nonlinear_hessians(const Vector& x, const Vector& w, Matrix& hess) const override {
        if (!use_nonlinear_) return;
        const Index n = base_.dim();
        Matrix block = Matrix::Zero(n, n);
        base_.add_nonlinear_hessians(x.head(n), w, block);
        hess.topLeftCorner(n, n) += block;
    }

    /// Start point (x0, s0) with s0 one unit above the largest violation.
    Vector start(const Vector& x0) const {
        double worst = soft_linear_ ? (base_.lin_a() * x0 - base_.lin_b()).maxCoeff() : -1.0;
        if (use_nonlinear_ && base_.num_nonlinear() > 0) {
            Vector h;
            if (!base_.nonlinear_values(x0, h)) throw InfeasibleSubproblem("constraints undefined at start point");
            worst = std::max(worst, h.maxCoeff());
        }
        Vector out(x0.size() + 1);
        out.head(x0.size()) = x0;
        out[x0.size()] = std::max(worst, 0.0) + 1.0;
        return out;
    }

private:
    const Problem& base_;
    bool soft_linear_;
    bool use_nonlinear_;
    SparseMatrix a_;
    Vector b_;
};

/// Drives x0 to a point where every softened constraint holds with slack at least `target`.
/// Throws InfeasibleSubproblem when the best achievable slack is not positive.
inline Vector find_interior(const Problem& base, const Vector& x0, bool soft_linear, bool use_nonlinear,
                            double target, const Options& opt) {
    PhaseOne p1(base, soft_linear, use_nonlinear);
    const Index last = base.dim();
    Options o = opt;
    o.tol = 1e-10;
    Result r = minimize(p1, p1.start(x0), o, [&](const Vector& x) { return x[last] <= -target; });
    if (!(r.x[last] < 0.0)) {
        throw InfeasibleSubproblem("no strictly feasible point (best violation " + std::to_string(r.x[last]) + ")");
    }
    return r.x.head(last);
}

}  // namespace mecgame::barrier
