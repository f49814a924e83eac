#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "mecgame/derivatives.hpp"
#include "mecgame/rng.hpp"

namespace mecgame {

struct ValidationReport {
    int points = 0;
    double max_grad_rel_err = 0.0;
    double max_hess_rel_err = 0.0;
    double min_eigenvalue = 0.0;
    bool passed = false;
};

/// Random profile strictly inside C1-C5, shrinking rows toward all-local until it is.
inline StrategyProfile random_interior_profile(const SystemScenario& s, rng::Substream& st, double delta_stab = 1e-3) {
    StrategyProfile a(s.num_devices(), s.num_osps());
    for (std::size_t i = 0; i < s.num_devices(); ++i) {
        const double total = st.uniform(0.05, 0.95);
        std::vector<double> w(s.num_osps());
        double sum = 0.0;
        for (double& v : w) sum += (v = st.uniform(0.05, 1.0));
        for (std::size_t j = 0; j < s.num_osps(); ++j) a(i, j) = total * w[j] / sum;
    }
    for (int k = 0; k < 60; ++k) {
        if (check_feasible(s, a, PriceVector::floors(s), {delta_stab, false}).stable()) return a;
        for (double& v : a.data()) v *= 0.7;
    }
    throw InvalidScenario("no interior profile found");
}

/// Compares analytic gradients and Hessians of the disutility with central differences and checks
/// the Hessian's smallest eigenvalue at `points` random interior profiles (device picked uniformly).
inline ValidationReport validate_derivatives(const SystemScenario& s, const PriceVector& prices, int points,
                                             std::uint64_t seed, double grad_tol = 1e-5, double hess_tol = 1e-4,
                                             double psd_tol = -1e-9) {
    ValidationReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    const std::size_t n = s.num_osps();
    for (int k = 0; k < points; ++k) {
        rng::Substream st(seed, rng::Stream::Experiment, static_cast<std::uint64_t>(k), 0);
        const StrategyProfile a = random_interior_profile(s, st);
        const auto i = static_cast<std::size_t>(st.uniform() * static_cast<double>(s.num_devices())) % s.num_devices();
        const RowDerivatives rd = row_derivatives(s, i, a, prices);
        const auto others = osp_loads(s, a, i);
        std::vector<double> row(a.row(i).begin(), a.row(i).end());

        Vector fd(static_cast<Eigen::Index>(n));
        Matrix fh(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 1e-6;
            auto plus = row;
            auto minus = row;
            plus[j] += h;
            minus[j] -= h;
            const double up = device_costs(s, i, plus, others, prices).disutility;
            const double dn = device_costs(s, i, minus, others, prices).disutility;
            fd[static_cast<Eigen::Index>(j)] = (up - dn) / (2.0 * h);
            const double hh = 1e-5;
            plus = row;
            minus = row;
            plus[j] += hh;
            minus[j] -= hh;
            const Vector gp = row_derivatives(s, i, plus, others, prices).grad_disutility;
            const Vector gm = row_derivatives(s, i, minus, others, prices).grad_disutility;
            fh.col(static_cast<Eigen::Index>(j)) = (gp - gm) / (2.0 * hh);
        }
        const double gscale = std::max(rd.grad_disutility.cwiseAbs().maxCoeff(), 1e-12);
        const double hscale = std::max(rd.hess_disutility.cwiseAbs().maxCoeff(), 1e-12);
        rep.max_grad_rel_err = std::max(rep.max_grad_rel_err, (fd - rd.grad_disutility).cwiseAbs().maxCoeff() / gscale);
        rep.max_hess_rel_err = std::max(rep.max_hess_rel_err, (fh - rd.hess_disutility).cwiseAbs().maxCoeff() / hscale);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(rd.hess_disutility, Eigen::EigenvaluesOnly);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, eig.eigenvalues().minCoeff());
        ++rep.points;
    }
    rep.passed = rep.max_grad_rel_err <= grad_tol && rep.max_hess_rel_err <= hess_tol && rep.min_eigenvalue >= psd_tol;
    return rep;
}

}  // namespace mecgame
