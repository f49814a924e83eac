#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>

#include "mecgame/model.hpp"

namespace mecgame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Gamma_i, Upsilon_i and Psi_{i,x}: the curvature of the local queue, the wireless queue and
/// each edge queue with respect to device i's own offloading row.
struct CurvatureTerms {
    double gamma = 0.0;
    double upsilon = 0.0;
    Vector psi;  // zero on cloud columns
};

/// Value, gradient and Hessian in device i's own row for delay, energy, payment and the weighted
/// disutility.
struct RowDerivatives {
    CostBreakdown costs;
    Vector grad_delay, grad_energy, grad_payment, grad_disutility;
    Matrix hess_delay, hess_energy, hess_disutility;  // payment Hessian is identically zero
    CurvatureTerms curvature;
};

/// Derivatives of device i's costs at `row`, given the load others put on each OSP.
inline RowDerivatives row_derivatives(const SystemScenario& s, std::size_t i, std::span<const double> row,
                                      std::span<const double> others_load, const PriceVector& prices) {
    const std::size_t n = s.num_osps();
    const DeviceParams& d = s.device(i);
    const double r = s.rate(i);
    const double s2 = s.service_second_moment(i);
    const double v = d.cycle_rate();

    RowDerivatives out;
    out.costs = device_costs(s, i, row, others_load, prices);  // also validates stability

    const double total = detail::sum(row);
    const double local_den = d.f_md - (1.0 - total) * v;
    const double q = 1.0 - d.lambda * d.z * total / r;
    const double w = d.lambda * s2 * total / (2.0 * q) + d.z / r;

    // d/dx of (1 - total) * c / L and of total * W; identical for every column x.
    const double dlocal = -d.c / local_den - (1.0 - total) * d.lambda * d.c * d.c / (local_den * local_den);
    const double dwireless = w + total * d.lambda * s2 / (2.0 * q * q);

    CurvatureTerms& ct = out.curvature;
    ct.gamma = 2.0 * d.lambda * d.c * d.c / (local_den * local_den) +
               (1.0 - total) * 2.0 * d.lambda * d.lambda * d.c * d.c * d.c / (local_den * local_den * local_den);
    ct.upsilon = d.lambda * s2 / (q * q) + total * d.z * s2 * d.lambda * d.lambda / (r * q * q * q);
    ct.psi = Vector::Zero(static_cast<Eigen::Index>(n));

    out.grad_delay.resize(static_cast<Eigen::Index>(n));
    out.grad_energy.resize(static_cast<Eigen::Index>(n));
    out.grad_payment.resize(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
        const auto xi = static_cast<Eigen::Index>(x);
        const OspParams& o = s.osp(x);
        double off = 0.0;
        double doff = 0.0;
        if (o.is_edge()) {
            const double free = o.f_osp - others_load[x] - row[x] * v;
            off = d.c / free;
            doff = off + row[x] * d.c * v / (free * free);
            ct.psi[xi] = 2.0 * d.lambda * d.c * d.c / (free * free) +
                         row[x] * 2.0 * d.lambda * d.lambda * d.c * d.c * d.c / (free * free * free);
        } else {
            doff = d.c / o.f_osp;
        }
        out.grad_delay[xi] = dlocal + dwireless + s.wired_delay(i, x) + doff;
        out.grad_energy[xi] = d.eps_local * dlocal + d.eps_tx * dwireless;
        out.grad_payment[xi] = prices[x] * d.c * d.lambda;
    }

    const auto ni = static_cast<Eigen::Index>(n);
    out.hess_delay = Matrix::Constant(ni, ni, ct.gamma + ct.upsilon);
    out.hess_delay.diagonal() += ct.psi;
    out.hess_energy = Matrix::Constant(ni, ni, d.eps_local * ct.gamma + d.eps_tx * ct.upsilon);

    const double wd = d.theta_d / d.d_max;
    const double we = d.theta_e / d.e_max;
    const double wp = d.theta_p / d.p_max;
    out.grad_disutility = wd * out.grad_delay + we * out.grad_energy + wp * out.grad_payment;
    out.hess_disutility = wd * out.hess_delay + we * out.hess_energy;
    return out;
}

inline RowDerivatives row_derivatives(const SystemScenario& s, std::size_t i, const StrategyProfile& a,
                                      const PriceVector& prices) {
    const auto others = osp_loads(s, a, i);
    return row_derivatives(s, i, a.row(i), others, prices);
}

/// Gradient of U_i^MD with respect to device i's row.
inline Vector grad_disutility(const SystemScenario& s, std::size_t i, const StrategyProfile& a,
                              const PriceVector& prices) {
    return row_derivatives(s, i, a, prices).grad_disutility;
}

inline CurvatureTerms curvature_terms(const SystemScenario& s, std::size_t i, const StrategyProfile& a) {
    return row_derivatives(s, i, a, PriceVector{std::vector<double>(s.num_osps(), 0.0)}).curvature;
}

/// Hessian of U_i^MD in device i's row. Prices do not enter it.
inline Matrix hessian_disutility(const SystemScenario& s, std::size_t i, const StrategyProfile& a) {
    return row_derivatives(s, i, a, PriceVector{std::vector<double>(s.num_osps(), 0.0)}).hess_disutility;
}

}  // namespace mecgame
