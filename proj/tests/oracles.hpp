#pragma once

// Reference implementations used only by the tests. They are written straight from the model's
// formulas and share no code with the library beyond the parameter structs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "mecgame/types.hpp"

namespace oracle {

using mecgame::DeviceParams;
using mecgame::NetworkParams;
using mecgame::OspParams;

inline double rate(const std::vector<DeviceParams>& devs, const NetworkParams& net, std::size_t i) {
    double noise = net.w0;
    for (std::size_t k = 0; k < devs.size(); ++k) noise += k == i ? 0.0 : devs[k].eps_tx * devs[k].h;
    return net.bandwidth_b * std::log2(1.0 + devs[i].eps_tx * devs[i].h / noise);
}

struct Costs {
    double delay, energy, payment, disutility;
};

/// Delay, energy, payment and disutility of device i under the full profile `alpha` (row-major
/// M x N), or nullopt when a queue is saturated.
inline std::optional<Costs> costs(const std::vector<DeviceParams>& devs, const std::vector<OspParams>& osps,
                                  const NetworkParams& net, const std::vector<double>& alpha, std::size_t i,
                                  const std::vector<double>& price) {
    const std::size_t n = osps.size();
    const DeviceParams& d = devs[i];
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) off += alpha[i * n + j];
    const double r = rate(devs, net, i);

    const double mu_local = d.f_md - (1.0 - off) * d.lambda * d.c;
    if (mu_local <= 0.0) return std::nullopt;
    const double d_local = d.c / mu_local;
    const double e_local = d.eps_local * d.c / mu_local;

    const double s_bar2 = d.sigma2_service + (d.z / r) * (d.z / r);
    const double busy = d.lambda * d.z * off / r;
    if (busy >= 1.0) return std::nullopt;
    const double d_wireless = d.lambda * s_bar2 * off / (2.0 * (1.0 - busy)) + d.z / r;
    const double e_tx = d.eps_tx * d_wireless;

    double delay = (1.0 - off) * d_local;
    double payment = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const OspParams& o = osps[j];
        double wired = 0.0;
        double compute = 0.0;
        if (o.kind == mecgame::OspKind::Cloud) {
            wired = o.a * d.z / net.fiber_rate_r + net.prop_delay_t;
            compute = d.c / o.f_osp;
        } else {
            double load = 0.0;
            for (std::size_t k = 0; k < devs.size(); ++k) load += alpha[k * n + j] * devs[k].lambda * devs[k].c;
            if (load >= o.f_osp) return std::nullopt;
            compute = d.c / (o.f_osp - load);
        }
        delay += alpha[i * n + j] * (d_wireless + wired + compute);
        payment += alpha[i * n + j] * price[j] * d.c * d.lambda;
    }
    const double energy = (1.0 - off) * e_local + off * e_tx;
    const double u = d.theta_d * delay / d.d_max + d.theta_e * energy / d.e_max + d.theta_p * payment / d.p_max;
    return Costs{delay, energy, payment, u};
}

struct Leader {
    double pi, theta, lhs, rhs;
    bool holds;
};

inline Leader leader_condition(const std::vector<DeviceParams>& devs, const NetworkParams& net, std::size_t i) {
    const DeviceParams& d = devs[i];
    const double r = rate(devs, net, i);
    const double k = d.p_max / (d.theta_p * d.lambda * d.c);
    const double pi = k * (d.theta_d / d.d_max + d.theta_e * d.eps_local / d.e_max);
    const double theta = k * (d.theta_d / d.d_max + d.theta_e * d.eps_tx / d.e_max);
    const double g = d.f_md - d.lambda * d.c;
    const double lhs = 2.0 * pi * (d.c * d.c * d.c / (g * g * g) + d.lambda * d.c * d.c * d.c * d.c / (g * g * g * g * g));
    const double s_bar = d.sigma2_service + (d.z / r) * (d.z / r);
    const double rhs = theta * s_bar * d.z / r;
    return {pi, theta, lhs, rhs, lhs <= rhs};
}

/// Central-difference gradient of f at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double x0 = x[j];
        x[j] = x0 + h;
        const double up = f(x);
        x[j] = x0 - h;
        const double dn = f(x);
        x[j] = x0;
        g[j] = (up - dn) / (2.0 * h);
    }
    return g;
}

/// Full second-difference Hessian of f at x (row-major).
inline std::vector<double> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h) {
    const std::size_t n = x.size();
    std::vector<double> hess(n * n);
    auto at = [&](std::size_t a, double da, std::size_t b, double db) {
        auto y = x;
        y[a] += da;
        y[b] += db;
        return f(y);
    };
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            hess[a * n + b] = (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) / (4.0 * h * h);
        }
    }
    return hess;
}

/// Best value of f over rows with entries on a grid of `step` summing to at most 1 (N <= 2), then
/// refined on a grid of step/10 around the coarse optimum. `f` returns nullopt outside the
/// feasible set.
inline std::pair<double, std::vector<double>> grid_min(
    std::size_t n, double step, const std::function<std::optional<double>(const std::vector<double>&)>& f) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> arg(n, 0.0);
    auto scan = [&](std::vector<double> lo, std::vector<double> hi, double h) {
        const int k0 = static_cast<int>(std::llround((hi[0] - lo[0]) / h));
        const int k1 = n > 1 ? static_cast<int>(std::llround((hi[1] - lo[1]) / h)) : 0;
        for (int a = 0; a <= k0; ++a) {
            for (int b = 0; b <= k1; ++b) {
                std::vector<double> row(n);
                row[0] = lo[0] + a * h;
                if (n > 1) row[1] = lo[1] + b * h;
                bool ok = true;
                double sum = 0.0;
                for (double v : row) {
                    ok = ok && v >= 0.0 && v <= 1.0;
                    sum += v;
                }
                if (!ok || sum > 1.0 + 1e-12) continue;
                if (auto v = f(row); v && *v < best) {
                    best = *v;
                    arg = row;
                }
            }
        }
    };
    scan(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), step);
    std::vector<double> lo(n), hi(n);
    for (std::size_t j = 0; j < n; ++j) {
        lo[j] = std::max(0.0, arg[j] - step);
        hi[j] = std::min(1.0, arg[j] + step);
    }
    scan(lo, hi, step / 10.0);
    return {best, arg};
}

/// Ordinary least-squares slope of y on x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

}  // namespace oracle
