#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mecgame/errors.hpp"

namespace mecgame {

/// One IoT mobile device, all fields in SI units.
struct DeviceParams {
    double lambda = 0.0;          // task arrival rate [tasks/s]
    double c = 0.0;               // mean CPU cycles per task [cycles]
    double z = 0.0;               // mean input size per task [bits]
    double f_md = 0.0;            // local CPU rate [cycles/s]
    double eps_local = 0.0;       // local computing power [W]
    double eps_tx = 0.0;          // transmission power [W]
    double h = 0.0;               // linear channel gain
    double sigma2_service = 0.0;  // variance of wireless service time [s^2]
    double d_max = 0.0;           // [s]
    double e_max = 0.0;           // [J]
    double p_max = 0.0;           // [$/s]
    double theta_d = 0.0;
    double theta_e = 0.0;
    double theta_p = 0.0;

    /// Offered CPU load lambda * c [cycles/s].
    double cycle_rate() const noexcept { return lambda * c; }
};

enum class OspKind { Cloud, Edge };

inline const char* to_string(OspKind k) { return k == OspKind::Cloud ? "cloud" : "edge"; }

struct OspParams {
    OspKind kind = OspKind::Edge;
    double f_osp = 0.0;  // [cycles/s]
    double p_min = 0.0;  // [$/cycle]
    double a = 1.0;      // optical amplifier count, cloud only

    bool is_edge() const noexcept { return kind == OspKind::Edge; }
};

struct NetworkParams {
    double bandwidth_b = 0.0;   // [Hz]
    double w0 = 0.0;            // background interference [W]
    double fiber_rate_r = 0.0;  // backbone uplink rate [bits/s]
    double prop_delay_t = 0.0;  // backbone propagation delay [s]
};

/// Shannon uplink rate of device i under worst-case interference from every other device.
inline double uplink_rate(std::span<const DeviceParams> devices, const NetworkParams& net, std::size_t i) {
    double interference = net.w0;
    for (std::size_t k = 0; k < devices.size(); ++k) {
        if (k != i) interference += devices[k].eps_tx * devices[k].h;
    }
    const double sinr = devices[i].eps_tx * devices[i].h / interference;
    return net.bandwidth_b * std::log2(1.0 + sinr);
}

/// Immutable game data: devices, OSPs (cloud entries first) and network constants.
///
/// Construction validates every invariant and caches the uplink rates, which depend only on the
/// device population.
class SystemScenario {
public:
    SystemScenario(std::vector<DeviceParams> devices, std::vector<OspParams> osps, NetworkParams net)
        : devices_(std::move(devices)), osps_(std::move(osps)), net_(net) {
        validate();
        rates_.resize(devices_.size());
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            rates_[i] = uplink_rate(devices_, net_, i);
            if (!(rates_[i] > 0.0) || !std::isfinite(rates_[i])) {
                throw InvalidScenario("device " + std::to_string(i) + " has non-positive uplink rate");
            }
        }
        for (const auto& o : osps_) n_cloud_ += o.kind == OspKind::Cloud ? 1 : 0;
    }

    std::size_t num_devices() const noexcept { return devices_.size(); }
    std::size_t num_osps() const noexcept { return osps_.size(); }
    std::size_t num_cloud() const noexcept { return n_cloud_; }
    std::size_t num_edge() const noexcept { return osps_.size() - n_cloud_; }

    const DeviceParams& device(std::size_t i) const { return devices_.at(i); }
    const OspParams& osp(std::size_t j) const { return osps_.at(j); }
    std::span<const DeviceParams> devices() const noexcept { return devices_; }
    std::span<const OspParams> osps() const noexcept { return osps_; }
    const NetworkParams& net() const noexcept { return net_; }

    /// Cached uplink rate r_i [bits/s].
    double rate(std::size_t i) const { return rates_.at(i); }

    /// Mean squared wireless service time: sigma^2 + (z/r)^2.
    double service_second_moment(std::size_t i) const {
        const auto& d = devices_.at(i);
        const double s = d.z / rates_.at(i);
        return d.sigma2_service + s * s;
    }

    /// Backbone delay for a task of device i sent to OSP j (zero for edge OSPs).
    double wired_delay(std::size_t i, std::size_t j) const {
        const auto& o = osps_.at(j);
        if (o.is_edge()) return 0.0;
        return o.a * devices_.at(i).z / net_.fiber_rate_r + net_.prop_delay_t;
    }

private:
    void validate() const {
        if (devices_.empty()) throw InvalidScenario("scenario needs at least one device");
        if (osps_.empty()) throw InvalidScenario("scenario needs at least one OSP");
        bool seen_edge = false;
        for (std::size_t j = 0; j < osps_.size(); ++j) {
            const auto& o = osps_[j];
            if (o.is_edge()) seen_edge = true;
            else if (seen_edge) throw InvalidScenario("cloud OSPs must precede edge OSPs");
            if (!(o.f_osp > 0.0)) throw InvalidScenario("OSP " + std::to_string(j) + ": f_osp must be > 0");
            if (!(o.p_min >= 0.0)) throw InvalidScenario("OSP " + std::to_string(j) + ": p_min must be >= 0");
            if (!(o.a >= 0.0)) throw InvalidScenario("OSP " + std::to_string(j) + ": a must be >= 0");
        }
        if (!(net_.bandwidth_b > 0.0)) throw InvalidScenario("bandwidth must be > 0");
        if (!(net_.fiber_rate_r > 0.0)) throw InvalidScenario("fiber rate must be > 0");
        if (!(net_.w0 >= 0.0) || !(net_.prop_delay_t >= 0.0)) {
            throw InvalidScenario("network constants must be >= 0");
        }
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            const auto& d = devices_[i];
            const std::string tag = "device " + std::to_string(i) + ": ";
            const double positives[] = {d.lambda, d.c,     d.z,     d.f_md,  d.eps_local,
                                        d.eps_tx, d.h,     d.d_max, d.e_max, d.p_max};
            for (double v : positives) {
                if (!(v > 0.0) || !std::isfinite(v)) throw InvalidScenario(tag + "physical quantities must be > 0");
            }
            if (!(d.sigma2_service >= 0.0)) throw InvalidScenario(tag + "sigma2_service must be >= 0");
            for (double w : {d.theta_d, d.theta_e, d.theta_p}) {
                if (!(w >= 0.0 && w <= 1.0)) throw InvalidScenario(tag + "weights must lie in [0,1]");
            }
            if (std::abs(d.theta_d + d.theta_e + d.theta_p - 1.0) > 1e-12) {
                throw InvalidScenario(tag + "weights must sum to 1");
            }
            if (!(d.cycle_rate() < d.f_md)) throw InvalidScenario(tag + "lambda*c must be below f_md");
        }
    }

    std::vector<DeviceParams> devices_;
    std::vector<OspParams> osps_;
    NetworkParams net_;
    std::vector<double> rates_;
    std::size_t n_cloud_ = 0;
};

/// M x N matrix of offloading probabilities, stored row-major.
class StrategyProfile {
public:
    StrategyProfile() = default;
    StrategyProfile(std::size_t m, std::size_t n, double fill = 0.0) : m_(m), n_(n), a_(m * n, fill) {}

    static StrategyProfile zeros(const SystemScenario& s) { return {s.num_devices(), s.num_osps()}; }

    std::size_t rows() const noexcept { return m_; }
    std::size_t cols() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    std::span<double> row(std::size_t i) { return {a_.data() + i * n_, n_}; }
    std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }

    void set_row(std::size_t i, std::span<const double> values) {
        for (std::size_t j = 0; j < n_; ++j) a_[i * n_ + j] = values[j];
    }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j];
        return s;
    }

    std::span<const double> data() const noexcept { return a_; }
    std::span<double> data() noexcept { return a_; }

    bool operator==(const StrategyProfile&) const = default;

private:
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// Frobenius norm of the difference of two equally shaped profiles.
inline double frobenius_distance(const StrategyProfile& a, const StrategyProfile& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        const double d = a.data()[k] - b.data()[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Per-OSP unit prices [$/cycle].
struct PriceVector {
    std::vector<double> p;

    std::size_t size() const noexcept { return p.size(); }
    double operator[](std::size_t j) const { return p[j]; }
    double& operator[](std::size_t j) { return p[j]; }
    bool operator==(const PriceVector&) const = default;

    /// Every OSP at its minimum (cost) price.
    static PriceVector floors(const SystemScenario& s) {
        PriceVector out;
        for (const auto& o : s.osps()) out.p.push_back(o.p_min);
        return out;
    }
};

struct CostBreakdown {
    double rate_r = 0.0;      // [bits/s]
    double delay = 0.0;       // [s]
    double energy = 0.0;      // [J]
    double payment = 0.0;     // [$/s]
    double disutility = 0.0;  // dimensionless
};

struct Violation {
    std::string constraint;  // "C1".."C8"
    std::size_t index = 0;   // device index (OSP index for C5)
    double margin = 0.0;     // how far past the limit; > 0 means violated
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<Violation> violations;

    /// True when none of the structural/stability constraints C1-C5 are violated.
    bool stable() const {
        for (const auto& v : violations) {
            if (v.constraint <= "C5") return false;
        }
        return true;
    }

    bool has(const std::string& tag) const {
        for (const auto& v : violations) {
            if (v.constraint == tag) return true;
        }
        return false;
    }
};

}  // namespace mecgame
