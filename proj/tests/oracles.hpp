// Independent reference implementations used only by tests. These must not
// share code paths with the library beyond the case data structures, so a
// bug in the implementation cannot hide in its own oracle.
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "atomgrid/network.hpp"

namespace oracles {

using Complex = std::complex<double>;

// Y-bus assembled with its own loops (same physics, separate code).
inline Eigen::MatrixXcd gs_ybus(const atomgrid::NetworkCase& net) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    auto idx = [&](int id) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (net.buses[static_cast<std::size_t>(i)].id == id) return i;
        return Eigen::Index{-1};
    };
    for (const auto& br : net.branches) {
        const Eigen::Index i = idx(br.from), j = idx(br.to);
        const Complex zs(br.r, br.x);
        const Complex ys = 1.0 / zs;
        const Complex half_b(0.0, br.b_shunt / 2.0);
        y(i, i) += (ys + half_b) / (br.tap * br.tap);
        y(j, j) += ys + half_b;
        y(i, j) -= ys / br.tap;
        y(j, i) -= ys / br.tap;
    }
    return y;
}

struct GsResult {
    Eigen::VectorXcd v;
    int sweeps = 0;
    bool converged = false;
};

// Accelerated Gauss-Seidel power flow. Slow but simple; used as the
// reference for Newton solutions on small systems.
inline GsResult gauss_seidel_powerflow(const atomgrid::NetworkCase& net, double v_change_tol = 1e-12,
                                       int max_sweeps = 200000, double accel = 1.4) {
    using atomgrid::BusKind;
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const Eigen::MatrixXcd y = gs_ybus(net);

    Eigen::VectorXcd v(n);
    Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n), q_sched = Eigen::VectorXd::Zero(n);
    std::vector<BusKind> kind(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& bus = net.buses[static_cast<std::size_t>(i)];
        kind[static_cast<std::size_t>(i)] = bus.kind;
        v(i) = bus.kind == BusKind::pq ? Complex(1.0, 0.0) : Complex(bus.v_setpoint, 0.0);
        p_sched(i) -= bus.load_p_mw / net.base_mva;
        q_sched(i) -= bus.load_q_mvar / net.base_mva;
    }
    for (const auto& g : net.generators) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (net.buses[static_cast<std::size_t>(i)].id == g.bus) p_sched(i) += g.p_dispatch_mw / net.base_mva;
    }

    GsResult out;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (kind[static_cast<std::size_t>(i)] == BusKind::slack) continue;
            Complex sum = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) sum += y(i, j) * v(j);

            double q = q_sched(i);
            if (kind[static_cast<std::size_t>(i)] == BusKind::pv) {
                Complex inj = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) inj += y(i, j) * v(j);
                q = std::imag(v(i) * std::conj(inj));
            }
            const Complex s_sched(p_sched(i), q);
            Complex v_new = (std::conj(s_sched) / std::conj(v(i)) - sum) / y(i, i);
            if (kind[static_cast<std::size_t>(i)] == BusKind::pv) {
                v_new *= net.buses[static_cast<std::size_t>(i)].v_setpoint / std::abs(v_new);
            } else {
                v_new = v(i) + accel * (v_new - v(i));
            }
            worst = std::max(worst, std::abs(v_new - v(i)));
            v(i) = v_new;
        }
        out.sweeps = sweep + 1;
        if (worst < v_change_tol) {
            out.converged = true;
            break;
        }
    }
    out.v = v;
    return out;
}

} // namespace oracles
