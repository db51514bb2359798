#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"

namespace atomgrid {

using Complex = std::complex<double>;

/// Extra shunt admittance tied from a node to ground, p.u. Used for constant
/// impedance loads, fault admittances, and machine-reactance grounding.
struct Shunt {
    int node = 0;
    Complex y;
};

/// Dense node admittance matrix. `ids` names the rows/columns; the node set
/// is not restricted to case buses (machine internal nodes get ids too).
struct AdmittanceMatrix {
    std::vector<int> ids;
    Eigen::MatrixXcd y;

    int index_of(int id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return static_cast<int>(i);
        throw SemanticError("node id " + std::to_string(id) + " not in admittance matrix");
    }
    Complex at(int id_i, int id_j) const { return y(index_of(id_i), index_of(id_j)); }
    int order() const { return static_cast<int>(ids.size()); }
};

struct ImpedanceMatrix {
    std::vector<int> ids;
    Eigen::MatrixXcd z;

    int index_of(int id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return static_cast<int>(i);
        throw SemanticError("node id " + std::to_string(id) + " not in impedance matrix");
    }
    Complex at(int id_i, int id_j) const { return z(index_of(id_i), index_of(id_j)); }
};

/// Standard Y-bus assembly over the case buses: series elements with
/// off-nominal taps on the `from` side, half line charging at each end,
/// plus any extra shunts (loads, faults, machine grounding).
inline AdmittanceMatrix build_admittance(const NetworkCase& net,
                                         const std::vector<Shunt>& extra_shunts = {}) {
    const int n = static_cast<int>(net.buses.size());
    AdmittanceMatrix out;
    out.ids.reserve(net.buses.size());
    for (const Bus& b : net.buses) out.ids.push_back(b.id);
    out.y = Eigen::MatrixXcd::Zero(n, n);

    for (const Branch& br : net.branches) {
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex yc(0.0, br.b_shunt / 2.0);
        const double t = br.tap;
        out.y(i, i) += (ys + yc) / (t * t);
        out.y(j, j) += ys + yc;
        out.y(i, j) -= ys / t;
        out.y(j, i) -= ys / t;
    }
    for (const Shunt& s : extra_shunts) {
        const int k = net.bus_index(s.node);
        out.y(k, k) += s.y;
    }
    return out;
}

/// Gaussian elimination of all nodes not in `keep`. The reduced matrix has
/// the same port behavior: with zero injection at eliminated nodes, kept-node
/// currents match the full matrix for any kept-node voltage assignment.
inline AdmittanceMatrix kron_reduce(const AdmittanceMatrix& full, const std::vector<int>& keep) {
    std::vector<int> kidx, eidx;
    for (int id : keep) kidx.push_back(full.index_of(id));
    for (int i = 0; i < full.order(); ++i)
        if (std::find(kidx.begin(), kidx.end(), i) == kidx.end()) eidx.push_back(i);

    AdmittanceMatrix out;
    out.ids = keep;
    const auto k = static_cast<Eigen::Index>(kidx.size());
    const auto e = static_cast<Eigen::Index>(eidx.size());
    if (e == 0) {
        out.y = full.y(kidx, kidx);
        return out;
    }

    Eigen::MatrixXcd ykk = full.y(kidx, kidx);
    Eigen::MatrixXcd yke = full.y(kidx, eidx);
    Eigen::MatrixXcd yek = full.y(eidx, kidx);
    Eigen::MatrixXcd yee = full.y(eidx, eidx);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
    if (!lu.isInvertible())
        throw NumericsError("kron_reduce: eliminated block is singular (floating subnetwork?)");
    out.y = ykk - yke * lu.solve(yek);
    (void)k;
    return out;
}

/// Full inverse of a grounded Y-bus. Verifies Y*Z = I to 1e-9 per entry and
/// rejects singular (ungrounded) networks.
inline ImpedanceMatrix zbus(const AdmittanceMatrix& y) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(y.y);
    if (!lu.isInvertible())
        throw NumericsError("zbus: admittance matrix is singular; network must be grounded "
                            "through loads and/or generator reactances");
    ImpedanceMatrix out;
    out.ids = y.ids;
    out.z = lu.inverse();

    const double residual = (y.y * out.z - Eigen::MatrixXcd::Identity(y.order(), y.order()))
                                .cwiseAbs()
                                .maxCoeff();
    if (residual > 1e-9)
        throw NumericsError("zbus: inversion residual above tolerance", residual);
    return out;
}

} // namespace atomgrid
