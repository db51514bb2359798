#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atomgrid/admittance.hpp"
#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"

namespace atomgrid {

struct PowerFlowOptions {
    double tol = 1e-8;  // max |mismatch|, p.u.
    int max_iter = 20;
    bool enforce_q_limits = false;
    std::optional<Eigen::VectorXcd> warm_start;  // aligned with case.buses
};

struct GeneratorInjection {
    int bus = 0;
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

struct PowerFlowSolution {
    std::vector<int> bus_ids;
    Eigen::VectorXcd v;                   // per-bus complex voltage, p.u.
    std::vector<GeneratorInjection> gen;  // aligned with case.generators
    int iterations = 0;
    double max_mismatch = 0.0;

    std::complex<double> v_at(int bus_id) const {
        for (std::size_t i = 0; i < bus_ids.size(); ++i)
            if (bus_ids[i] == bus_id) return v(static_cast<Eigen::Index>(i));
        throw SemanticError("bus id " + std::to_string(bus_id) + " not in solution");
    }
};

struct MismatchResult {
    Eigen::VectorXd dp;  // scheduled - computed active injection, p.u.
    Eigen::VectorXd dq;  // reactive; entries are zero where unconstrained
};

namespace detail {

inline Eigen::VectorXd scheduled_p(const NetworkCase& net) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.buses.size()));
    for (const Generator& g : net.generators)
        p(net.bus_index(g.bus)) += g.p_dispatch_mw / net.base_mva;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p(i) -= net.buses[static_cast<std::size_t>(i)].load_p_mw / net.base_mva;
    return p;
}

inline Eigen::VectorXd scheduled_q(const NetworkCase& net) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.buses.size()));
    for (Eigen::Index i = 0; i < q.size(); ++i)
        q(i) = -net.buses[static_cast<std::size_t>(i)].load_q_mvar / net.base_mva;
    return q;
}

// Computed complex injections S = V .* conj(Y V), split into P and Q.
inline void computed_injections(const Eigen::MatrixXcd& y, const Eigen::VectorXcd& v,
                                Eigen::VectorXd& p, Eigen::VectorXd& q) {
    const Eigen::VectorXcd s = v.cwiseProduct((y * v).conjugate());
    p = s.real();
    q = s.imag();
}

// Polar-form power-flow Jacobian d(P,Q)/d(theta,V) over the given unknowns.
inline Eigen::MatrixXd build_jacobian(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b,
                                      const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                                      const Eigen::VectorXd& p_calc, const Eigen::VectorXd& q_calc,
                                      const std::vector<Eigen::Index>& ang_idx,
                                      const std::vector<Eigen::Index>& mag_idx) {
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());
    Eigen::MatrixXd jac(na + nm, na + nm);
    for (Eigen::Index r = 0; r < na; ++r) {
        const Eigen::Index i = ang_idx[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < na; ++c) {
            const Eigen::Index j = ang_idx[static_cast<std::size_t>(c)];
            if (i == j)
                jac(r, c) = -q_calc(i) - b(i, i) * vm(i) * vm(i);
            else {
                const double th = va(i) - va(j);
                jac(r, c) = vm(i) * vm(j) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
            }
        }
        for (Eigen::Index c = 0; c < nm; ++c) {
            const Eigen::Index j = mag_idx[static_cast<std::size_t>(c)];
            if (i == j)
                jac(r, na + c) = p_calc(i) / vm(i) + g(i, i) * vm(i);
            else {
                const double th = va(i) - va(j);
                jac(r, na + c) = vm(i) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
            }
        }
    }
    for (Eigen::Index r = 0; r < nm; ++r) {
        const Eigen::Index i = mag_idx[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < na; ++c) {
            const Eigen::Index j = ang_idx[static_cast<std::size_t>(c)];
            if (i == j)
                jac(na + r, c) = p_calc(i) - g(i, i) * vm(i) * vm(i);
            else {
                const double th = va(i) - va(j);
                jac(na + r, c) = -vm(i) * vm(j) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
            }
        }
        for (Eigen::Index c = 0; c < nm; ++c) {
            const Eigen::Index j = mag_idx[static_cast<std::size_t>(c)];
            if (i == j)
                jac(na + r, na + c) = q_calc(i) / vm(i) - b(i, i) * vm(i);
            else {
                const double th = va(i) - va(j);
                jac(na + r, na + c) = vm(i) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
            }
        }
    }
    return jac;
}

} // namespace detail

/// Scheduled-minus-computed injections at `v`, per bus. The free quantities
/// (slack P and Q, pv-bus Q) are reported as zero.
inline MismatchResult mismatch(const NetworkCase& net, const Eigen::VectorXcd& v) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    if (v.size() != n) throw SemanticError("mismatch: voltage vector has wrong dimension");
    const AdmittanceMatrix y = build_admittance(net);
    Eigen::VectorXd p_calc, q_calc;
    detail::computed_injections(y.y, v, p_calc, q_calc);
    const Eigen::VectorXd p_sched = detail::scheduled_p(net);
    const Eigen::VectorXd q_sched = detail::scheduled_q(net);

    MismatchResult out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const BusKind kind = net.buses[static_cast<std::size_t>(i)].kind;
        if (kind == BusKind::slack) continue;
        out.dp(i) = p_sched(i) - p_calc(i);
        if (kind == BusKind::pq) out.dq(i) = q_sched(i) - q_calc(i);
    }
    return out;
}

/// Newton–Raphson AC power flow in polar form with an analytic Jacobian.
/// Flat start (1.0 at pq, setpoint at pv/slack, all angles 0) unless a warm
/// start is supplied. Throws NumericsError on non-convergence.
inline PowerFlowSolution solve_powerflow(const NetworkCase& net, PowerFlowOptions opts = {}) {
    net.validate();
    if (opts.tol <= 0) throw SemanticError("powerflow tol must be > 0");
    if (opts.max_iter < 0) throw SemanticError("powerflow max_iter must be >= 0");

    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const AdmittanceMatrix ybus = build_admittance(net);
    const Eigen::MatrixXd g = ybus.y.real();
    const Eigen::MatrixXd b = ybus.y.imag();

    std::vector<BusKind> kind(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) kind[static_cast<std::size_t>(i)] = net.buses[static_cast<std::size_t>(i)].kind;

    Eigen::VectorXd vm(n), va = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Bus& bus = net.buses[static_cast<std::size_t>(i)];
        vm(i) = bus.kind == BusKind::pq ? 1.0 : bus.v_setpoint;
    }
    if (opts.warm_start) {
        if (opts.warm_start->size() != n)
            throw SemanticError("warm start has wrong dimension");
        for (Eigen::Index i = 0; i < n; ++i) {
            va(i) = std::arg((*opts.warm_start)(i));
            if (kind[static_cast<std::size_t>(i)] == BusKind::pq)
                vm(i) = std::abs((*opts.warm_start)(i));
        }
    }

    const Eigen::VectorXd p_sched = detail::scheduled_p(net);
    Eigen::VectorXd q_sched = detail::scheduled_q(net);

    // Reactive-limit enforcement converts violating pv buses to pq with the
    // bus-total q pinned at the binding limit, then re-solves.
    std::vector<bool> q_limited(static_cast<std::size_t>(n), false);
    int iterations_total = 0;

    for (int round = 0;; ++round) {
        std::vector<Eigen::Index> ang_idx, mag_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool is_pq = kind[static_cast<std::size_t>(i)] == BusKind::pq ||
                               q_limited[static_cast<std::size_t>(i)];
            if (kind[static_cast<std::size_t>(i)] != BusKind::slack) ang_idx.push_back(i);
            if (is_pq) mag_idx.push_back(i);
        }
        const auto na = static_cast<Eigen::Index>(ang_idx.size());
        const auto nm = static_cast<Eigen::Index>(mag_idx.size());

        auto polar_v = [&]() {
            Eigen::VectorXcd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
            return v;
        };

        Eigen::VectorXd p_calc(n), q_calc(n);
        bool converged = false;
        double max_f = 0.0;
        int iter = 0;
        for (; iter <= opts.max_iter; ++iter) {
            detail::computed_injections(ybus.y, polar_v(), p_calc, q_calc);
            Eigen::VectorXd f(na + nm);
            for (Eigen::Index k = 0; k < na; ++k) f(k) = p_sched(ang_idx[static_cast<std::size_t>(k)]) - p_calc(ang_idx[static_cast<std::size_t>(k)]);
            for (Eigen::Index k = 0; k < nm; ++k) f(na + k) = q_sched(mag_idx[static_cast<std::size_t>(k)]) - q_calc(mag_idx[static_cast<std::size_t>(k)]);
            max_f = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
            if (max_f < opts.tol) {
                converged = true;
                break;
            }
            if (iter == opts.max_iter) break;

            const Eigen::MatrixXd jac =
                detail::build_jacobian(g, b, vm, va, p_calc, q_calc, ang_idx, mag_idx);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
            const Eigen::VectorXd dx = lu.solve(f);
            if (!dx.allFinite())
                throw NumericsError("powerflow: Jacobian is singular", max_f);
            for (Eigen::Index k = 0; k < na; ++k) va(ang_idx[static_cast<std::size_t>(k)]) += dx(k);
            for (Eigen::Index k = 0; k < nm; ++k) vm(mag_idx[static_cast<std::size_t>(k)]) += dx(na + k);
        }
        iterations_total += iter;

        if (!converged)
            throw NumericsError("powerflow: no convergence after " +
                                    std::to_string(opts.max_iter) + " iterations (mismatch " +
                                    std::to_string(max_f) + " p.u.)",
                                max_f);

        // Check reactive limits at pv buses; convert violators and repeat.
        bool changed = false;
        if (opts.enforce_q_limits && round < 10) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (kind[static_cast<std::size_t>(i)] != BusKind::pv ||
                    q_limited[static_cast<std::size_t>(i)])
                    continue;
                const auto gens = net.generator_indices_at(net.buses[static_cast<std::size_t>(i)].id);
                double qmin = 0, qmax = 0;
                bool bounded = !gens.empty();
                for (int gi : gens) {
                    const Generator& gen = net.generators[static_cast<std::size_t>(gi)];
                    if (!gen.q_min_mvar || !gen.q_max_mvar) bounded = false;
                    qmin += gen.q_min_mvar.value_or(0.0) / net.base_mva;
                    qmax += gen.q_max_mvar.value_or(0.0) / net.base_mva;
                }
                if (!bounded) continue;
                const double q_inj = q_calc(i) + net.buses[static_cast<std::size_t>(i)].load_q_mvar / net.base_mva;
                if (q_inj > qmax || q_inj < qmin) {
                    q_limited[static_cast<std::size_t>(i)] = true;
                    const double q_pin = std::clamp(q_inj, qmin, qmax);
                    q_sched(i) = q_pin - net.buses[static_cast<std::size_t>(i)].load_q_mvar / net.base_mva;
                    changed = true;
                }
            }
        }
        if (!changed) {
            PowerFlowSolution sol;
            sol.bus_ids.reserve(static_cast<std::size_t>(n));
            for (const Bus& bus : net.buses) sol.bus_ids.push_back(bus.id);
            sol.v = polar_v();
            sol.iterations = iterations_total;
            sol.max_mismatch = max_f;

            // Allocate bus-level injections to generators, proportional to
            // s_rated when a bus hosts several machines.
            for (const Generator& gen : net.generators) {
                const Eigen::Index i = net.bus_index(gen.bus);
                const Bus& bus = net.buses[static_cast<std::size_t>(i)];
                double s_total = 0;
                for (int gi : net.generator_indices_at(gen.bus))
                    s_total += net.generators[static_cast<std::size_t>(gi)].s_rated_mva;
                const double share = gen.s_rated_mva / s_total;
                const double p_bus_mw = p_calc(i) * net.base_mva + bus.load_p_mw;
                const double q_bus_mvar = q_calc(i) * net.base_mva + bus.load_q_mvar;
                GeneratorInjection inj;
                inj.bus = gen.bus;
                inj.p_mw = bus.kind == BusKind::slack ? p_bus_mw * share : gen.p_dispatch_mw;
                inj.q_mvar = q_bus_mvar * share;
                sol.gen.push_back(inj);
            }
            return sol;
        }
    }
}

/// Newton Jacobian of the computed injections at `v`, over the standard
/// unknowns (angles at non-slack buses, magnitudes at pq buses). Exposed so
/// it can be checked against finite differences of `mismatch`.
inline Eigen::MatrixXd newton_jacobian(const NetworkCase& net, const Eigen::VectorXcd& v) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    if (v.size() != n) throw SemanticError("newton_jacobian: voltage vector has wrong dimension");
    const AdmittanceMatrix ybus = build_admittance(net);
    std::vector<Eigen::Index> ang_idx, mag_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        const BusKind k = net.buses[static_cast<std::size_t>(i)].kind;
        if (k != BusKind::slack) ang_idx.push_back(i);
        if (k == BusKind::pq) mag_idx.push_back(i);
    }
    Eigen::VectorXd vm = v.cwiseAbs(), va(n);
    for (Eigen::Index i = 0; i < n; ++i) va(i) = std::arg(v(i));
    Eigen::VectorXd p_calc, q_calc;
    detail::computed_injections(ybus.y, v, p_calc, q_calc);
    return detail::build_jacobian(ybus.y.real(), ybus.y.imag(), vm, va, p_calc, q_calc, ang_idx,
                                  mag_idx);
}

} // namespace atomgrid
