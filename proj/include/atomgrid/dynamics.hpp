#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atomgrid/admittance.hpp"
#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"
#include "atomgrid/powerflow.hpp"

namespace atomgrid {

/// Classical-model machine constants. Powers fed to the swing equation are
/// on the machine rating (p.u. of s_rated_mva), matching h_eff and d.
struct MachineDynParams {
    int bus = 0;
    GenKind kind = GenKind::sm;
    double h_eff = 0.0;       // inertia constant, seconds, on s_rated base
    double d = 0.0;           // damping, p.u. torque per p.u. speed deviation
    double e_internal = 0.0;  // EMF magnitude behind xd', system p.u.
    double xd_prime = 0.0;    // system-base p.u.
    double s_rated_mva = 0.0;
    double omega_s = 0.0;     // synchronous speed, rad/s
    double p_mech = 0.0;      // mechanical/reference power, machine-base p.u.
};

struct MachineFleet {
    std::vector<MachineDynParams> machines;
    double base_mva = 100.0;
    double omega_s = 0.0;

    Eigen::VectorXd emf() const {
        Eigen::VectorXd e(static_cast<Eigen::Index>(machines.size()));
        for (std::size_t i = 0; i < machines.size(); ++i)
            e(static_cast<Eigen::Index>(i)) = machines[i].e_internal;
        return e;
    }
};

enum class NetworkMode { prefault, fault, postfault };

struct DynamicState {
    double t = 0.0;
    Eigen::VectorXd delta;      // electric angle per machine, rad
    Eigen::VectorXd omega_dev;  // speed deviation per machine, rad/s
    NetworkMode mode = NetworkMode::prefault;
};

struct Event {
    enum class Action { apply_fault, clear_fault, trip_branch };
    double t = 0.0;
    Action action = Action::apply_fault;
    int bus = 0;                                    // apply_fault
    std::complex<double> y_fault{1e4, -1e4};        // apply_fault
    int from = 0, to = 0;                           // trip_branch
};

struct EventSchedule {
    std::vector<Event> events;

    void validate() const {
        bool fault_active = false;
        double last_t = -std::numeric_limits<double>::infinity();
        for (const Event& e : events) {
            if (!(e.t > last_t))
                throw SemanticError("event times must be strictly increasing");
            last_t = e.t;
            switch (e.action) {
                case Event::Action::apply_fault:
                    if (fault_active) throw SemanticError("apply_fault while a fault is active");
                    fault_active = true;
                    break;
                case Event::Action::clear_fault:
                    if (!fault_active) throw SemanticError("clear_fault without an active fault");
                    fault_active = false;
                    break;
                case Event::Action::trip_branch:
                    break;
            }
        }
    }
};

inline EventSchedule fault_schedule(int bus, double t_apply, double t_clear,
                                    std::complex<double> y_fault = {1e4, -1e4}) {
    EventSchedule s;
    Event apply;
    apply.t = t_apply;
    apply.action = Event::Action::apply_fault;
    apply.bus = bus;
    apply.y_fault = y_fault;
    Event clear;
    clear.t = t_clear;
    clear.action = Event::Action::clear_fault;
    s.events = {apply, clear};
    s.validate();
    return s;
}

struct Trajectory {
    std::vector<int> machine_buses;  // per machine, aligned with case.generators
    std::vector<int> bus_ids;
    double dt = 0.0;
    std::vector<double> t;
    Eigen::MatrixXd delta;      // rows: samples, cols: machines (rad)
    Eigen::MatrixXd omega_dev;  // rad/s
    Eigen::MatrixXd v_bus;      // voltage magnitude, p.u.
    Eigen::MatrixXd p_e;        // machine electrical power, system-base p.u.
    std::vector<NetworkMode> mode;
    bool lost_sync = false;
    double lost_sync_time = 0.0;

    Eigen::Index samples() const { return static_cast<Eigen::Index>(t.size()); }

    Eigen::Index bus_column(int bus_id) const {
        for (std::size_t i = 0; i < bus_ids.size(); ++i)
            if (bus_ids[i] == bus_id) return static_cast<Eigen::Index>(i);
        throw SemanticError("bus id " + std::to_string(bus_id) + " not in trajectory");
    }
};

/// Virtual inertia constant of a VSG: capacitor energy normalized by the
/// converter rating, in seconds, mirroring H = (stored energy) / S_rated.
inline double vsg_equivalent_inertia(double c_dc_f, double v_dc_v, double s_rated_mva,
                                     double omega_s) {
    if (c_dc_f <= 0 || v_dc_v <= 0 || s_rated_mva <= 0 || omega_s <= 0)
        throw SemanticError("vsg_equivalent_inertia: all inputs must be > 0");
    const double e_c = 0.5 * c_dc_f * v_dc_v * v_dc_v;  // joules
    return e_c / (s_rated_mva * 1e6);
}

/// Machine electrical power from the reduced admittance matrix:
/// P_i = sum_j E_i E_j (G_ij cos(di-dj) + B_ij sin(di-dj)), system-base p.u.
inline Eigen::VectorXd electrical_power(const Eigen::VectorXd& delta, const Eigen::VectorXd& e,
                                        const Eigen::MatrixXcd& y_red) {
    const Eigen::Index m = delta.size();
    if (e.size() != m || y_red.rows() != m || y_red.cols() != m)
        throw SemanticError("electrical_power: dimension mismatch");
    Eigen::VectorXd p(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double th = delta(i) - delta(j);
            acc += e(i) * e(j) *
                   (y_red(i, j).real() * std::cos(th) + y_red(i, j).imag() * std::sin(th));
        }
        p(i) = acc;
    }
    return p;
}

struct SwingDerivatives {
    Eigen::VectorXd ddelta;
    Eigen::VectorXd domega;
};

/// Rotor dynamics: ddelta/dt = omega_dev,
/// domega/dt = (omega_s / 2H)(p_m - p_e) - (d / 2H) omega_dev,
/// with p_e supplied on each machine's own rating base.
inline SwingDerivatives swing_rhs(const DynamicState& state,
                                  const std::vector<MachineDynParams>& machines,
                                  const Eigen::VectorXd& p_e_machine) {
    const Eigen::Index m = state.delta.size();
    if (static_cast<Eigen::Index>(machines.size()) != m || p_e_machine.size() != m)
        throw SemanticError("swing_rhs: dimension mismatch");
    SwingDerivatives out;
    out.ddelta = state.omega_dev;
    out.domega.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const MachineDynParams& mp = machines[static_cast<std::size_t>(i)];
        out.domega(i) = mp.omega_s / (2.0 * mp.h_eff) * (mp.p_mech - p_e_machine(i)) -
                        mp.d / (2.0 * mp.h_eff) * state.omega_dev(i);
    }
    return out;
}

namespace detail {

inline Eigen::VectorXd machine_base_power(const Eigen::VectorXd& p_sys, const MachineFleet& fleet) {
    Eigen::VectorXd p(p_sys.size());
    for (Eigen::Index i = 0; i < p_sys.size(); ++i)
        p(i) = p_sys(i) * fleet.base_mva / fleet.machines[static_cast<std::size_t>(i)].s_rated_mva;
    return p;
}

inline SwingDerivatives fleet_rhs(const DynamicState& s, const MachineFleet& fleet,
                                  const Eigen::VectorXd& e, const Eigen::MatrixXcd& y_red) {
    const Eigen::VectorXd p_sys = electrical_power(s.delta, e, y_red);
    return swing_rhs(s, fleet.machines, machine_base_power(p_sys, fleet));
}

} // namespace detail

/// One classical RK4 step; the electrical power is re-evaluated at every
/// stage. Aborts with NumericsError if the state stops being finite.
inline DynamicState step_rk4(const DynamicState& state, const MachineFleet& fleet,
                             const Eigen::MatrixXcd& y_red, double dt) {
    if (dt == 0.0) throw SemanticError("step_rk4: dt must be nonzero");
    const Eigen::VectorXd e = fleet.emf();

    auto at = [&](double frac, const SwingDerivatives& k) {
        DynamicState s;
        s.t = state.t + frac * dt;
        s.delta = state.delta + frac * dt * k.ddelta;
        s.omega_dev = state.omega_dev + frac * dt * k.domega;
        s.mode = state.mode;
        return s;
    };

    const SwingDerivatives k1 = detail::fleet_rhs(state, fleet, e, y_red);
    const SwingDerivatives k2 = detail::fleet_rhs(at(0.5, k1), fleet, e, y_red);
    const SwingDerivatives k3 = detail::fleet_rhs(at(0.5, k2), fleet, e, y_red);
    const SwingDerivatives k4 = detail::fleet_rhs(at(1.0, k3), fleet, e, y_red);

    DynamicState next;
    next.t = state.t + dt;
    next.delta = state.delta + dt / 6.0 * (k1.ddelta + 2.0 * k2.ddelta + 2.0 * k3.ddelta + k4.ddelta);
    next.omega_dev =
        state.omega_dev + dt / 6.0 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
    next.mode = state.mode;
    if (!next.delta.allFinite() || !next.omega_dev.allFinite())
        throw NumericsError("integration aborted: non-finite state at t = " +
                            std::to_string(next.t) + " s");
    return next;
}

/// Network matrices for one contiguous stretch of simulated time during
/// which the topology (fault shunts, tripped branches) is constant.
struct NetworkSegment {
    NetworkMode mode = NetworkMode::prefault;
    Eigen::MatrixXcd y_red;                       // machine internal nodes
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_bb;  // bus block of the augmented Y
    Eigen::MatrixXcd y_bm;                        // bus-to-machine coupling

    /// Back-substitutes machine EMF phasors into the unreduced network.
    Eigen::VectorXcd bus_voltages(const Eigen::VectorXcd& emf) const {
        return lu_bb.solve((-y_bm * emf).eval());
    }
};

/// Builds augmented (buses + machine internal nodes) admittance matrices for
/// arbitrary fault/trip configurations of one case, with loads converted to
/// constant impedance at the power-flow point.
class NetworkModel {
  public:
    NetworkModel(const NetworkCase& net, const PowerFlowSolution& pf) : net_(net) {
        const auto n = static_cast<Eigen::Index>(net.buses.size());
        if (pf.v.size() != n) throw SemanticError("power-flow solution does not match case");
        for (Eigen::Index i = 0; i < n; ++i) {
            const Bus& b = net.buses[static_cast<std::size_t>(i)];
            if (b.load_p_mw == 0.0 && b.load_q_mvar == 0.0) continue;
            const std::complex<double> s(b.load_p_mw / net.base_mva,
                                         b.load_q_mvar / net.base_mva);
            const double v2 = std::norm(pf.v(i));
            load_shunts_.push_back({b.id, std::conj(s) / v2});
        }
        int next_id = 0;
        for (const Bus& b : net.buses) next_id = std::max(next_id, b.id);
        for (const Generator& g : net.generators) {
            internal_ids_.push_back(++next_id);
            machine_buses_.push_back(g.bus);
            link_y_.push_back(1.0 / std::complex<double>(0.0, g.xd_prime()));
        }
    }

    const std::vector<int>& internal_ids() const { return internal_ids_; }

    NetworkSegment build(NetworkMode mode, const std::optional<Shunt>& fault,
                         const std::vector<std::pair<int, int>>& tripped) const {
        NetworkCase net = net_;
        for (const auto& [from, to] : tripped) {
            const std::size_t before = net.branches.size();
            std::erase_if(net.branches, [&](const Branch& br) {
                return (br.from == from && br.to == to) || (br.from == to && br.to == from);
            });
            if (net.branches.size() == before)
                throw SemanticError("trip_branch: no branch between " + std::to_string(from) +
                                    " and " + std::to_string(to));
        }
        std::vector<Shunt> shunts = load_shunts_;
        if (fault) shunts.push_back(*fault);

        const AdmittanceMatrix ybus = build_admittance(net, shunts);
        const auto n = static_cast<Eigen::Index>(net.buses.size());
        const auto m = static_cast<Eigen::Index>(internal_ids_.size());

        AdmittanceMatrix aug;
        aug.ids = ybus.ids;
        aug.ids.insert(aug.ids.end(), internal_ids_.begin(), internal_ids_.end());
        aug.y = Eigen::MatrixXcd::Zero(n + m, n + m);
        aug.y.topLeftCorner(n, n) = ybus.y;
        for (Eigen::Index k = 0; k < m; ++k) {
            const Eigen::Index b = net.bus_index(machine_buses_[static_cast<std::size_t>(k)]);
            const std::complex<double> y = link_y_[static_cast<std::size_t>(k)];
            aug.y(b, b) += y;
            aug.y(n + k, n + k) += y;
            aug.y(b, n + k) -= y;
            aug.y(n + k, b) -= y;
        }

        NetworkSegment seg;
        seg.mode = mode;
        seg.y_red = kron_reduce(aug, internal_ids_).y;
        seg.lu_bb = Eigen::PartialPivLU<Eigen::MatrixXcd>(aug.y.topLeftCorner(n, n));
        seg.y_bm = aug.y.topRightCorner(n, m);
        return seg;
    }

  private:
    NetworkCase net_;
    std::vector<Shunt> load_shunts_;
    std::vector<int> internal_ids_;
    std::vector<int> machine_buses_;
    std::vector<std::complex<double>> link_y_;
};

struct DynamicSetup {
    DynamicState state;
    MachineFleet fleet;
    NetworkModel network;
    NetworkSegment prefault;
};

/// Initializes the classical model from a converged power flow: EMF behind
/// xd' from terminal conditions, zero speed deviation, and mechanical power
/// balancing the electrical power at t = 0 exactly.
inline DynamicSetup init_dynamic_state(const NetworkCase& net, const PowerFlowSolution& pf) {
    if (pf.gen.size() != net.generators.size() ||
        pf.v.size() != static_cast<Eigen::Index>(net.buses.size()))
        throw SemanticError("init_dynamic_state: solution does not match case");
    {
        const MismatchResult mm = mismatch(net, pf.v);
        const double worst = std::max(mm.dp.cwiseAbs().maxCoeff(), mm.dq.cwiseAbs().maxCoeff());
        if (worst > 1e-6)
            throw SemanticError("init_dynamic_state: power flow not converged for this case "
                                "(mismatch " + std::to_string(worst) + " p.u.)");
    }

    const double omega_s = net.omega_s();
    MachineFleet fleet;
    fleet.base_mva = net.base_mva;
    fleet.omega_s = omega_s;

    const auto m = static_cast<Eigen::Index>(net.generators.size());
    Eigen::VectorXd delta0(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Generator& g = net.generators[static_cast<std::size_t>(k)];
        const std::complex<double> v_t = pf.v(net.bus_index(g.bus));
        const std::complex<double> s(pf.gen[static_cast<std::size_t>(k)].p_mw / net.base_mva,
                                     pf.gen[static_cast<std::size_t>(k)].q_mvar / net.base_mva);
        const std::complex<double> i_t = std::conj(s / v_t);
        const std::complex<double> emf = v_t + std::complex<double>(0.0, g.xd_prime()) * i_t;

        MachineDynParams p;
        p.bus = g.bus;
        p.kind = g.kind();
        p.h_eff = g.kind() == GenKind::sm
                      ? g.sm().h_s
                      : vsg_equivalent_inertia(g.vsg().c_dc_f, g.vsg().v_dc_v, g.s_rated_mva,
                                               omega_s);
        p.d = g.damping();
        p.e_internal = std::abs(emf);
        p.xd_prime = g.xd_prime();
        p.s_rated_mva = g.s_rated_mva;
        p.omega_s = omega_s;
        delta0(k) = std::arg(emf);
        fleet.machines.push_back(p);
    }

    DynamicSetup setup{DynamicState{}, std::move(fleet), NetworkModel(net, pf), {}};
    setup.state.t = 0.0;
    setup.state.delta = delta0;
    setup.state.omega_dev = Eigen::VectorXd::Zero(m);
    setup.state.mode = NetworkMode::prefault;
    setup.prefault = setup.network.build(NetworkMode::prefault, std::nullopt, {});

    // Pin p_mech to the initial electrical power so a no-event run is an
    // exact equilibrium.
    const Eigen::VectorXd p0 =
        electrical_power(delta0, setup.fleet.emf(), setup.prefault.y_red);
    const Eigen::VectorXd p0_machine = detail::machine_base_power(p0, setup.fleet);
    for (Eigen::Index k = 0; k < m; ++k)
        setup.fleet.machines[static_cast<std::size_t>(k)].p_mech = p0_machine(k);
    return setup;
}

struct SimulateOptions {
    double sync_limit_rad = std::numbers::pi;  // |delta_i - delta_COI| ceiling
};

/// Fixed-step integration through the event schedule. Faults are modeled as
/// large shunt admittances; loads are constant impedance. On loss of
/// synchronism the trajectory is truncated and flagged, not discarded.
inline Trajectory simulate(const NetworkCase& net, const PowerFlowSolution& pf,
                           const EventSchedule& schedule, double duration, double dt,
                           SimulateOptions opts = {}) {
    if (dt <= 0) throw SemanticError("simulate: dt must be > 0");
    if (duration <= 0) throw SemanticError("simulate: duration must be > 0");
    schedule.validate();
    for (const Event& e : schedule.events) {
        if (e.t >= duration)
            throw SemanticError("simulate: event at t = " + std::to_string(e.t) +
                                " s is outside the horizon");
        const double steps = e.t / dt;
        if (std::abs(steps - std::round(steps)) > 1e-6)
            throw SemanticError("simulate: event time " + std::to_string(e.t) +
                                " s does not align with the dt grid");
    }

    DynamicSetup setup = init_dynamic_state(net, pf);
    const auto m = static_cast<Eigen::Index>(setup.fleet.machines.size());
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const Eigen::VectorXd e = setup.fleet.emf();

    // One network segment per inter-event interval.
    struct Boundary {
        long long step;
        NetworkSegment segment;
    };
    std::vector<Boundary> boundaries;
    {
        std::optional<Shunt> fault;
        std::vector<std::pair<int, int>> tripped;
        boundaries.push_back({0, std::move(setup.prefault)});
        for (const Event& ev : schedule.events) {
            switch (ev.action) {
                case Event::Action::apply_fault:
                    if (!net.has_bus(ev.bus))
                        throw SemanticError("apply_fault: unknown bus " + std::to_string(ev.bus));
                    fault = Shunt{ev.bus, ev.y_fault};
                    break;
                case Event::Action::clear_fault:
                    fault.reset();
                    break;
                case Event::Action::trip_branch:
                    tripped.emplace_back(ev.from, ev.to);
                    break;
            }
            const NetworkMode mode = fault ? NetworkMode::fault : NetworkMode::postfault;
            boundaries.push_back(
                {std::llround(ev.t / dt), setup.network.build(mode, fault, tripped)});
        }
    }

    const long long steps = std::llround(duration / dt);
    Trajectory traj;
    traj.machine_buses.reserve(static_cast<std::size_t>(m));
    for (const auto& mp : setup.fleet.machines) traj.machine_buses.push_back(mp.bus);
    traj.bus_ids.reserve(static_cast<std::size_t>(n));
    for (const Bus& b : net.buses) traj.bus_ids.push_back(b.id);
    traj.dt = dt;
    traj.t.reserve(static_cast<std::size_t>(steps + 1));
    traj.delta.resize(steps + 1, m);
    traj.omega_dev.resize(steps + 1, m);
    traj.v_bus.resize(steps + 1, n);
    traj.p_e.resize(steps + 1, m);
    traj.mode.reserve(static_cast<std::size_t>(steps + 1));

    // COI weights: stored energy H*S, the natural inertia measure.
    Eigen::VectorXd coi_w(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& mp = setup.fleet.machines[static_cast<std::size_t>(k)];
        coi_w(k) = mp.h_eff * mp.s_rated_mva;
    }
    coi_w /= coi_w.sum();

    DynamicState state = setup.state;
    std::size_t active = 0;
    Eigen::Index row = 0;
    for (long long k = 0; k <= steps; ++k) {
        while (active + 1 < boundaries.size() && boundaries[active + 1].step <= k) ++active;
        const NetworkSegment& seg = boundaries[active].segment;
        state.mode = seg.mode;

        Eigen::VectorXcd emf_phasor(m);
        for (Eigen::Index i = 0; i < m; ++i)
            emf_phasor(i) = std::polar(e(i), state.delta(i));

        traj.t.push_back(static_cast<double>(k) * dt);
        traj.delta.row(row) = state.delta;
        traj.omega_dev.row(row) = state.omega_dev;
        traj.v_bus.row(row) = seg.bus_voltages(emf_phasor).cwiseAbs();
        traj.p_e.row(row) = electrical_power(state.delta, e, seg.y_red);
        traj.mode.push_back(seg.mode);
        ++row;

        const double delta_coi = coi_w.dot(state.delta);
        if ((state.delta.array() - delta_coi).abs().maxCoeff() > opts.sync_limit_rad) {
            traj.lost_sync = true;
            traj.lost_sync_time = static_cast<double>(k) * dt;
            break;
        }
        if (k == steps) break;

        state = step_rk4(state, setup.fleet, seg.y_red, dt);
    }

    traj.delta.conservativeResize(row, m);
    traj.omega_dev.conservativeResize(row, m);
    traj.v_bus.conservativeResize(row, n);
    traj.p_e.conservativeResize(row, m);
    return traj;
}

} // namespace atomgrid
