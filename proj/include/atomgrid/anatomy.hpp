#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "atomgrid/admittance.hpp"
#include "atomgrid/dynamics.hpp"
#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"

namespace atomgrid {

/// Moment of inertia of a solid cylinder about its axis.
inline double cylinder_moment(double mass_kg, double radius_m) {
    if (mass_kg <= 0 || radius_m <= 0)
        throw SemanticError("cylinder_moment: mass and radius must be > 0");
    return 0.5 * mass_kg * radius_m * radius_m;
}

/// H = J * omega_s^2 / (2 * S_rated), seconds.
inline double inertia_constant(double j_kgm2, double omega_s, double s_rated_va) {
    if (j_kgm2 <= 0 || omega_s <= 0 || s_rated_va <= 0)
        throw SemanticError("inertia_constant: all inputs must be > 0");
    return j_kgm2 * omega_s * omega_s / (2.0 * s_rated_va);
}

/// E_C = C V^2 / 2, joules.
inline double capacitor_energy(double c_f, double v_v) {
    if (c_f <= 0) throw SemanticError("capacitor_energy: capacitance must be > 0");
    if (v_v < 0) throw SemanticError("capacitor_energy: voltage must be >= 0");
    return 0.5 * c_f * v_v * v_v;
}

/// Per-generator "mass": the rotational-inertia equivalent of the stored
/// energy, 2E/omega_s^2. For an SM this is exactly its moment of inertia
/// J = 2 H S / omega_s^2; for a VSG it is C V^2 / omega_s^2. Sharing the
/// normalization makes the SM/VSG scale disparity directly comparable.
inline std::vector<double> particle_masses(const NetworkCase& net) {
    const double w2 = net.omega_s() * net.omega_s();
    std::vector<double> masses;
    masses.reserve(net.generators.size());
    for (const Generator& g : net.generators) {
        if (g.kind() == GenKind::sm)
            masses.push_back(2.0 * g.sm().h_s * g.s_rated_mva * 1e6 / w2);
        else
            masses.push_back(g.vsg().c_dc_f * g.vsg().v_dc_v * g.vsg().v_dc_v / w2);
    }
    return masses;
}

/// Thevenin looking-in impedance magnitude between two buses:
/// |Z_ii + Z_jj - 2 Z_ij|. The off-diagonal pair is averaged so the result
/// is exactly symmetric even when the numerical inverse is not.
inline double electrical_distance(const ImpedanceMatrix& z, int bus_i, int bus_j) {
    if (bus_i == bus_j) return 0.0;
    const int i = std::min(z.index_of(bus_i), z.index_of(bus_j));
    const int j = std::max(z.index_of(bus_i), z.index_of(bus_j));
    return std::abs(z.z(i, i) + z.z(j, j) - z.z(i, j) - z.z(j, i));
}

/// Pre-fault network grounded through the machine transient reactances;
/// the substrate for electrical distances. Loads are deliberately excluded
/// so distances depend on topology and machines only.
inline ImpedanceMatrix anatomy_impedance(const NetworkCase& net) {
    std::vector<Shunt> shunts;
    for (const Generator& g : net.generators)
        shunts.push_back({g.bus, 1.0 / std::complex<double>(0.0, g.xd_prime())});
    return zbus(build_admittance(net, shunts));
}

struct EmbedResult {
    Eigen::MatrixXd coords;     // one row per point, `dim` columns
    Eigen::VectorXd eigenvalues;  // descending, all of them
    bool padded = false;        // true when positive eigenvalues < dim
};

/// Classical multidimensional scaling of a symmetric zero-diagonal distance
/// matrix: double-center -D^2/2, take the top-k eigenpairs, scale
/// eigenvectors by sqrt(eigenvalue). Sign convention: the first nonzero
/// component of each axis is positive.
inline EmbedResult embed_coordinates(const Eigen::MatrixXd& dist, int dim) {
    const Eigen::Index n = dist.rows();
    if (dist.cols() != n) throw SemanticError("embed_coordinates: distance matrix must be square");
    if (dim < 1 || dim > 2) throw SemanticError("embed_coordinates: dim must be 1 or 2");
    if (((dist - dist.transpose()).cwiseAbs().maxCoeff() > 1e-12 && n > 0) ||
        dist.diagonal().cwiseAbs().maxCoeff() > 1e-12)
        throw SemanticError("embed_coordinates: distance matrix must be symmetric with zero diagonal");

    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd b = -0.5 * centering * dist.cwiseProduct(dist) * centering;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success)
        throw NumericsError("embed_coordinates: eigendecomposition failed");

    EmbedResult out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.coords = Eigen::MatrixXd::Zero(n, dim);
    const double scale = std::max(out.eigenvalues.size() ? std::abs(out.eigenvalues(0)) : 0.0, 1.0);
    for (int k = 0; k < dim; ++k) {
        const double lambda = out.eigenvalues(k);
        if (lambda <= 1e-12 * scale) {
            out.padded = true;
            continue;  // axis left at zero
        }
        Eigen::VectorXd axis = solver.eigenvectors().col(n - 1 - k) * std::sqrt(lambda);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(axis(i)) > 1e-12) {
                if (axis(i) < 0) axis = -axis;
                break;
            }
        }
        out.coords.col(k) = axis;
    }
    return out;
}

struct Particle {
    int gen_index = 0;  // position in case.generators
    int bus = 0;
    GenKind kind = GenKind::sm;
    double mass = 0.0;
    Eigen::VectorXd coord;
};

struct ParticleSet {
    std::vector<Particle> particles;

    int dim() const {
        return particles.empty() ? 0 : static_cast<int>(particles.front().coord.size());
    }
};

/// Generators as particles: energy-equivalent masses at MDS coordinates of
/// the generator buses' pairwise electrical distances.
inline ParticleSet build_particles(const NetworkCase& net, const ImpedanceMatrix& z, int dim) {
    const auto m = static_cast<Eigen::Index>(net.generators.size());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double d = electrical_distance(z, net.generators[static_cast<std::size_t>(i)].bus,
                                                 net.generators[static_cast<std::size_t>(j)].bus);
            dist(i, j) = dist(j, i) = d;
        }
    const EmbedResult embedding = embed_coordinates(dist, dim);
    const std::vector<double> masses = particle_masses(net);

    ParticleSet ps;
    for (Eigen::Index i = 0; i < m; ++i) {
        Particle p;
        p.gen_index = static_cast<int>(i);
        p.bus = net.generators[static_cast<std::size_t>(i)].bus;
        p.kind = net.generators[static_cast<std::size_t>(i)].kind();
        p.mass = masses[static_cast<std::size_t>(i)];
        p.coord = embedding.coords.row(i);
        ps.particles.push_back(std::move(p));
    }
    return ps;
}

struct CenterOfMass {
    Eigen::VectorXd r;         // mass-weighted mean coordinate
    double m_total = 0.0;
    int nearest_bus = 0;       // generator bus closest to r (ties: lowest id)
    double dist_to_nearest_sm = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd residual;  // sum m_i (r_i - R); zero up to roundoff
};

inline CenterOfMass center_of_mass(const ParticleSet& ps) {
    if (ps.particles.empty()) throw SemanticError("center_of_mass: empty particle set");
    const int dim = ps.dim();
    double m_total = 0.0;
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(dim);
    for (const Particle& p : ps.particles) {
        if (p.mass < 0) throw SemanticError("center_of_mass: negative mass");
        if (p.coord.size() != dim)
            throw SemanticError("center_of_mass: inconsistent coordinate dimension");
        m_total += p.mass;
        weighted += p.mass * p.coord;
    }
    if (m_total <= 0) throw SemanticError("center_of_mass: total mass must be > 0");

    CenterOfMass com;
    com.m_total = m_total;
    com.r = weighted / m_total;

    com.residual = Eigen::VectorXd::Zero(dim);
    for (const Particle& p : ps.particles) com.residual += p.mass * (p.coord - com.r);

    double best = std::numeric_limits<double>::infinity();
    int best_bus = std::numeric_limits<int>::max();
    double best_sm = std::numeric_limits<double>::infinity();
    bool any_sm = false;
    for (const Particle& p : ps.particles) {
        const double d = (p.coord - com.r).norm();
        if (d < best - 1e-15 || (std::abs(d - best) <= 1e-15 && p.bus < best_bus)) {
            best = d;
            best_bus = p.bus;
        }
        if (p.kind == GenKind::sm) {
            any_sm = true;
            best_sm = std::min(best_sm, d);
        }
    }
    com.nearest_bus = best_bus;
    if (any_sm) com.dist_to_nearest_sm = best_sm;
    return com;
}

struct ComDisplacement {
    Eigen::VectorXd shift;  // R_after - R_before
    double dist_before = 0.0, dist_after = 0.0;
    double ddist_to_nearest_sm = 0.0;
};

/// Requires both sets to live in the same embedding (same generator buses,
/// same dimension); only the masses/kinds may differ.
inline ComDisplacement com_displacement(const ParticleSet& before, const CenterOfMass& com_before,
                                        const ParticleSet& after, const CenterOfMass& com_after) {
    if (before.particles.size() != after.particles.size() || before.dim() != after.dim())
        throw SemanticError("com_displacement: mismatched embeddings");
    for (std::size_t i = 0; i < before.particles.size(); ++i)
        if (before.particles[i].bus != after.particles[i].bus)
            throw SemanticError("com_displacement: mismatched embeddings (bus sets differ)");

    ComDisplacement out;
    out.shift = com_after.r - com_before.r;
    out.dist_before = com_before.dist_to_nearest_sm;
    out.dist_after = com_after.dist_to_nearest_sm;
    out.ddist_to_nearest_sm = out.dist_after - out.dist_before;
    return out;
}

struct SettleOptions {
    double window_s = 1.0;       // measurement window at the end of the series
    double v_pp_tol = 0.002;     // peak-to-peak ceiling for "settled", p.u.
    double omega_pp_tol = 0.01;  // rad/s, for speed-deviation windows
};

struct SettledValue {
    bool settled = false;
    double value = 0.0;
    double peak_to_peak = 0.0;
};

/// Mean over the window [t_end - window, t_end], flagged unsettled when the
/// peak-to-peak variation in the window exceeds `pp_tol`.
inline SettledValue settled_window(const Trajectory& traj, const Eigen::VectorXd& series,
                                   double t_end, double window_s, double pp_tol) {
    if (series.size() != traj.samples())
        throw SemanticError("settled_window: series length mismatch");
    const double t0 = t_end - window_s;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < traj.samples(); ++i) {
        const double t = traj.t[static_cast<std::size_t>(i)];
        if (t < t0 - 1e-12 || t > t_end + 1e-12) continue;
        lo = std::min(lo, series(i));
        hi = std::max(hi, series(i));
        sum += series(i);
        ++count;
    }
    if (count == 0) throw SemanticError("settled_window: empty window");
    SettledValue out;
    out.peak_to_peak = hi - lo;
    out.value = sum / static_cast<double>(count);
    out.settled = out.peak_to_peak < pp_tol;
    return out;
}

struct OrbitGap {
    int bus = 0;
    double dv = 0.0;      // V_vsg - SM cluster reference, p.u., signed
    double dp_mw = 0.0;   // settled P_vsg - SM cluster mean, MW
    double radius = 0.0;  // electrical distance to the nearest SM bus, p.u.
    int quantum_number = 0;
};

struct OrbitReport {
    bool settled = false;
    std::string unsettled_reason;
    std::vector<int> nucleus_buses;   // SM generator buses
    std::vector<int> orbital_buses;   // VSG generator buses
    std::map<int, double> v_settled;  // per generator bus, p.u.
    std::map<int, double> p_settled_mw;
    double sm_spread = 0.0;  // max pairwise |dV| across SM buses
    std::vector<OrbitGap> gaps;
    double q_unit = 0.0;
};

enum class SmReference { cluster_mean, nearest_sm };

/// Classifies settled post-fault terminal voltages into the nucleus (SM) and
/// orbital (VSG) structure: SM spread, per-VSG voltage gap, impedance radius
/// to the nearest SM, and the integer level n = round(|dV| / q_unit).
inline OrbitReport orbit_report(const Trajectory& traj, const NetworkCase& net, double q_unit,
                                const ImpedanceMatrix& z, SettleOptions opts = {},
                                SmReference reference = SmReference::cluster_mean) {
    if (q_unit <= 0) throw SemanticError("orbit_report: q_unit must be > 0");
    OrbitReport report;
    report.q_unit = q_unit;

    if (traj.lost_sync) {
        report.unsettled_reason = "loss of synchronism at t = " +
                                  std::to_string(traj.lost_sync_time) + " s";
        return report;
    }
    const double t_end = traj.t.back();

    struct GenReading {
        int bus;
        GenKind kind;
        double v, p_mw;
    };
    std::vector<GenReading> readings;
    for (std::size_t gi = 0; gi < net.generators.size(); ++gi) {
        const Generator& g = net.generators[gi];
        const Eigen::Index bcol = traj.bus_column(g.bus);
        const SettledValue v = settled_window(traj, traj.v_bus.col(bcol), t_end, opts.window_s,
                                              opts.v_pp_tol);
        if (!v.settled) {
            report.unsettled_reason = "bus " + std::to_string(g.bus) +
                                      " voltage peak-to-peak " + std::to_string(v.peak_to_peak) +
                                      " p.u. exceeds " + std::to_string(opts.v_pp_tol);
            return report;
        }
        // Power is read over the same window; the voltage gate decides
        // settledness.
        const SettledValue p = settled_window(traj, traj.p_e.col(static_cast<Eigen::Index>(gi)),
                                              t_end, opts.window_s,
                                              std::numeric_limits<double>::infinity());
        readings.push_back({g.bus, g.kind(), v.value, p.value * net.base_mva});
    }

    report.settled = true;
    std::vector<const GenReading*> sms, vsgs;
    for (const GenReading& r : readings) {
        report.v_settled[r.bus] = r.v;
        report.p_settled_mw[r.bus] = r.p_mw;
        (r.kind == GenKind::sm ? sms : vsgs).push_back(&r);
        (r.kind == GenKind::sm ? report.nucleus_buses : report.orbital_buses).push_back(r.bus);
    }

    for (std::size_t i = 0; i < sms.size(); ++i)
        for (std::size_t j = i + 1; j < sms.size(); ++j)
            report.sm_spread = std::max(report.sm_spread, std::abs(sms[i]->v - sms[j]->v));

    if (sms.empty()) return report;  // nothing to reference gaps against

    double v_mean = 0.0, p_mean = 0.0;
    for (const GenReading* r : sms) {
        v_mean += r->v;
        p_mean += r->p_mw;
    }
    v_mean /= static_cast<double>(sms.size());
    p_mean /= static_cast<double>(sms.size());

    for (const GenReading* r : vsgs) {
        OrbitGap gap;
        gap.bus = r->bus;

        int nearest_sm = sms.front()->bus;
        double best = std::numeric_limits<double>::infinity();
        for (const GenReading* s : sms) {
            const double d = electrical_distance(z, r->bus, s->bus);
            if (d < best - 1e-15 || (std::abs(d - best) <= 1e-15 && s->bus < nearest_sm)) {
                best = d;
                nearest_sm = s->bus;
            }
        }
        gap.radius = best;

        double v_ref = v_mean, p_ref = p_mean;
        if (reference == SmReference::nearest_sm) {
            for (const GenReading* s : sms)
                if (s->bus == nearest_sm) {
                    v_ref = s->v;
                    p_ref = s->p_mw;
                }
        }
        gap.dv = r->v - v_ref;
        gap.dp_mw = r->p_mw - p_ref;
        gap.quantum_number = static_cast<int>(std::lround(std::abs(gap.dv) / q_unit));
        report.gaps.push_back(gap);
    }
    return report;
}

struct ActivationRecord {
    int bus = 0;
    GenKind kind = GenKind::sm;
    double e_before_j = 0.0;
    double e_after_j = 0.0;
    double delta_e_j = 0.0;      // E_after - E_before
    double freq_dev_hz = 0.0;    // settled speed deviation / 2 pi
    bool windows_settled = false;
};

/// Stored-energy change of one machine between two settled instants.
/// SM: rotational kinetic energy (1/2) J (omega_s + omega_dev)^2 with
/// J = 2 H S / omega_s^2. VSG: capacitor energy (1/2) C v_eq^2 where the
/// equivalent DC voltage scales linearly with the settled terminal voltage
/// (v_eq = v_dc at 1.0 p.u.) — the coupling convention lives here only.
inline ActivationRecord activation_energy(const Trajectory& traj, const NetworkCase& net,
                                          int gen_bus, double t_before, double t_after,
                                          SettleOptions opts = {}, bool require_settled = true) {
    const auto gens = net.generator_indices_at(gen_bus);
    if (gens.empty())
        throw SemanticError("activation_energy: no generator at bus " + std::to_string(gen_bus));
    const Generator& g = net.generators[static_cast<std::size_t>(gens.front())];

    const double t_first = traj.t.front(), t_last = traj.t.back();
    for (double t : {t_before, t_after})
        if (t < t_first - 1e-12 || t > t_last + 1e-12)
            throw SemanticError("activation_energy: time outside trajectory");

    Eigen::Index mach = -1;
    for (std::size_t i = 0; i < traj.machine_buses.size(); ++i)
        if (traj.machine_buses[i] == gen_bus) mach = static_cast<Eigen::Index>(i);
    if (mach < 0) throw InternalError("activation_energy: machine column not found");
    const Eigen::Index bcol = traj.bus_column(gen_bus);

    const double omega_s = net.omega_s();
    const double window = std::min(opts.window_s, t_before - t_first);

    auto energy_at = [&](double t_end, bool& settled) {
        const double w = std::max(std::min(opts.window_s, t_end - t_first), traj.dt);
        if (g.kind() == GenKind::sm) {
            const SettledValue om = settled_window(traj, traj.omega_dev.col(mach), t_end, w,
                                                   opts.omega_pp_tol);
            settled = om.settled;
            const double j = 2.0 * g.sm().h_s * g.s_rated_mva * 1e6 / (omega_s * omega_s);
            const double omega = omega_s + om.value;
            return 0.5 * j * omega * omega;
        }
        const SettledValue vt = settled_window(traj, traj.v_bus.col(bcol), t_end, w, opts.v_pp_tol);
        settled = vt.settled;
        const double v_eq = g.vsg().v_dc_v * vt.value;
        return 0.5 * g.vsg().c_dc_f * v_eq * v_eq;
    };
    (void)window;

    ActivationRecord rec;
    rec.bus = gen_bus;
    rec.kind = g.kind();
    bool s1 = false, s2 = false;
    rec.e_before_j = energy_at(t_before, s1);
    rec.e_after_j = energy_at(t_after, s2);
    rec.windows_settled = s1 && s2;
    if (require_settled && !rec.windows_settled)
        throw SemanticError("activation_energy: window not settled at bus " +
                            std::to_string(gen_bus));
    rec.delta_e_j = rec.e_after_j - rec.e_before_j;

    const double w_after = std::max(std::min(opts.window_s, t_after - t_first), traj.dt);
    rec.freq_dev_hz = settled_window(traj, traj.omega_dev.col(mach), t_after, w_after,
                                     std::numeric_limits<double>::infinity())
                          .value /
                      (2.0 * std::numbers::pi);
    return rec;
}

} // namespace atomgrid
