#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atomgrid/anatomy.hpp"
#include "atomgrid/case_io.hpp"
#include "atomgrid/dynamics.hpp"
#include "atomgrid/network.hpp"
#include "atomgrid/powerflow.hpp"

namespace atomgrid {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Column labels for machines: the generator bus id, disambiguated when a bus
// hosts more than one machine.
inline std::vector<std::string> machine_labels(const std::vector<int>& machine_buses) {
    std::vector<std::string> labels;
    std::map<int, int> seen;
    for (int bus : machine_buses) {
        const int k = ++seen[bus];
        labels.push_back(k == 1 ? std::to_string(bus)
                                : std::to_string(bus) + "_" + std::to_string(k));
    }
    return labels;
}

} // namespace detail

/// CSV with one row per sample: t, per-machine angles and speed deviations,
/// per-bus voltage magnitudes, per-machine electrical power (system p.u.).
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t";
    const std::vector<std::string> gen = detail::machine_labels(traj.machine_buses);
    for (const auto& g : gen) out += ",delta_" + g;
    for (const auto& g : gen) out += ",omega_" + g;
    for (int b : traj.bus_ids) out += ",v_" + std::to_string(b);
    for (const auto& g : gen) out += ",pe_" + g;
    out += "\n";
    for (Eigen::Index k = 0; k < traj.samples(); ++k) {
        out += detail::num(traj.t[static_cast<std::size_t>(k)]);
        for (Eigen::Index c = 0; c < traj.delta.cols(); ++c)
            out += "," + detail::num(traj.delta(k, c));
        for (Eigen::Index c = 0; c < traj.omega_dev.cols(); ++c)
            out += "," + detail::num(traj.omega_dev(k, c));
        for (Eigen::Index c = 0; c < traj.v_bus.cols(); ++c)
            out += "," + detail::num(traj.v_bus(k, c));
        for (Eigen::Index c = 0; c < traj.p_e.cols(); ++c)
            out += "," + detail::num(traj.p_e(k, c));
        out += "\n";
    }
    return out;
}

inline Json solution_json(const NetworkCase& net, const PowerFlowSolution& sol) {
    Json doc;
    doc["case"] = net.name;
    doc["iterations"] = sol.iterations;
    doc["max_mismatch_pu"] = sol.max_mismatch;
    Json buses = Json::object();
    for (std::size_t i = 0; i < sol.bus_ids.size(); ++i) {
        Json b;
        b["v_pu"] = std::abs(sol.v(static_cast<Eigen::Index>(i)));
        b["theta_rad"] = std::arg(sol.v(static_cast<Eigen::Index>(i)));
        buses[std::to_string(sol.bus_ids[i])] = b;
    }
    doc["buses"] = buses;
    Json gens = Json::array();
    for (const GeneratorInjection& g : sol.gen) {
        Json j;
        j["bus"] = g.bus;
        j["p_mw"] = g.p_mw;
        j["q_mvar"] = g.q_mvar;
        gens.push_back(j);
    }
    doc["generators"] = gens;
    return doc;
}

inline Json events_json(const EventSchedule& schedule) {
    Json arr = Json::array();
    for (const Event& e : schedule.events) {
        Json j;
        j["t"] = e.t;
        switch (e.action) {
            case Event::Action::apply_fault:
                j["action"] = "apply_fault";
                j["bus"] = e.bus;
                j["y_fault_g"] = e.y_fault.real();
                j["y_fault_b"] = e.y_fault.imag();
                break;
            case Event::Action::clear_fault:
                j["action"] = "clear_fault";
                break;
            case Event::Action::trip_branch:
                j["action"] = "trip_branch";
                j["from"] = e.from;
                j["to"] = e.to;
                break;
        }
        arr.push_back(j);
    }
    return arr;
}

inline Json particles_json(const ParticleSet& ps, const CenterOfMass& com) {
    Json doc;
    Json arr = Json::array();
    for (const Particle& p : ps.particles) {
        Json j;
        j["bus"] = p.bus;
        j["kind"] = to_string(p.kind);
        j["mass"] = p.mass;
        Json coord = Json::array();
        for (Eigen::Index k = 0; k < p.coord.size(); ++k) coord.push_back(p.coord(k));
        j["coord"] = coord;
        arr.push_back(j);
    }
    doc["particles"] = arr;
    Json c;
    Json r = Json::array();
    for (Eigen::Index k = 0; k < com.r.size(); ++k) r.push_back(com.r(k));
    c["r"] = r;
    c["m_total"] = com.m_total;
    c["nearest_bus"] = com.nearest_bus;
    if (std::isnan(com.dist_to_nearest_sm))
        c["dist_to_nearest_sm"] = nullptr;
    else
        c["dist_to_nearest_sm"] = com.dist_to_nearest_sm;
    c["residual_norm"] = com.residual.norm();
    doc["com"] = c;
    return doc;
}

inline Json orbit_report_json(const OrbitReport& rep) {
    Json doc;
    doc["settled"] = rep.settled;
    if (!rep.settled) {
        doc["unsettled_reason"] = rep.unsettled_reason;
        return doc;
    }
    doc["q_unit"] = rep.q_unit;
    doc["nucleus_buses"] = rep.nucleus_buses;
    doc["orbital_buses"] = rep.orbital_buses;
    doc["sm_spread_pu"] = rep.sm_spread;
    Json v = Json::object(), p = Json::object();
    for (const auto& [bus, val] : rep.v_settled) v[std::to_string(bus)] = val;
    for (const auto& [bus, val] : rep.p_settled_mw) p[std::to_string(bus)] = val;
    doc["v_settled_pu"] = v;
    doc["p_settled_mw"] = p;
    Json gaps = Json::array();
    for (const OrbitGap& g : rep.gaps) {
        Json j;
        j["bus"] = g.bus;
        j["dv_pu"] = g.dv;
        j["dp_mw"] = g.dp_mw;
        j["radius_pu"] = g.radius;
        j["n"] = g.quantum_number;
        gaps.push_back(j);
    }
    doc["gaps"] = gaps;
    return doc;
}

inline Json activation_json(const std::vector<ActivationRecord>& records) {
    Json arr = Json::array();
    for (const ActivationRecord& r : records) {
        Json j;
        j["bus"] = r.bus;
        j["kind"] = to_string(r.kind);
        j["e_before_j"] = r.e_before_j;
        j["e_after_j"] = r.e_after_j;
        j["delta_e_j"] = r.delta_e_j;
        j["freq_dev_hz"] = r.freq_dev_hz;
        j["windows_settled"] = r.windows_settled;
        arr.push_back(j);
    }
    return arr;
}

/// Plain-text rendering in the role/bus/V/P column layout. ANSI bold on the
/// header unless disabled.
inline std::string report_table(const NetworkCase& net, const OrbitReport& rep, bool color) {
    const char* bold = color ? "\033[1m" : "";
    const char* dim = color ? "\033[2m" : "";
    const char* reset = color ? "\033[0m" : "";
    char line[160];
    std::string out;

    out += std::string(bold) + "case: " + net.name + reset + "\n";
    if (!rep.settled) {
        out += "trajectory not settled: " + rep.unsettled_reason + "\n";
        out += "no steady-state readings reported\n";
        return out;
    }
    std::snprintf(line, sizeof(line), "%s%-9s %4s %10s %10s %12s %10s %5s%s\n", bold, "role",
                  "bus", "V [p.u.]", "P [MW]", "dV [p.u.]", "r [p.u.]", "n", reset);
    out += line;
    for (int bus : rep.nucleus_buses) {
        std::snprintf(line, sizeof(line), "%-9s %4d %10.4f %10.1f %12s %10s %5s\n", "nucleus",
                      bus, rep.v_settled.at(bus), rep.p_settled_mw.at(bus), "-", "-", "-");
        out += line;
    }
    for (const OrbitGap& g : rep.gaps) {
        std::snprintf(line, sizeof(line), "%-9s %4d %10.4f %10.1f %+12.4f %10.4f %5d\n",
                      "orbital", g.bus, rep.v_settled.at(g.bus), rep.p_settled_mw.at(g.bus), g.dv,
                      g.radius, g.quantum_number);
        out += line;
    }
    if (!rep.gaps.empty()) {
        std::snprintf(line, sizeof(line), "%ssm spread %.4f p.u., q_unit %g p.u.%s\n", dim,
                      rep.sm_spread, rep.q_unit, reset);
        out += line;
    }
    return out;
}

} // namespace atomgrid
