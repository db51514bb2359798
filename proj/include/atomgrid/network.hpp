#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "atomgrid/errors.hpp"

namespace atomgrid {

enum class BusKind { slack, pv, pq };
enum class GenKind { sm, vsg };

inline const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::slack: return "slack";
        case BusKind::pv: return "pv";
        case BusKind::pq: return "pq";
    }
    return "?";
}

inline const char* to_string(GenKind k) {
    return k == GenKind::sm ? "sm" : "vsg";
}

struct Bus {
    int id = 0;
    BusKind kind = BusKind::pq;
    double base_kv = 0.0;
    double v_setpoint = 1.0;  // respected at pv/slack buses only
    double load_p_mw = 0.0;
    double load_q_mvar = 0.0;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;        // series resistance, p.u. on system base
    double x = 0.0;        // series reactance, p.u., must be > 0
    double b_shunt = 0.0;  // total line charging susceptance, p.u.
    double tap = 1.0;      // off-nominal turns ratio on the `from` side

    bool operator==(const Branch&) const = default;
};

struct SmParams {
    double h_s = 5.0;       // inertia constant, seconds, on the machine rating
    double xd_prime = 0.15; // transient reactance, p.u. on system base
    double d = 2.0;         // damping, p.u. torque per p.u. speed deviation
    bool operator==(const SmParams&) const = default;
};

struct VsgParams {
    double c_dc_f = 0.01;    // DC-link capacitance, farads
    double v_dc_v = 10000.0; // DC-link voltage, volts
    double xd_prime = 0.15;  // coupling reactance, p.u. on system base
    double d = 2.0;          // damping, p.u. torque per p.u. speed deviation
    bool operator==(const VsgParams&) const = default;
};

struct Generator {
    int bus = 0;
    double s_rated_mva = 100.0;
    double p_dispatch_mw = 0.0;
    std::variant<SmParams, VsgParams> params = SmParams{};
    std::optional<double> q_min_mvar;  // reactive limits, enforced on request
    std::optional<double> q_max_mvar;

    GenKind kind() const {
        return std::holds_alternative<SmParams>(params) ? GenKind::sm : GenKind::vsg;
    }
    const SmParams& sm() const { return std::get<SmParams>(params); }
    const VsgParams& vsg() const { return std::get<VsgParams>(params); }
    double xd_prime() const {
        return kind() == GenKind::sm ? sm().xd_prime : vsg().xd_prime;
    }
    double damping() const { return kind() == GenKind::sm ? sm().d : vsg().d; }

    bool operator==(const Generator&) const = default;
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    double f_nominal_hz = 60.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    bool operator==(const NetworkCase&) const = default;

    double omega_s() const { return 2.0 * std::numbers::pi * f_nominal_hz; }

    int bus_index(int id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return static_cast<int>(i);
        throw SemanticError("unknown bus id " + std::to_string(id) + " in case '" + name + "'");
    }

    const Bus& bus(int id) const { return buses[static_cast<std::size_t>(bus_index(id))]; }

    bool has_bus(int id) const {
        return std::any_of(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
    }

    const Bus& slack_bus() const {
        for (const Bus& b : buses)
            if (b.kind == BusKind::slack) return b;
        throw SemanticError("case '" + name + "' has no slack bus");
    }

    std::vector<int> generator_indices_at(int bus_id) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < generators.size(); ++i)
            if (generators[i].bus == bus_id) out.push_back(static_cast<int>(i));
        return out;
    }

    /// Checks every structural invariant; throws SemanticError on the first
    /// violation, naming the offending element.
    void validate() const {
        if (base_mva <= 0) throw SemanticError("base_mva must be > 0");
        if (f_nominal_hz <= 0) throw SemanticError("f_nominal_hz must be > 0");
        if (buses.empty()) throw SemanticError("case has no buses");

        std::set<int> ids;
        std::vector<int> slacks;
        for (const Bus& b : buses) {
            if (b.id < 1) throw SemanticError("bus id must be >= 1, got " + std::to_string(b.id));
            if (!ids.insert(b.id).second)
                throw SemanticError("duplicate bus id " + std::to_string(b.id));
            if (b.base_kv <= 0)
                throw SemanticError("bus " + std::to_string(b.id) + ": base_kv must be > 0");
            if (b.load_p_mw < 0)
                throw SemanticError("bus " + std::to_string(b.id) + ": load_p_mw must be >= 0");
            if (b.kind != BusKind::pq && b.v_setpoint <= 0)
                throw SemanticError("bus " + std::to_string(b.id) + ": v_setpoint must be > 0");
            if (b.kind == BusKind::slack) slacks.push_back(b.id);
        }
        if (slacks.empty()) throw SemanticError("no slack bus defined");
        if (slacks.size() > 1) {
            std::string msg = "more than one slack bus:";
            for (int id : slacks) msg += " " + std::to_string(id);
            throw SemanticError(msg);
        }

        for (const Branch& br : branches) {
            std::string tag = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
            if (br.from == br.to) throw SemanticError(tag + ": from == to");
            if (!ids.count(br.from)) throw SemanticError(tag + ": unknown from bus");
            if (!ids.count(br.to)) throw SemanticError(tag + ": unknown to bus");
            if (br.r < 0) throw SemanticError(tag + ": r must be >= 0");
            if (br.x <= 0) throw SemanticError(tag + ": x must be > 0");
            if (br.b_shunt < 0) throw SemanticError(tag + ": b_shunt must be >= 0");
            if (br.tap <= 0) throw SemanticError(tag + ": tap must be > 0");
        }

        if (generators.empty()) throw SemanticError("case has no generators");
        for (const Generator& g : generators) {
            std::string tag = "generator at bus " + std::to_string(g.bus);
            if (!ids.count(g.bus)) throw SemanticError(tag + ": unknown bus");
            if (bus(g.bus).kind == BusKind::pq)
                throw SemanticError(tag + ": generator bus must be pv or slack");
            if (g.s_rated_mva <= 0) throw SemanticError(tag + ": s_rated_mva must be > 0");
            if (g.kind() == GenKind::sm) {
                if (g.sm().h_s <= 0) throw SemanticError(tag + ": h_s must be > 0");
                if (g.sm().xd_prime <= 0) throw SemanticError(tag + ": xd_prime must be > 0");
                if (g.sm().d < 0) throw SemanticError(tag + ": d must be >= 0");
            } else {
                if (g.vsg().c_dc_f <= 0) throw SemanticError(tag + ": c_dc_f must be > 0");
                if (g.vsg().v_dc_v <= 0) throw SemanticError(tag + ": v_dc_v must be > 0");
                if (g.vsg().xd_prime <= 0) throw SemanticError(tag + ": xd_prime must be > 0");
                if (g.vsg().d < 0) throw SemanticError(tag + ": d must be >= 0");
            }
        }

        check_connected();
    }

  private:
    void check_connected() const {
        if (buses.empty()) return;
        std::set<int> seen{buses.front().id};
        std::vector<int> frontier{buses.front().id};
        while (!frontier.empty()) {
            int cur = frontier.back();
            frontier.pop_back();
            for (const Branch& br : branches) {
                int other = -1;
                if (br.from == cur) other = br.to;
                else if (br.to == cur) other = br.from;
                else continue;
                if (seen.insert(other).second) frontier.push_back(other);
            }
        }
        for (const Bus& b : buses)
            if (!seen.count(b.id))
                throw SemanticError("network is not connected: bus " + std::to_string(b.id) +
                                    " unreachable from bus " + std::to_string(buses.front().id));
    }
};

} // namespace atomgrid
