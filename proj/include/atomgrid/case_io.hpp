#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "atomgrid/builtin_cases.hpp"
#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"

namespace atomgrid {

using Json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ParseError(where + ": unknown key '" + key + "'");
    }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing required key '" + key + "'");
    return *it;
}

inline double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    return v.get<double>();
}

inline int as_int(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
    return v.get<int>();
}

inline std::string as_string(const Json& v, const std::string& where) {
    if (!v.is_string()) throw ParseError(where + ": expected a string");
    return v.get<std::string>();
}

inline double opt_number(const Json& obj, const std::string& key, double fallback,
                         const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, where + "." + key);
}

inline BusKind parse_bus_kind(const std::string& s, const std::string& where) {
    if (s == "slack") return BusKind::slack;
    if (s == "pv") return BusKind::pv;
    if (s == "pq") return BusKind::pq;
    throw ParseError(where + ": bus kind must be one of slack|pv|pq, got '" + s + "'");
}

inline Generator parse_generator(const Json& g, const std::string& where) {
    check_keys(g, {"bus", "kind", "s_rated_mva", "p_dispatch_mw", "h_s", "xd_prime", "d",
                   "c_dc_f", "v_dc_v", "q_min_mvar", "q_max_mvar"},
               where);
    Generator gen;
    gen.bus = as_int(require(g, "bus", where), where + ".bus");
    gen.s_rated_mva = as_number(require(g, "s_rated_mva", where), where + ".s_rated_mva");
    gen.p_dispatch_mw = opt_number(g, "p_dispatch_mw", 0.0, where);
    const std::string kind = as_string(require(g, "kind", where), where + ".kind");
    if (kind == "sm") {
        if (g.contains("c_dc_f") || g.contains("v_dc_v"))
            throw ParseError(where + ": c_dc_f/v_dc_v are vsg-only fields");
        SmParams p;
        p.h_s = as_number(require(g, "h_s", where), where + ".h_s");
        p.xd_prime = as_number(require(g, "xd_prime", where), where + ".xd_prime");
        p.d = opt_number(g, "d", 2.0, where);
        gen.params = p;
    } else if (kind == "vsg") {
        if (g.contains("h_s"))
            throw ParseError(where + ": h_s is an sm-only field");
        VsgParams p;
        p.c_dc_f = as_number(require(g, "c_dc_f", where), where + ".c_dc_f");
        p.v_dc_v = as_number(require(g, "v_dc_v", where), where + ".v_dc_v");
        p.xd_prime = as_number(require(g, "xd_prime", where), where + ".xd_prime");
        p.d = opt_number(g, "d", 2.0, where);
        gen.params = p;
    } else {
        throw ParseError(where + ".kind: must be sm or vsg, got '" + kind + "'");
    }
    if (g.contains("q_min_mvar")) gen.q_min_mvar = as_number(g["q_min_mvar"], where + ".q_min_mvar");
    if (g.contains("q_max_mvar")) gen.q_max_mvar = as_number(g["q_max_mvar"], where + ".q_max_mvar");
    return gen;
}

} // namespace detail

/// Parses a case file. Schema violations raise ParseError with the JSON path;
/// structural violations (duplicate ids, no slack, ...) raise SemanticError.
inline NetworkCase parse_case(const std::string& text) {
    using namespace detail;
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("case file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("case file: top level must be an object");
    check_keys(doc, {"name", "base_mva", "f_nominal_hz", "buses", "branches", "generators"},
               "case file");

    NetworkCase net;
    net.name = as_string(require(doc, "name", "case file"), "name");
    net.base_mva = as_number(require(doc, "base_mva", "case file"), "base_mva");
    net.f_nominal_hz = as_number(require(doc, "f_nominal_hz", "case file"), "f_nominal_hz");

    const Json& buses = require(doc, "buses", "case file");
    if (!buses.is_array()) throw ParseError("buses: expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string where = "buses[" + std::to_string(i) + "]";
        const Json& b = buses[i];
        if (!b.is_object()) throw ParseError(where + ": expected an object");
        check_keys(b, {"id", "kind", "base_kv", "v_setpoint", "load_p_mw", "load_q_mvar"}, where);
        Bus bus;
        bus.id = as_int(require(b, "id", where), where + ".id");
        bus.kind = parse_bus_kind(as_string(require(b, "kind", where), where), where + ".kind");
        bus.base_kv = as_number(require(b, "base_kv", where), where + ".base_kv");
        bus.v_setpoint = opt_number(b, "v_setpoint", 1.0, where);
        bus.load_p_mw = opt_number(b, "load_p_mw", 0.0, where);
        bus.load_q_mvar = opt_number(b, "load_q_mvar", 0.0, where);
        net.buses.push_back(bus);
    }

    const Json& branches = require(doc, "branches", "case file");
    if (!branches.is_array()) throw ParseError("branches: expected an array");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string where = "branches[" + std::to_string(i) + "]";
        const Json& b = branches[i];
        if (!b.is_object()) throw ParseError(where + ": expected an object");
        check_keys(b, {"from", "to", "r", "x", "b_shunt", "tap"}, where);
        Branch br;
        br.from = as_int(require(b, "from", where), where + ".from");
        br.to = as_int(require(b, "to", where), where + ".to");
        br.r = opt_number(b, "r", 0.0, where);
        br.x = as_number(require(b, "x", where), where + ".x");
        br.b_shunt = opt_number(b, "b_shunt", 0.0, where);
        br.tap = opt_number(b, "tap", 1.0, where);
        net.branches.push_back(br);
    }

    const Json& gens = require(doc, "generators", "case file");
    if (!gens.is_array()) throw ParseError("generators: expected an array");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const std::string where = "generators[" + std::to_string(i) + "]";
        if (!gens[i].is_object()) throw ParseError(where + ": expected an object");
        net.generators.push_back(detail::parse_generator(gens[i], where));
    }

    net.validate();
    return net;
}

/// Serializes with every field explicit, so parse(serialize(c)) == c.
inline std::string serialize_case(const NetworkCase& net) {
    Json doc;
    doc["name"] = net.name;
    doc["base_mva"] = net.base_mva;
    doc["f_nominal_hz"] = net.f_nominal_hz;
    doc["buses"] = Json::array();
    for (const Bus& b : net.buses) {
        Json j;
        j["id"] = b.id;
        j["kind"] = to_string(b.kind);
        j["base_kv"] = b.base_kv;
        j["v_setpoint"] = b.v_setpoint;
        j["load_p_mw"] = b.load_p_mw;
        j["load_q_mvar"] = b.load_q_mvar;
        doc["buses"].push_back(j);
    }
    doc["branches"] = Json::array();
    for (const Branch& br : net.branches) {
        Json j;
        j["from"] = br.from;
        j["to"] = br.to;
        j["r"] = br.r;
        j["x"] = br.x;
        j["b_shunt"] = br.b_shunt;
        j["tap"] = br.tap;
        doc["branches"].push_back(j);
    }
    doc["generators"] = Json::array();
    for (const Generator& g : net.generators) {
        Json j;
        j["bus"] = g.bus;
        j["kind"] = to_string(g.kind());
        j["s_rated_mva"] = g.s_rated_mva;
        j["p_dispatch_mw"] = g.p_dispatch_mw;
        if (g.kind() == GenKind::sm) {
            j["h_s"] = g.sm().h_s;
            j["xd_prime"] = g.sm().xd_prime;
            j["d"] = g.sm().d;
        } else {
            j["c_dc_f"] = g.vsg().c_dc_f;
            j["v_dc_v"] = g.vsg().v_dc_v;
            j["xd_prime"] = g.vsg().xd_prime;
            j["d"] = g.vsg().d;
        }
        if (g.q_min_mvar) j["q_min_mvar"] = *g.q_min_mvar;
        if (g.q_max_mvar) j["q_max_mvar"] = *g.q_max_mvar;
        doc["generators"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

// An overlay is a JSON array of per-bus patches. Each patch may re-type /
// add / remove the generator at a bus ("kind": "sm" | "vsg" | "none"),
// change its dispatch, move the bus voltage setpoint, and override the load.
// Generator parameters omitted from "params" are inherited from the generator
// being replaced (xd_prime, d, s_rated_mva) or fall back to type defaults.
inline NetworkCase apply_overlay(NetworkCase net, const std::string& overlay_text) {
    using namespace detail;
    Json doc;
    try {
        doc = Json::parse(overlay_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("overlay is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("overlay: top level must be an array of patches");

    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "overlay[" + std::to_string(i) + "]";
        const Json& p = doc[i];
        if (!p.is_object()) throw ParseError(where + ": expected an object");
        check_keys(p, {"bus", "kind", "params", "p_dispatch_mw", "v_setpoint", "load_p_mw",
                       "load_q_mvar"},
                   where);
        const int bus_id = as_int(require(p, "bus", where), where + ".bus");
        if (!net.has_bus(bus_id))
            throw SemanticError(where + ": bus " + std::to_string(bus_id) + " not in case");
        Bus& bus = net.buses[static_cast<std::size_t>(net.bus_index(bus_id))];

        if (p.contains("v_setpoint"))
            bus.v_setpoint = as_number(p["v_setpoint"], where + ".v_setpoint");
        if (p.contains("load_p_mw")) bus.load_p_mw = as_number(p["load_p_mw"], where + ".load_p_mw");
        if (p.contains("load_q_mvar"))
            bus.load_q_mvar = as_number(p["load_q_mvar"], where + ".load_q_mvar");

        if (!p.contains("kind")) {
            if (p.contains("params"))
                throw ParseError(where + ": params requires kind");
            if (p.contains("p_dispatch_mw")) {
                auto idx = net.generator_indices_at(bus_id);
                if (idx.empty())
                    throw SemanticError(where + ": no generator at bus " + std::to_string(bus_id));
                net.generators[static_cast<std::size_t>(idx.front())].p_dispatch_mw =
                    as_number(p["p_dispatch_mw"], where + ".p_dispatch_mw");
            }
            continue;
        }

        const std::string kind = as_string(p["kind"], where + ".kind");
        auto existing = net.generator_indices_at(bus_id);

        if (kind == "none") {
            if (bus.kind == BusKind::slack)
                throw SemanticError(where + ": cannot remove the slack generator");
            std::erase_if(net.generators, [&](const Generator& g) { return g.bus == bus_id; });
            bus.kind = BusKind::pq;
            continue;
        }
        if (kind != "sm" && kind != "vsg")
            throw ParseError(where + ".kind: must be sm, vsg or none");

        Generator gen;
        gen.bus = bus_id;
        // Same-kind patches inherit the full parameter block; cross-kind
        // re-typing inherits the electrical footprint (xd', d) only.
        double inherited_xd = 0.15, inherited_d = 2.0;
        const Generator* old = nullptr;
        if (!existing.empty()) {
            old = &net.generators[static_cast<std::size_t>(existing.front())];
            gen.s_rated_mva = old->s_rated_mva;
            gen.p_dispatch_mw = old->p_dispatch_mw;
            inherited_xd = old->xd_prime();
            inherited_d = old->damping();
        }
        const Json params = p.contains("params") ? p["params"] : Json::object();
        if (!params.is_object()) throw ParseError(where + ".params: expected an object");
        if (kind == "sm") {
            check_keys(params, {"s_rated_mva", "h_s", "xd_prime", "d"}, where + ".params");
            SmParams sp = old && old->kind() == GenKind::sm
                              ? old->sm()
                              : SmParams{5.0, inherited_xd, inherited_d};
            sp.h_s = opt_number(params, "h_s", sp.h_s, where + ".params");
            sp.xd_prime = opt_number(params, "xd_prime", sp.xd_prime, where + ".params");
            sp.d = opt_number(params, "d", sp.d, where + ".params");
            gen.params = sp;
        } else {
            check_keys(params, {"s_rated_mva", "c_dc_f", "v_dc_v", "xd_prime", "d"},
                       where + ".params");
            VsgParams vp = old && old->kind() == GenKind::vsg
                               ? old->vsg()
                               : VsgParams{0.01, 10000.0, inherited_xd, inherited_d};
            vp.c_dc_f = opt_number(params, "c_dc_f", vp.c_dc_f, where + ".params");
            vp.v_dc_v = opt_number(params, "v_dc_v", vp.v_dc_v, where + ".params");
            vp.xd_prime = opt_number(params, "xd_prime", vp.xd_prime, where + ".params");
            vp.d = opt_number(params, "d", vp.d, where + ".params");
            gen.params = vp;
        }
        gen.s_rated_mva = opt_number(params, "s_rated_mva", gen.s_rated_mva, where + ".params");
        if (p.contains("p_dispatch_mw"))
            gen.p_dispatch_mw = as_number(p["p_dispatch_mw"], where + ".p_dispatch_mw");

        std::erase_if(net.generators, [&](const Generator& g) { return g.bus == bus_id; });
        net.generators.push_back(gen);
        if (bus.kind == BusKind::pq) bus.kind = BusKind::pv;
    }

    // Keep generator order stable by bus id so downstream outputs are
    // independent of patch order.
    std::stable_sort(net.generators.begin(), net.generators.end(),
                     [](const Generator& a, const Generator& b) { return a.bus < b.bus; });
    net.validate();
    return net;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Resolves `--case`: a built-in name or a path to a case file.
inline NetworkCase load_case(const std::string& source) {
    if (source == "ieee9" || source == "ieee39") return builtin_case(source);
    return parse_case(read_text_file(source));
}

} // namespace atomgrid
