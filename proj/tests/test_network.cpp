#include <catch2/catch_amalgamated.hpp>

#include "atomgrid/builtin_cases.hpp"
#include "atomgrid/case_io.hpp"
#include "atomgrid/network.hpp"

using namespace atomgrid;

namespace {

const char* kMinimalCase = R"({
  "name": "two-bus",
  "base_mva": 100.0,
  "f_nominal_hz": 60.0,
  "buses": [
    {"id": 1, "kind": "slack", "base_kv": 230.0, "v_setpoint": 1.0},
    {"id": 2, "kind": "pq", "base_kv": 230.0, "load_p_mw": 50.0, "load_q_mvar": 10.0}
  ],
  "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1}],
  "generators": [{"bus": 1, "kind": "sm", "s_rated_mva": 100.0, "h_s": 5.0, "xd_prime": 0.2}]
})";

} // namespace

TEST_CASE("minimal two-bus case parses with defaults") {
    const NetworkCase net = parse_case(kMinimalCase);
    REQUIRE(net.buses.size() == 2);
    REQUIRE(net.branches.size() == 1);
    REQUIRE(net.generators.size() == 1);
    CHECK(net.branches[0].tap == 1.0);
    CHECK(net.branches[0].b_shunt == 0.0);
    CHECK(net.generators[0].sm().d == 2.0);
    CHECK(net.generators[0].p_dispatch_mw == 0.0);
}

TEST_CASE("built-in cases round-trip through serialize/parse") {
    for (const char* name : {"ieee9", "ieee39"}) {
        const NetworkCase net = builtin_case(name);
        const NetworkCase back = parse_case(serialize_case(net));
        CHECK(back == net);
    }
}

TEST_CASE("two slack buses are rejected naming both") {
    NetworkCase net = ieee9_case();
    net.buses[1].kind = BusKind::slack;
    try {
        net.validate();
        FAIL("expected SemanticError");
    } catch (const SemanticError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("1") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("schema violations carry a location") {
    SECTION("unknown key") {
        std::string text = kMinimalCase;
        text.replace(text.find("\"load_p_mw\""), 11, "\"load_p\"");
        try {
            parse_case(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("buses[1]") != std::string::npos);
        }
    }
    SECTION("wrong type") {
        std::string text = kMinimalCase;
        text.replace(text.find("100.0"), 5, "\"1e2\"");
        CHECK_THROWS_AS(parse_case(text), ParseError);
    }
    SECTION("sm fields on a vsg") {
        std::string text = kMinimalCase;
        text.replace(text.find("\"kind\": \"sm\""), 12, "\"kind\": \"vsg\"");
        CHECK_THROWS_AS(parse_case(text), ParseError);
    }
    SECTION("not json at all") {
        CHECK_THROWS_AS(parse_case("buses: [..."), ParseError);
    }
}

TEST_CASE("semantic violations are detected") {
    NetworkCase net = parse_case(kMinimalCase);

    SECTION("duplicate bus id") {
        net.buses[1].id = 1;
        CHECK_THROWS_AS(net.validate(), SemanticError);
    }
    SECTION("dangling branch") {
        net.branches[0].to = 7;
        CHECK_THROWS_AS(net.validate(), SemanticError);
    }
    SECTION("no slack") {
        net.buses[0].kind = BusKind::pv;
        CHECK_THROWS_AS(net.validate(), SemanticError);
    }
    SECTION("generator on pq bus") {
        net.generators[0].bus = 2;
        CHECK_THROWS_AS(net.validate(), SemanticError);
    }
    SECTION("disconnected bus") {
        Bus extra;
        extra.id = 3;
        extra.kind = BusKind::pq;
        extra.base_kv = 230.0;
        net.buses.push_back(extra);
        CHECK_THROWS_AS(net.validate(), SemanticError);
    }
}

TEST_CASE("built-in case shapes") {
    const NetworkCase nine = builtin_case("ieee9");
    REQUIRE(nine.buses.size() == 9);
    REQUIRE(nine.branches.size() == 9);
    REQUIRE(nine.generators.size() == 3);
    CHECK(nine.generators[0].bus == 1);
    CHECK(nine.generators[1].bus == 2);
    CHECK(nine.generators[2].bus == 3);
    int slacks = 0;
    for (const Bus& b : nine.buses)
        if (b.kind == BusKind::slack) ++slacks;
    CHECK(slacks == 1);
    for (const Generator& g : nine.generators) CHECK(g.kind() == GenKind::sm);

    const NetworkCase big = builtin_case("ieee39");
    REQUIRE(big.buses.size() == 39);
    REQUIRE(big.generators.size() == 10);
    std::vector<int> gen_buses;
    for (const Generator& g : big.generators) gen_buses.push_back(g.bus);
    for (int bus : {30, 31, 32, 33, 34, 35, 36, 37, 38, 39})
        CHECK(std::find(gen_buses.begin(), gen_buses.end(), bus) != gen_buses.end());

    CHECK_THROWS_AS(builtin_case("ieee118"), SemanticError);
}

TEST_CASE("overlays re-type, add, move and remove generators") {
    const NetworkCase base = builtin_case("ieee9");

    SECTION("re-type bus 3 to vsg, inheriting the footprint") {
        const NetworkCase out = apply_overlay(
            base, R"([{"bus": 3, "kind": "vsg", "params": {"c_dc_f": 0.02, "v_dc_v": 9000}}])");
        const auto idx = out.generator_indices_at(3);
        REQUIRE(idx.size() == 1);
        const Generator& g = out.generators[static_cast<std::size_t>(idx[0])];
        CHECK(g.kind() == GenKind::vsg);
        CHECK(g.vsg().xd_prime == base.generators[2].sm().xd_prime);
        CHECK(g.p_dispatch_mw == 85.0);
        CHECK(g.vsg().c_dc_f == 0.02);
    }
    SECTION("add a generator at a load bus") {
        const NetworkCase out = apply_overlay(
            base,
            R"([{"bus": 6, "kind": "vsg", "p_dispatch_mw": 120, "v_setpoint": 1.01},
                {"bus": 2, "kind": "none"}])");
        CHECK(out.generators.size() == 3);
        CHECK(out.bus(6).kind == BusKind::pv);
        CHECK(out.bus(6).v_setpoint == 1.01);
        CHECK(out.bus(2).kind == BusKind::pq);
        CHECK(out.generator_indices_at(2).empty());
    }
    SECTION("load override") {
        const NetworkCase out = apply_overlay(base, R"([{"bus": 5, "load_p_mw": 200}])");
        CHECK(out.bus(5).load_p_mw == 200.0);
        CHECK(out.bus(5).load_q_mvar == 50.0);
    }
    SECTION("removing the slack generator is rejected") {
        CHECK_THROWS_AS(apply_overlay(base, R"([{"bus": 1, "kind": "none"}])"), SemanticError);
    }
    SECTION("unknown bus is rejected") {
        CHECK_THROWS_AS(apply_overlay(base, R"([{"bus": 77, "kind": "none"}])"), SemanticError);
    }
}
