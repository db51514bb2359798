#pragma once

#include <string>

#include "atomgrid/errors.hpp"
#include "atomgrid/network.hpp"

namespace atomgrid {

// Machine constants in the built-in cases (H, xd') are stated on the 100 MVA
// system base, so s_rated_mva is set to 100 throughout. Paper-style case
// studies re-type and re-rate generators through overlay files.

/// WSCC 3-machine 9-bus system: textbook line data and dispatch.
inline NetworkCase ieee9_case() {
    NetworkCase net;
    net.name = "ieee9";
    net.base_mva = 100.0;
    net.f_nominal_hz = 60.0;

    net.buses = {
        {1, BusKind::slack, 16.5, 1.040, 0.0, 0.0},
        {2, BusKind::pv, 18.0, 1.025, 0.0, 0.0},
        {3, BusKind::pv, 13.8, 1.025, 0.0, 0.0},
        {4, BusKind::pq, 230.0, 1.0, 0.0, 0.0},
        {5, BusKind::pq, 230.0, 1.0, 125.0, 50.0},
        {6, BusKind::pq, 230.0, 1.0, 90.0, 30.0},
        {7, BusKind::pq, 230.0, 1.0, 0.0, 0.0},
        {8, BusKind::pq, 230.0, 1.0, 100.0, 35.0},
        {9, BusKind::pq, 230.0, 1.0, 0.0, 0.0},
    };
    net.branches = {
        {1, 4, 0.0, 0.0576, 0.0, 1.0},
        {2, 7, 0.0, 0.0625, 0.0, 1.0},
        {3, 9, 0.0, 0.0586, 0.0, 1.0},
        {4, 5, 0.010, 0.085, 0.176, 1.0},
        {4, 6, 0.017, 0.092, 0.158, 1.0},
        {5, 7, 0.032, 0.161, 0.306, 1.0},
        {6, 9, 0.039, 0.170, 0.358, 1.0},
        {7, 8, 0.0085, 0.072, 0.149, 1.0},
        {8, 9, 0.0119, 0.1008, 0.209, 1.0},
    };
    net.generators = {
        {1, 100.0, 0.0, SmParams{23.64, 0.0608, 2.0}},
        {2, 100.0, 163.0, SmParams{6.40, 0.1198, 2.0}},
        {3, 100.0, 85.0, SmParams{3.01, 0.1813, 2.0}},
    };
    return net;
}

/// New England 10-machine 39-bus system.
inline NetworkCase ieee39_case() {
    NetworkCase net;
    net.name = "ieee39";
    net.base_mva = 100.0;
    net.f_nominal_hz = 60.0;

    struct BusRow {
        int id;
        double load_p, load_q;
    };
    // Loads; every other bus carries none.
    const BusRow loads[] = {
        {1, 97.6, 44.2},   {3, 322.0, 2.4},    {4, 500.0, 184.0},  {7, 233.8, 84.0},
        {8, 522.0, 176.6}, {9, 6.5, -66.6},    {12, 8.53, 88.0},   {15, 320.0, 153.0},
        {16, 329.0, 32.3}, {18, 158.0, 30.0},  {20, 680.0, 103.0}, {21, 274.0, 115.0},
        {23, 247.5, 84.6}, {24, 308.6, -92.2}, {25, 224.0, 47.2},  {26, 139.0, 17.0},
        {27, 281.0, 75.5}, {28, 206.0, 27.6},  {29, 283.5, 26.9},  {31, 9.2, 4.6},
        {39, 1104.0, 250.0},
    };
    for (int id = 1; id <= 39; ++id) {
        Bus b;
        b.id = id;
        b.kind = BusKind::pq;
        b.base_kv = (id >= 30 && id <= 38) ? 22.0 : 345.0;
        net.buses.push_back(b);
    }
    for (const BusRow& row : loads) {
        Bus& b = net.buses[static_cast<std::size_t>(row.id - 1)];
        b.load_p_mw = row.load_p;
        b.load_q_mvar = row.load_q;
    }

    net.branches = {
        {1, 2, 0.0035, 0.0411, 0.6987, 1.0},   {1, 39, 0.0010, 0.0250, 0.7500, 1.0},
        {2, 3, 0.0013, 0.0151, 0.2572, 1.0},   {2, 25, 0.0070, 0.0086, 0.1460, 1.0},
        {2, 30, 0.0000, 0.0181, 0.0000, 1.025}, {3, 4, 0.0013, 0.0213, 0.2214, 1.0},
        {3, 18, 0.0011, 0.0133, 0.2138, 1.0},  {4, 5, 0.0008, 0.0128, 0.1342, 1.0},
        {4, 14, 0.0008, 0.0129, 0.1382, 1.0},  {5, 6, 0.0002, 0.0026, 0.0434, 1.0},
        {5, 8, 0.0008, 0.0112, 0.1476, 1.0},   {6, 7, 0.0006, 0.0092, 0.1130, 1.0},
        {6, 11, 0.0007, 0.0082, 0.1389, 1.0},  {6, 31, 0.0000, 0.0250, 0.0000, 1.070},
        {7, 8, 0.0004, 0.0046, 0.0780, 1.0},   {8, 9, 0.0023, 0.0363, 0.3804, 1.0},
        {9, 39, 0.0010, 0.0250, 1.2000, 1.0},  {10, 11, 0.0004, 0.0043, 0.0729, 1.0},
        {10, 13, 0.0004, 0.0043, 0.0729, 1.0}, {10, 32, 0.0000, 0.0200, 0.0000, 1.070},
        {12, 11, 0.0016, 0.0435, 0.0000, 1.006}, {12, 13, 0.0016, 0.0435, 0.0000, 1.006},
        {13, 14, 0.0009, 0.0101, 0.1723, 1.0}, {14, 15, 0.0018, 0.0217, 0.3660, 1.0},
        {15, 16, 0.0009, 0.0094, 0.1710, 1.0}, {16, 17, 0.0007, 0.0089, 0.1342, 1.0},
        {16, 19, 0.0016, 0.0195, 0.3040, 1.0}, {16, 21, 0.0008, 0.0135, 0.2548, 1.0},
        {16, 24, 0.0003, 0.0059, 0.0680, 1.0}, {17, 18, 0.0007, 0.0082, 0.1319, 1.0},
        {17, 27, 0.0013, 0.0173, 0.3216, 1.0}, {19, 20, 0.0007, 0.0138, 0.0000, 1.060},
        {19, 33, 0.0007, 0.0142, 0.0000, 1.070}, {20, 34, 0.0009, 0.0180, 0.0000, 1.009},
        {21, 22, 0.0008, 0.0140, 0.2565, 1.0}, {22, 23, 0.0006, 0.0096, 0.1846, 1.0},
        {22, 35, 0.0000, 0.0143, 0.0000, 1.025}, {23, 24, 0.0022, 0.0350, 0.3610, 1.0},
        {23, 36, 0.0005, 0.0272, 0.0000, 1.000}, {25, 26, 0.0032, 0.0323, 0.5310, 1.0},
        {25, 37, 0.0006, 0.0232, 0.0000, 1.025}, {26, 27, 0.0014, 0.0147, 0.2396, 1.0},
        {26, 28, 0.0043, 0.0474, 0.7802, 1.0}, {26, 29, 0.0057, 0.0625, 1.0290, 1.0},
        {28, 29, 0.0014, 0.0151, 0.2490, 1.0}, {29, 38, 0.0008, 0.0156, 0.0000, 1.025},
    };

    struct GenRow {
        int bus;
        double p_mw, v_set, h_s, xd_prime;
    };
    const GenRow gens[] = {
        {30, 250.0, 1.0499, 42.0, 0.031},  {31, 677.87, 0.9820, 30.3, 0.0697},
        {32, 650.0, 0.9841, 35.8, 0.0531}, {33, 632.0, 0.9972, 28.6, 0.0436},
        {34, 508.0, 1.0123, 26.0, 0.1320}, {35, 650.0, 1.0494, 34.8, 0.0500},
        {36, 560.0, 1.0636, 26.4, 0.0490}, {37, 540.0, 1.0275, 24.3, 0.0570},
        {38, 830.0, 1.0265, 34.5, 0.0570}, {39, 1000.0, 1.0300, 500.0, 0.0060},
    };
    for (const GenRow& g : gens) {
        Bus& b = net.buses[static_cast<std::size_t>(g.bus - 1)];
        b.kind = g.bus == 31 ? BusKind::slack : BusKind::pv;
        b.v_setpoint = g.v_set;
        net.generators.push_back({g.bus, 100.0, g.p_mw, SmParams{g.h_s, g.xd_prime, 2.0}});
    }
    return net;
}

/// Returns a named built-in case; throws SemanticError for unknown names.
inline NetworkCase builtin_case(const std::string& name) {
    if (name == "ieee9") return ieee9_case();
    if (name == "ieee39") return ieee39_case();
    throw SemanticError("unknown built-in case '" + name + "' (available: ieee9, ieee39)");
}

} // namespace atomgrid
