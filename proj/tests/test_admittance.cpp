#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "atomgrid/admittance.hpp"
#include "atomgrid/builtin_cases.hpp"

using namespace atomgrid;
using Catch::Matchers::WithinAbs;

namespace {

NetworkCase two_bus(double r, double x, double b = 0.0) {
    NetworkCase net;
    net.name = "two-bus";
    net.buses = {{1, BusKind::slack, 230.0, 1.0, 0.0, 0.0}, {2, BusKind::pq, 230.0, 1.0, 0.0, 0.0}};
    net.branches = {{1, 2, r, x, b, 1.0}};
    net.generators = {{1, 100.0, 0.0, SmParams{}}};
    return net;
}

} // namespace

TEST_CASE("single branch produces the textbook Y-bus") {
    const AdmittanceMatrix y = build_admittance(two_bus(0.0, 0.1));
    CHECK_THAT(y.at(1, 2).imag(), WithinAbs(10.0, 1e-12));
    CHECK_THAT(y.at(1, 2).real(), WithinAbs(0.0, 1e-12));
    CHECK_THAT(y.at(1, 1).imag(), WithinAbs(-10.0, 1e-12));
}

TEST_CASE("a shunt at bus k changes only entry (k,k)") {
    const NetworkCase net = two_bus(0.01, 0.1, 0.04);
    const AdmittanceMatrix base = build_admittance(net);
    const AdmittanceMatrix with = build_admittance(net, {{2, Complex(0.5, -0.25)}});
    CHECK(with.at(1, 1) == base.at(1, 1));
    CHECK(with.at(1, 2) == base.at(1, 2));
    CHECK(with.at(2, 1) == base.at(2, 1));
    CHECK_THAT(std::abs(with.at(2, 2) - base.at(2, 2) - Complex(0.5, -0.25)), WithinAbs(0.0, 1e-15));
}

TEST_CASE("ieee9 Y-bus is symmetric (all taps 1)") {
    const AdmittanceMatrix y = build_admittance(ieee9_case());
    CHECK((y.y - y.y.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kron_reduce with all nodes kept is the identity operation") {
    const AdmittanceMatrix y = build_admittance(ieee9_case());
    const AdmittanceMatrix r = kron_reduce(y, y.ids);
    CHECK((r.y - y.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron_reduce of a grounded 3-node chain matches a direct solve") {
    // 1 -(j0.2)- 2 -(j0.4)- 3, node 2 grounded through 1.0+j0.5.
    NetworkCase net;
    net.name = "chain";
    net.buses = {{1, BusKind::slack, 1.0, 1.0, 0.0, 0.0},
                 {2, BusKind::pq, 1.0, 1.0, 0.0, 0.0},
                 {3, BusKind::pq, 1.0, 1.0, 0.0, 0.0}};
    net.branches = {{1, 2, 0.0, 0.2, 0.0, 1.0}, {2, 3, 0.0, 0.4, 0.0, 1.0}};
    net.generators = {{1, 100.0, 0.0, SmParams{}}};
    const AdmittanceMatrix full = build_admittance(net, {{2, Complex(1.0, 0.5)}});
    const AdmittanceMatrix red = kron_reduce(full, {1, 3});
    REQUIRE(red.ids == std::vector<int>{1, 3});

    // Port behavior: voltages at kept nodes, zero injection at node 2.
    const Eigen::Vector2cd vk(Complex(1.02, 0.03), Complex(0.97, -0.05));
    const Complex y12 = full.at(1, 2), y22 = full.at(2, 2), y23 = full.at(2, 3);
    const Complex v2 = -(y12 * vk(0) + y23 * vk(1)) / y22;
    Eigen::Vector2cd i_full;
    i_full(0) = full.at(1, 1) * vk(0) + full.at(1, 3) * vk(1) + y12 * v2;
    i_full(1) = full.at(3, 1) * vk(0) + full.at(3, 3) * vk(1) + y23 * v2;
    const Eigen::Vector2cd i_red = red.y * vk;
    CHECK((i_full - i_red).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kron_reduce port equivalence on random grounded networks") {
    std::mt19937 rng(20240917);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 3);  // 4..6 nodes
        NetworkCase net;
        net.name = "random";
        for (int i = 1; i <= n; ++i)
            net.buses.push_back({i, i == 1 ? BusKind::slack : BusKind::pq, 1.0, 1.0, 0.0, 0.0});
        for (int i = 1; i < n; ++i)
            net.branches.push_back({i, i + 1, 0.1 * unif(rng), unif(rng), 0.0, 1.0});
        net.branches.push_back({1, n, 0.1 * unif(rng), unif(rng), 0.0, 1.0});
        net.generators = {{1, 100.0, 0.0, SmParams{}}};

        std::vector<Shunt> shunts;
        for (int i = 1; i <= n; ++i) shunts.push_back({i, Complex(unif(rng), unif(rng))});
        const AdmittanceMatrix full = build_admittance(net, shunts);

        const std::vector<int> keep{1, 2};
        const AdmittanceMatrix red = kron_reduce(full, keep);

        std::vector<Eigen::Index> kidx, eidx;
        for (int id : keep) kidx.push_back(full.index_of(id));
        for (int i = 0; i < full.order(); ++i)
            if (std::find(kidx.begin(), kidx.end(), i) == kidx.end()) eidx.push_back(i);

        for (int assignment = 0; assignment < 20; ++assignment) {
            Eigen::VectorXcd vk(2);
            vk << Complex(unif(rng), unif(rng)), Complex(unif(rng), unif(rng));
            const Eigen::MatrixXcd yee = full.y(eidx, eidx);
            const Eigen::MatrixXcd yek = full.y(eidx, kidx);
            const Eigen::VectorXcd ve = yee.partialPivLu().solve((-yek * vk).eval());
            const Eigen::VectorXcd ik_full =
                full.y(kidx, kidx) * vk + full.y(kidx, eidx) * ve;
            const Eigen::VectorXcd ik_red = red.y * vk;
            REQUIRE((ik_full - ik_red).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("eliminating an isolated grounded node leaves the rest unchanged") {
    NetworkCase net = two_bus(0.0, 0.1);
    // The isolated node is attached later as an extra-shunt-only member of
    // the matrix; build manually to keep the case valid.
    AdmittanceMatrix full = build_admittance(net, {{1, Complex(0.0, -2.0)}});
    const AdmittanceMatrix base = full;
    full.ids.push_back(99);
    full.y.conservativeResize(3, 3);
    full.y.row(2).setZero();
    full.y.col(2).setZero();
    full.y(2, 2) = Complex(3.0, -1.0);
    const AdmittanceMatrix red = kron_reduce(full, {1, 2});
    CHECK((red.y - base.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zbus inverts the worked 2-bus example") {
    // bus1-ground j0.5, bus1-bus2 j0.1:
    //   Y = [[-12j, 10j], [10j, -10j]],  Z = [[0.5j, 0.5j], [0.5j, 0.6j]]
    AdmittanceMatrix y;
    y.ids = {1, 2};
    y.y.resize(2, 2);
    y.y << Complex(0, -12), Complex(0, 10), Complex(0, 10), Complex(0, -10);
    const ImpedanceMatrix z = zbus(y);
    CHECK_THAT(std::abs(z.at(1, 1) - Complex(0, 0.5)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(z.at(1, 2) - Complex(0, 0.5)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(z.at(2, 1) - Complex(0, 0.5)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(z.at(2, 2) - Complex(0, 0.6)), WithinAbs(0.0, 1e-12));
}

TEST_CASE("diagonal Y inverts to reciprocal diagonal") {
    AdmittanceMatrix y;
    y.ids = {1, 2, 3};
    y.y = Eigen::MatrixXcd::Zero(3, 3);
    y.y(0, 0) = Complex(2.0, -1.0);
    y.y(1, 1) = Complex(0.0, -4.0);
    y.y(2, 2) = Complex(5.0, 0.0);
    const ImpedanceMatrix z = zbus(y);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(z.z(i, i) - 1.0 / y.y(i, i)) < 1e-14);
    CHECK(std::abs(z.z(0, 1)) == 0.0);
}

TEST_CASE("ungrounded network is reported singular") {
    const AdmittanceMatrix y = build_admittance(two_bus(0.0, 0.1));
    CHECK_THROWS_AS(zbus(y), NumericsError);
}
