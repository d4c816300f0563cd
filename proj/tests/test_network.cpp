#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "opfens/matpower.hpp"
#include "opfens/network.hpp"
#include "oracle_helpers.hpp"

using namespace opfens;

namespace {
PowerNetwork load(const std::string& name) {
    return to_network(parse_matpower_file(std::string(OPFENS_TESTDATA_DIR) + "/" + name));
}

Eigen::VectorXd balanced_injection(int v, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd q(v);
    for (int i = 0; i < v; ++i) q(i) = u(rng);
    q.array() -= q.mean();
    return q;
}
} // namespace

TEST_SUITE("ptdf") {

TEST_CASE("two-bus PTDF by hand") {
    PowerNetwork net = load("toy2.m");
    Eigen::MatrixXd M = build_ptdf(net);
    REQUIRE(M.rows() == 1);
    REQUIRE(M.cols() == 2);
    CHECK(M(0, 0) == doctest::Approx(0.0));
    CHECK(M(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("reference-bus column is zero") {
    for (const char* name : {"ring3.m", "grid5.m"}) {
        PowerNetwork net = load(name);
        Eigen::MatrixXd M = build_ptdf(net);
        CHECK(M.col(net.ref_bus).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
}

TEST_CASE("PTDF flows match the angle-solve oracle") {
    for (const char* name : {"ring3.m", "grid5.m"}) {
        PowerNetwork net = load(name);
        Eigen::MatrixXd M = build_ptdf(net);
        for (unsigned s = 0; s < 20; ++s) {
            Eigen::VectorXd q = balanced_injection(net.v, 100 + s);
            Eigen::VectorXd via_ptdf = M * q;
            Eigen::VectorXd via_angles = oracle::dc_flows(net, q);
            CHECK((via_ptdf - via_angles).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("flows do not depend on the reference bus") {
    PowerNetwork net = load("grid5.m");
    Eigen::MatrixXd m_ref0 = build_ptdf(net);
    for (int ref = 1; ref < net.v; ++ref) {
        PowerNetwork alt = net;
        alt.ref_bus = ref;
        Eigen::MatrixXd m_alt = build_ptdf(alt);
        for (unsigned s = 0; s < 10; ++s) {
            Eigen::VectorXd q = balanced_injection(net.v, 300 + s);
            CHECK((m_ref0 * q - m_alt * q).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("no branches -> empty PTDF") {
    PowerNetwork net = load("toy1g.m");
    Eigen::MatrixXd M = build_ptdf(net);
    CHECK(M.rows() == 0);
    CHECK(M.cols() == 1);
}

} // TEST_SUITE

TEST_SUITE("problem assembly") {

TEST_CASE("toy2 stack rows by hand") {
    PowerNetwork net = load("toy2.m");
    OpfProblem prob = assemble_problem(net);
    REQUIRE(prob.rows() == 6);
    CHECK(prob.nominal_constraint_count() == 7);
    CHECK(prob.n == 2);
    CHECK(prob.v == 2);

    // [I; -I; MH; -MH] with M = [0, -1], H = I
    CHECK(prob.b(0) == doctest::Approx(1.0));   // pmax g0
    CHECK(prob.b(1) == doctest::Approx(1.0));   // pmax g1
    CHECK(prob.b(2) == doctest::Approx(0.0));   // -pmin g0
    CHECK(prob.b(3) == doctest::Approx(0.0));   // -pmin g1
    CHECK(prob.b(4) == doctest::Approx(-0.1));  // fmax - M(mu - d)
    CHECK(prob.b(5) == doctest::Approx(0.9));   // -fmin + M(mu - d)
    CHECK(prob.A(4, 0) == doctest::Approx(0.0));
    CHECK(prob.A(4, 1) == doctest::Approx(-1.0));
    CHECK(prob.A(5, 1) == doctest::Approx(1.0));
    // C = [0; 0; -M; M]
    CHECK(prob.C.row(0).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(prob.C(4, 1) == doctest::Approx(1.0));
    CHECK(prob.C(5, 1) == doctest::Approx(-1.0));
    CHECK(prob.balance_rhs_base == doctest::Approx(0.5));

    Eigen::VectorXd omega(2);
    omega << 0.02, -0.05;
    CHECK(prob.balance_rhs(omega) == doctest::Approx(0.53));
}

TEST_CASE("unlimited branch rows dropped, labels keep global ids") {
    PowerNetwork net = load("grid5.m");
    OpfProblem prob = assemble_problem(net);
    CHECK(prob.nominal_constraint_count() == 23); // 2(5+6)+1
    CHECK(prob.rows() == 20);                     // two rows dropped

    // no flow rows for branch 2 survive
    for (const RowLabel& label : prob.row_labels) {
        if (label.kind == RowKind::FlowUB || label.kind == RowKind::FlowLB)
            CHECK(label.index != 2);
    }
    // global ids skip the dropped branch: FlowUB block starts at 2n = 10
    CHECK(prob.global_row_id(10) == 10); // flow_ub:0
    CHECK(prob.global_row_id(12) == 13); // flow_ub:3 (branch 2 dropped)
    CHECK(prob.global_row_id(15) == 16); // flow_lb:0 at 2n + m + 0
}

TEST_CASE("row labels round trip") {
    PowerNetwork net = load("grid5.m");
    OpfProblem prob = assemble_problem(net);
    for (const RowLabel& label : prob.row_labels) {
        CHECK(row_label_from_string(to_string(label)) == label);
    }
    CHECK_THROWS_AS(row_label_from_string("nonsense"), DomainError);
}

TEST_CASE("whole-stack equivalence with direct flow evaluation") {
    // A p <= b + C w  must say exactly "pmin <= p <= pmax and
    // fmin <= flows(p, w) <= fmax" with flows from the angle oracle
    PowerNetwork net = load("ring3.m");
    OpfProblem prob = assemble_problem(net);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd p(net.n), omega(net.v);
        for (int i = 0; i < net.n; ++i) p(i) = u(rng) + 0.5;
        for (int i = 0; i < net.v; ++i) omega(i) = u(rng) * 0.1;
        // make the injection balanced so the oracle flow is defined
        Eigen::VectorXd inj = net.H * p + net.mu + omega - net.d;
        inj.array() -= inj.mean();
        Eigen::VectorXd flows = oracle::dc_flows(net, inj);

        // with the same balancing shift applied to omega, the row residual
        // b + Cw - Ap of a flow row is exactly the distance to its limit
        Eigen::VectorXd omega_adj = omega;
        omega_adj.array() -= (net.H * p + net.mu + omega - net.d).mean();
        for (int r = 0; r < prob.rows(); ++r) {
            const RowLabel& label = prob.row_labels[static_cast<size_t>(r)];
            double residual = prob.b(r) + prob.C.row(r).dot(omega_adj) -
                              prob.A.row(r).dot(p);
            if (label.kind == RowKind::FlowUB) {
                CHECK(residual ==
                      doctest::Approx(net.fmax(label.index) - flows(label.index))
                          .epsilon(1e-9));
            } else if (label.kind == RowKind::FlowLB) {
                CHECK(residual ==
                      doctest::Approx(flows(label.index) - net.fmin(label.index))
                          .epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("digest is stable and data-sensitive") {
    PowerNetwork net = load("ring3.m");
    OpfProblem a = assemble_problem(net);
    OpfProblem b = assemble_problem(net);
    CHECK(a.digest() == b.digest());
    PowerNetwork tweaked = net;
    tweaked.cost(0) += 1.0;
    CHECK(assemble_problem(tweaked).digest() != a.digest());
}

} // TEST_SUITE
