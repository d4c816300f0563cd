#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "opfens/lp.hpp"
#include "opfens/matpower.hpp"
#include "oracle_helpers.hpp"

using namespace opfens;

namespace {
OpfProblem load_problem(const std::string& name) {
    return assemble_problem(
        to_network(parse_matpower_file(std::string(OPFENS_TESTDATA_DIR) + "/" + name)));
}

Eigen::VectorXd random_omega(int v, double scale, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::VectorXd omega(v);
    for (int i = 0; i < v; ++i) omega(i) = u(rng);
    return omega;
}
} // namespace

TEST_SUITE("solve_opf") {

TEST_CASE("toy2 hand oracle at omega = 0") {
    OpfProblem prob = load_problem("toy2.m");
    LpSolution sol = solve_opf(prob, Eigen::VectorXd::Zero(2));
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.p(0) == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(sol.p(1) == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(sol.objective == doctest::Approx(650.0).epsilon(1e-10));
    REQUIRE(sol.basis.has_value());
    REQUIRE(sol.basis->rows.size() == 1);
    CHECK(sol.basis->rows[0] == 4); // flow_ub:0 is the binding row
    CHECK(prob.row_labels[4].kind == RowKind::FlowUB);
}

TEST_CASE("toy2 under a shifted omega") {
    OpfProblem prob = load_problem("toy2.m");
    Eigen::VectorXd omega(2);
    omega << 0.05, -0.02;
    LpSolution sol = solve_opf(prob, omega);
    REQUIRE(sol.status == SolveStatus::Optimal);
    // flow limit still binds: p2 = 0.1 - w2, p1 = balance remainder
    CHECK(sol.p(1) == doctest::Approx(0.12).epsilon(1e-10));
    CHECK(sol.p(0) == doctest::Approx(0.35).epsilon(1e-10));
}

TEST_CASE("single-generator case: balance pins the dispatch") {
    OpfProblem prob = load_problem("toy1g.m");
    Eigen::VectorXd omega(1);
    omega << -0.07;
    LpSolution sol = solve_opf(prob, omega);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.p(0) == doctest::Approx(0.67).epsilon(1e-12));
    REQUIRE(sol.basis.has_value());
    CHECK(sol.basis->rows.empty());
}

TEST_CASE("matches brute-force enumeration on ring3 and grid5") {
    for (const char* name : {"ring3.m", "grid5.m"}) {
        OpfProblem prob = load_problem(name);
        int feasible_seen = 0;
        for (unsigned s = 0; s < 100; ++s) {
            Eigen::VectorXd omega = random_omega(prob.v, 0.15, 1000 + s);
            LpSolution sol = solve_opf(prob, omega);
            oracle::BruteForceResult ref = oracle::brute_force_solve(prob, omega);
            REQUIRE((sol.status == SolveStatus::Optimal) == ref.feasible);
            if (!ref.feasible) continue;
            ++feasible_seen;
            CHECK(std::abs(sol.objective - ref.objective) <=
                  1e-8 * std::max(1.0, std::abs(ref.objective)));
            // solution satisfies every constraint at the solver tolerance
            Eigen::VectorXd slack = prob.b + prob.C * omega - prob.A * sol.p;
            CHECK(slack.minCoeff() >= -1e-7);
            CHECK(std::abs(sol.p.sum() - prob.balance_rhs(omega)) <= 1e-8);
        }
        CHECK(feasible_seen > 50); // the sweep must actually exercise the solver
    }
}

TEST_CASE("box-balance infeasibility is detected") {
    OpfProblem prob = load_problem("toy2.m");
    Eigen::VectorXd omega(2);
    omega << 5.0, 5.0; // demand shrinks below the zero-output floor
    CHECK(solve_opf(prob, omega).status == SolveStatus::Infeasible);
    omega << -5.0, -5.0; // demand beyond total capacity
    CHECK(solve_opf(prob, omega).status == SolveStatus::Infeasible);
}

TEST_CASE("flow-driven infeasibility needs phase 1 to prove it") {
    OpfProblem prob = load_problem("toy2.m");
    Eigen::VectorXd omega(2);
    omega << 0.0, -1.5; // box-feasible, but the line cannot carry the transfer
    CHECK(solve_opf(prob, omega).status == SolveStatus::Infeasible);
}

TEST_CASE("deterministic under dual degeneracy") {
    OpfProblem prob = load_problem("dup_gens.m");
    Eigen::VectorXd omega = random_omega(prob.v, 0.05, 42);
    LpSolution first = solve_opf(prob, omega);
    REQUIRE(first.status == SolveStatus::Optimal);
    for (int rep = 0; rep < 50; ++rep) {
        LpSolution again = solve_opf(prob, omega);
        REQUIRE(again.status == SolveStatus::Optimal);
        CHECK(again.basis->rows == first.basis->rows);
        CHECK(again.p == first.p); // bitwise: same arithmetic path
    }
}

TEST_CASE("active rows are reported sorted and complete") {
    OpfProblem prob = load_problem("toy2.m");
    LpSolution sol = solve_opf(prob, Eigen::VectorXd::Zero(2));
    REQUIRE(sol.status == SolveStatus::Optimal);
    Eigen::VectorXd slack = prob.b - prob.A * sol.p;
    for (size_t k = 1; k < sol.active_rows.size(); ++k)
        CHECK(sol.active_rows[k - 1] < sol.active_rows[k]);
    for (int r : sol.active_rows) CHECK(slack(r) <= 1e-7);
}

TEST_CASE("omega of the wrong size is rejected") {
    OpfProblem prob = load_problem("toy2.m");
    CHECK_THROWS_AS(solve_opf(prob, Eigen::VectorXd::Zero(3)), DomainError);
}

} // TEST_SUITE

TEST_SUITE("basis handling") {

TEST_CASE("extract_basis rejects interior points") {
    OpfProblem prob = load_problem("ring3.m");
    // strictly interior feasible point: equal dispatch, no row active
    Eigen::VectorXd p = Eigen::VectorXd::Constant(3, prob.balance_rhs_base / 3.0);
    CHECK_THROWS_AS(extract_basis(prob, p, Eigen::VectorXd::Zero(3)), RankDeficient);
}

TEST_CASE("extract_basis picks the lowest-index independent rows") {
    OpfProblem prob = load_problem("toy2.m");
    LpSolution sol = solve_opf(prob, Eigen::VectorXd::Zero(2));
    // at p = (0.4, 0.1) only row 4 is active, so the canonical basis is {4}
    Basis basis = extract_basis(prob, sol.p, Eigen::VectorXd::Zero(2));
    CHECK(basis.rows == std::vector<int>{4});
}

TEST_CASE("make_basis validates row sets") {
    OpfProblem prob = load_problem("toy2.m");
    CHECK_THROWS_AS(make_basis(prob, {0, 1}), SingularBasis);   // wrong count
    CHECK_THROWS_AS(make_basis(prob, {}), SingularBasis);       // wrong count
    CHECK_THROWS_AS(make_basis(prob, {99}), SingularBasis);     // out of range
    Basis ok = make_basis(prob, {0});
    CHECK((ok.B * ok.B_inv - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <=
          1e-12);
}

TEST_CASE("dependent rows rejected") {
    OpfProblem prob = load_problem("ring3.m");
    // gen_ub:0 and gen_lb:0 are negatives of each other; with the balance
    // row the 3x3 stack is singular
    CHECK_THROWS_AS(make_basis(prob, {0, 3}), SingularBasis);
}

TEST_CASE("canonical basis is reproducible from the solved point") {
    OpfProblem prob = load_problem("grid5.m");
    for (unsigned s = 0; s < 20; ++s) {
        Eigen::VectorXd omega = random_omega(prob.v, 0.1, 500 + s);
        LpSolution sol = solve_opf(prob, omega);
        if (sol.status != SolveStatus::Optimal) continue;
        Basis again = extract_basis(prob, sol.p, omega);
        CHECK(again.rows == sol.basis->rows);
    }
}

} // TEST_SUITE
