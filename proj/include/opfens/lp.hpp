#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "opfens/network.hpp"

namespace opfens {

struct SolverTolerances {
    double feas = 1e-7;   // inequality feasibility, p.u.
    double eq = 1e-8;     // balance-row feasibility
    double active = 1e-7; // active-row detection
    double pivot = 1e-10; // reduced-cost / ratio-test cutoff
    double rank = 1e-9;   // independence threshold in basis extraction
};

inline const SolverTolerances& default_tolerances() {
    static const SolverTolerances tols{};
    return tols;
}

/// n-1 linearly independent active inequality rows plus the balance row.
/// rows are kept-row indices into OpfProblem::A, strictly increasing.
struct Basis {
    std::vector<int> rows;
    Eigen::MatrixXd B;     // n x n, [A_rows; e']
    Eigen::MatrixXd B_inv; // cached inverse
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Eigen::VectorXd p;
    double objective = 0.0;
    std::vector<int> active_rows;       // all rows active at p, ascending
    std::optional<Basis> basis;         // present iff Optimal
};

/// Solve  min c'p  s.t.  A p <= b + C w,  e'p = rhs(w)  to a vertex optimum
/// with the canonical basis. Deterministic: the result depends only on
/// (prob, omega). Throws NumericalFailure on pivot breakdown.
LpSolution solve_opf(const OpfProblem& prob, const Eigen::VectorXd& omega,
                     const SolverTolerances& tols = default_tolerances());

/// Canonical basis of a vertex p: the lexicographically smallest set of
/// n-1 active rows that together with e' has full rank.
/// Throws RankDeficient if p is not a vertex.
Basis extract_basis(const OpfProblem& prob, const Eigen::VectorXd& p,
                    const Eigen::VectorXd& omega,
                    const SolverTolerances& tols = default_tolerances());

/// Rebuild B and its inverse for a given row set. Throws SingularBasis.
Basis make_basis(const OpfProblem& prob, std::vector<int> rows);

} // namespace opfens
