#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "opfens/common.hpp"

namespace opfens {

/// DC power-flow view of a transmission system, everything in per-unit.
struct PowerNetwork {
    std::string case_id;
    int v = 0; // buses
    int m = 0; // branches (in service)
    int n = 0; // generators (in service)

    Eigen::VectorXd d;   // nodal demand, size v
    Eigen::VectorXd mu;  // forecast non-dispatchable injection, size v
    Eigen::VectorXd pmin, pmax; // generator limits, size n
    Eigen::VectorXd fmin, fmax; // thermal limits, size m, +-inf = unlimited
    Eigen::VectorXd cost;       // linear cost, $/p.u., size n
    Eigen::MatrixXd H;          // v x n generator incidence (0/1)
    Eigen::VectorXd susceptance; // 1/x per branch, size m
    Eigen::MatrixXd incidence;   // m x v signed branch-bus incidence
    int ref_bus = 0;

    std::vector<int> gen_bus; // bus index of each generator

    /// 2(n+m)+1, the nominal constraint count (unlimited branches included).
    int nominal_constraint_count() const { return 2 * (n + m) + 1; }
};

/// Identity of one inequality row of the stacked constraint system.
enum class RowKind : std::uint8_t { GenUB = 0, GenLB = 1, FlowUB = 2, FlowLB = 3 };

struct RowLabel {
    RowKind kind;
    int index; // generator or branch ordinal

    bool operator==(const RowLabel&) const = default;
};

std::string to_string(const RowLabel& label);
RowLabel row_label_from_string(const std::string& text);

/// Parametric constraint system  A p <= b + C w,  e'p = balance_rhs_base - e'w.
/// Rows are stacked [I; -I; MH; -MH] with unlimited-branch rows omitted;
/// row_labels preserve the global ordering so bases stay comparable.
struct OpfProblem {
    std::string case_id;
    int n = 0; // generators (columns of A)
    int v = 0; // buses (columns of C)

    Eigen::MatrixXd A; // kept_rows x n
    Eigen::VectorXd b; // kept_rows
    Eigen::MatrixXd C; // kept_rows x v
    double balance_rhs_base = 0.0; // e'(d - mu)
    std::vector<RowLabel> row_labels; // one per kept row

    Eigen::VectorXd cost; // objective coefficients, size n
    int nominal_rows = 0; // 2(n+m), before dropping unlimited branches

    int rows() const { return static_cast<int>(A.rows()); }
    int nominal_constraint_count() const { return nominal_rows + 1; }

    /// Global row id within the nominal [I; -I; MH; -MH] stack.
    int global_row_id(int kept_row) const;

    double balance_rhs(const Eigen::VectorXd& omega) const {
        return balance_rhs_base - omega.sum();
    }

    /// Stable fingerprint of the problem data, used to pair ensembles
    /// with the case they were learned on.
    std::uint64_t digest() const;
};

/// Power transfer distribution factors: M maps balanced bus injections to
/// branch flows with ref_bus as the angle reference. Entries below 1e-12
/// are zeroed. Throws SingularReducedLaplacian.
Eigen::MatrixXd build_ptdf(const PowerNetwork& net);

/// Assemble the parametric LP (A, b, C, balance row) from the network.
OpfProblem assemble_problem(const PowerNetwork& net);

} // namespace opfens
