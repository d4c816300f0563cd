#pragma once

// Independent reference implementations used only by tests. They recompute
// the quantities under test from first principles with different code paths
// than the library (loop-built Laplacian + angle solve instead of PTDF;
// exhaustive vertex enumeration instead of simplex).

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "opfens/network.hpp"

namespace oracle {

/// DC power flow: solve B_bus theta = q with the reference angle fixed at 0,
/// then f_l = b_l (theta_from - theta_to). q must be balanced (sum zero).
inline Eigen::VectorXd dc_flows(const opfens::PowerNetwork& net,
                                const Eigen::VectorXd& injections) {
    const int v = net.v;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(v, v);
    std::vector<int> from(net.m), to(net.m);
    for (int l = 0; l < net.m; ++l) {
        int f = -1, t = -1;
        for (int c = 0; c < v; ++c) {
            if (net.incidence(l, c) > 0.5) f = c;
            if (net.incidence(l, c) < -0.5) t = c;
        }
        from[l] = f;
        to[l] = t;
        double b = net.susceptance(l);
        lap(f, f) += b;
        lap(t, t) += b;
        lap(f, t) -= b;
        lap(t, f) -= b;
    }
    // pin the reference angle by replacing its equation with theta_ref = 0
    Eigen::MatrixXd sys = lap;
    Eigen::VectorXd rhs = injections;
    sys.row(net.ref_bus).setZero();
    sys(net.ref_bus, net.ref_bus) = 1.0;
    rhs(net.ref_bus) = 0.0;
    Eigen::VectorXd theta = sys.fullPivLu().solve(rhs);
    Eigen::VectorXd flows(net.m);
    for (int l = 0; l < net.m; ++l)
        flows(l) = net.susceptance(l) * (theta(from[l]) - theta(to[l]));
    return flows;
}

struct BruteForceResult {
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd p;
    std::vector<int> rows; // the winning row subset (one optimal choice)
};

/// Exhaustive vertex enumeration of  min c'p, A p <= b + C w, e'p = rhs(w):
/// every (n-1)-subset of rows with a nonsingular stacked matrix yields a
/// candidate vertex; feasible candidates compete on cost.
inline BruteForceResult brute_force_solve(const opfens::OpfProblem& prob,
                                          const Eigen::VectorXd& omega,
                                          double feas_tol = 1e-9) {
    const int n = prob.n;
    const int rows = prob.rows();
    const Eigen::VectorXd bt = prob.b + prob.C * omega;
    const double rhs = prob.balance_rhs(omega);

    BruteForceResult best;
    std::vector<int> idx(static_cast<size_t>(std::max(n - 1, 0)));
    for (int i = 0; i < n - 1; ++i) idx[static_cast<size_t>(i)] = i;

    auto consider = [&](const std::vector<int>& subset) {
        Eigen::MatrixXd B(n, n);
        Eigen::VectorXd r(n);
        for (int k = 0; k < n - 1; ++k) {
            B.row(k) = prob.A.row(subset[static_cast<size_t>(k)]);
            r(k) = bt(subset[static_cast<size_t>(k)]);
        }
        B.row(n - 1).setOnes();
        r(n - 1) = rhs;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible()) return;
        Eigen::VectorXd p = lu.solve(r);
        Eigen::VectorXd slack = bt - prob.A * p;
        if ((slack.array() < -feas_tol).any()) return;
        double cost = prob.cost.dot(p);
        if (!best.feasible || cost < best.objective) {
            best.feasible = true;
            best.objective = cost;
            best.p = p;
            best.rows = subset;
        }
    };

    if (n == 1) {
        Eigen::VectorXd p(1);
        p(0) = rhs;
        Eigen::VectorXd slack = bt - prob.A * p;
        if (!(slack.array() < -feas_tol).any()) {
            best.feasible = true;
            best.objective = prob.cost.dot(p);
            best.p = p;
        }
        return best;
    }

    // lexicographic enumeration of all C(rows, n-1) subsets
    while (true) {
        consider(idx);
        int k = n - 2;
        while (k >= 0 && idx[static_cast<size_t>(k)] == rows - (n - 1) + k) --k;
        if (k < 0) break;
        ++idx[static_cast<size_t>(k)];
        for (int j = k + 1; j < n - 1; ++j)
            idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
    return best;
}

} // namespace oracle
