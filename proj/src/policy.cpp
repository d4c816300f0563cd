#include "opfens/policy.hpp"

#include <cmath>

namespace opfens {

BasisPolicy make_policy(const OpfProblem& prob, const Basis& basis) {
    const int n = prob.n;
    const int v = prob.v;

    // rhs(w) = [b_A + C_A w; balance_rhs_base - 1'w] stacked over basis rows
    Eigen::VectorXd rhs0(n);
    Eigen::MatrixXd cstack(n, v);
    for (int k = 0; k < n - 1; ++k) {
        int r = basis.rows[k];
        rhs0(k) = prob.b(r);
        cstack.row(k) = prob.C.row(r);
    }
    rhs0(n - 1) = prob.balance_rhs_base;
    cstack.row(n - 1) = Eigen::RowVectorXd::Constant(v, -1.0);

    BasisPolicy policy;
    policy.basis = basis;
    policy.offset = basis.B_inv * rhs0;
    policy.gain = basis.B_inv * cstack;
    return policy;
}

GeneratorClassification classify_generators(const OpfProblem& prob,
                                            const Basis& basis) {
    GeneratorClassification cls;
    std::vector<int> state(prob.n, 0); // 0 varying, 1 upper, -1 lower
    for (int r : basis.rows) {
        const RowLabel& label = prob.row_labels.at(static_cast<size_t>(r));
        if (label.kind == RowKind::GenUB) state[label.index] = 1;
        if (label.kind == RowKind::GenLB) state[label.index] = -1;
    }
    for (int i = 0; i < prob.n; ++i) {
        if (state[i] > 0)
            cls.at_upper.push_back(i);
        else if (state[i] < 0)
            cls.at_lower.push_back(i);
        else
            cls.varying.push_back(i);
    }
    return cls;
}

bool check_feasible(const OpfProblem& prob, const Eigen::VectorXd& p,
                    const Eigen::VectorXd& omega, double feas_tol, double eq_tol) {
    if (p.size() != prob.n || omega.size() != prob.v) return false;
    Eigen::VectorXd slack = prob.b + prob.C * omega - prob.A * p;
    if ((slack.array() < -feas_tol).any()) return false;
    return std::abs(p.sum() - prob.balance_rhs(omega)) <= eq_tol;
}

std::optional<EnsembleEvalResult> ensemble_eval(const EnsemblePolicy& ens,
                                                const OpfProblem& prob,
                                                const Eigen::VectorXd& omega) {
    std::optional<EnsembleEvalResult> best;
    for (size_t k = 0; k < ens.members.size(); ++k) {
        Eigen::VectorXd p = ens.members[k].policy.eval(omega);
        if (!check_feasible(prob, p, omega, ens.feas_tol)) continue;
        double cost = prob.cost.dot(p);
        if (!best || cost < best->cost) {
            best = EnsembleEvalResult{std::move(p), static_cast<int>(k), cost};
        }
    }
    return best;
}

} // namespace opfens
