#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "opfens/lp.hpp"
#include "opfens/network.hpp"

namespace opfens {

/// Affine dispatch policy of a fixed basis:  rho(w) = offset + gain * w.
struct BasisPolicy {
    Basis basis;
    Eigen::MatrixXd gain;   // n x v
    Eigen::VectorXd offset; // n

    Eigen::VectorXd eval(const Eigen::VectorXd& omega) const {
        return offset + gain * omega;
    }
};

/// Partition of generators induced by the basis rows.
struct GeneratorClassification {
    std::vector<int> at_upper; // p_i pinned to pmax
    std::vector<int> at_lower; // p_i pinned to pmin
    std::vector<int> varying;  // responds linearly to w
};

struct EnsembleMember {
    BasisPolicy policy;
    double probability = 0.0; // empirical, from training samples
};

/// Ordered collection of basis policies; evaluation picks the cheapest
/// feasible member output.
struct EnsemblePolicy {
    std::vector<EnsembleMember> members; // probability non-increasing
    double feas_tol = 1e-7;
};

struct EnsembleEvalResult {
    Eigen::VectorXd p;
    int chosen = -1; // member index
    double cost = 0.0;
};

/// Precompute gain/offset for a basis. Throws SingularBasis.
BasisPolicy make_policy(const OpfProblem& prob, const Basis& basis);

GeneratorClassification classify_generators(const OpfProblem& prob,
                                            const Basis& basis);

/// True iff A p <= b + C w within feas_tol and the balance row holds
/// within eq_tol.
bool check_feasible(const OpfProblem& prob, const Eigen::VectorXd& p,
                    const Eigen::VectorXd& omega, double feas_tol = 1e-7,
                    double eq_tol = 1e-8);

/// Evaluate every member at omega, keep the feasible outputs, return the
/// cheapest (ties: lowest member index). Empty optional = no member
/// feasible at omega.
std::optional<EnsembleEvalResult> ensemble_eval(const EnsemblePolicy& ens,
                                                const OpfProblem& prob,
                                                const Eigen::VectorXd& omega);

} // namespace opfens
