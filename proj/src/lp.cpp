#include "opfens/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace opfens {

namespace {

constexpr double kBigBound = 1e6; // stand-in bound for the phase-1 start point

/// Active-set simplex on  min g'x  s.t.  G x <= h,  eq' x = eq_rhs,
/// starting from a vertex x with working set W (dim-1 inequality rows whose
/// stack with eq' is nonsingular). Pivoting is Bland's rule on row indices,
/// so the trajectory is a pure function of the inputs.
class ActiveSetCore {
public:
    ActiveSetCore(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  const Eigen::VectorXd& g, const Eigen::VectorXd& eq,
                  const SolverTolerances& tols)
        : G_(G), h_(h), g_(g), eq_(eq), tols_(tols), dim_(static_cast<int>(G.cols())) {}

    enum class Result { Optimal, Unbounded };

    /// Runs to optimality. x and W are updated in place.
    Result run(Eigen::VectorXd& x, std::vector<int>& W) {
        const int rows = static_cast<int>(G_.rows());
        in_w_.assign(rows, false);
        for (int r : W) in_w_[r] = true;
        refactor(W);

        const long max_iter = 200L * (rows + dim_) + 1000;
        for (long iter = 0; iter < max_iter; ++iter) {
            // duals: B' y = -g; inequality rows need y >= 0 at optimality
            Eigen::VectorXd y = -(b_inv_.transpose() * g_);

            int drop_pos = -1, drop_row = std::numeric_limits<int>::max();
            for (int k = 0; k < dim_ - 1; ++k) {
                if (y(k) < -tols_.pivot && W[k] < drop_row) {
                    drop_row = W[k];
                    drop_pos = k;
                }
            }
            if (drop_pos < 0) return Result::Optimal;

            // move off the dropped row: B d = -e_k
            Eigen::VectorXd d = -b_inv_.col(drop_pos);

            // ratio test over rows outside W; two passes so the Bland
            // tie-break sees every row within tolerance of the minimum
            Eigen::VectorXd gd = G_ * d;
            Eigen::VectorXd slack = h_ - G_ * x;
            double alpha = std::numeric_limits<double>::infinity();
            for (int i = 0; i < rows; ++i) {
                if (in_w_[i] || gd(i) <= tols_.pivot) continue;
                alpha = std::min(alpha, std::max(slack(i), 0.0) / gd(i));
            }
            if (!std::isfinite(alpha)) return Result::Unbounded;
            int enter = -1;
            const double tie = alpha + 1e-12 * (1.0 + alpha);
            for (int i = 0; i < rows; ++i) {
                if (in_w_[i] || gd(i) <= tols_.pivot) continue;
                if (std::max(slack(i), 0.0) / gd(i) <= tie) {
                    enter = i; // Bland: lowest row index among ties
                    break;
                }
            }

            x += alpha * d;
            in_w_[drop_row] = false;
            in_w_[enter] = true;
            replace(W, drop_pos, enter);
        }
        throw NumericalFailure("active-set simplex hit the iteration limit");
    }

private:
    void refactor(const std::vector<int>& W) {
        Eigen::MatrixXd B(dim_, dim_);
        for (int k = 0; k < dim_ - 1; ++k) B.row(k) = G_.row(W[k]);
        B.row(dim_ - 1) = eq_.transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible())
            throw NumericalFailure("working-set matrix is singular");
        b_inv_ = lu.inverse();
        pivots_since_refactor_ = 0;
    }

    // Sherman-Morrison update of B^-1 after replacing row k of B.
    void replace(std::vector<int>& W, int k, int new_row) {
        Eigen::VectorXd delta = (G_.row(new_row) - G_.row(W[k])).transpose();
        Eigen::VectorXd col = b_inv_.col(k);
        double denom = 1.0 + delta.dot(col);
        W[k] = new_row;
        if (std::abs(denom) < 1e-12 || ++pivots_since_refactor_ >= 64) {
            refactor(W);
            return;
        }
        Eigen::RowVectorXd row = delta.transpose() * b_inv_;
        b_inv_.noalias() -= col * (row / denom);
    }

    const Eigen::MatrixXd& G_;
    const Eigen::VectorXd& h_;
    const Eigen::VectorXd& g_;
    const Eigen::VectorXd& eq_;
    const SolverTolerances& tols_;
    int dim_;
    Eigen::MatrixXd b_inv_;
    std::vector<bool> in_w_;
    int pivots_since_refactor_ = 0;
};

struct BoxBounds {
    Eigen::VectorXd lb, ub;
};

// Generator bounds recovered from the GenUB / GenLB rows (always present).
BoxBounds box_bounds(const OpfProblem& prob) {
    BoxBounds box;
    box.lb = Eigen::VectorXd::Constant(prob.n, -kBigBound);
    box.ub = Eigen::VectorXd::Constant(prob.n, kBigBound);
    for (int r = 0; r < prob.rows(); ++r) {
        const RowLabel& label = prob.row_labels[r];
        if (label.kind == RowKind::GenUB) box.ub(label.index) = prob.b(r);
        if (label.kind == RowKind::GenLB) box.lb(label.index) = -prob.b(r);
    }
    return box;
}

/// Greedy start point: every generator at its lower bound, then raise them
/// in index order until the balance row holds. Returns false when the box
/// alone cannot meet the balance (the LP is infeasible).
bool greedy_balance_point(const BoxBounds& box, double rhs, double tol,
                          Eigen::VectorXd& p) {
    const int n = static_cast<int>(box.lb.size());
    double lo = box.lb.sum(), hi = box.ub.sum();
    if (rhs < lo - tol || rhs > hi + tol) return false;
    p = box.lb;
    double need = rhs - lo;
    for (int i = 0; i < n && need > 0.0; ++i) {
        double room = box.ub(i) - box.lb(i);
        double step = std::min(room, need);
        p(i) += step;
        need -= step;
    }
    // absorb any residual (only the tolerance slop above) into the last slot
    if (n > 0) p(n - 1) += rhs - p.sum();
    return true;
}

/// n-1 box rows active at p, one per generator, lowest row index first,
/// skipping generator `skip`.
std::vector<int> pinned_box_rows(const OpfProblem& prob, const BoxBounds& box,
                                 const Eigen::VectorXd& p, int skip, double tol) {
    std::vector<int> rows;
    std::vector<bool> used(prob.n, false);
    for (int r = 0; r < prob.rows(); ++r) {
        if (static_cast<int>(rows.size()) == prob.n - 1) break;
        const RowLabel& label = prob.row_labels[r];
        if (label.kind != RowKind::GenUB && label.kind != RowKind::GenLB) continue;
        int i = label.index;
        if (i == skip || used[i]) continue;
        double bound = label.kind == RowKind::GenUB ? box.ub(i) : box.lb(i);
        if (std::abs(p(i) - bound) <= tol) {
            rows.push_back(r);
            used[i] = true;
        }
    }
    return rows;
}

/// All rows active at p within tol_active, ascending.
std::vector<int> active_rows_at(const OpfProblem& prob, const Eigen::VectorXd& p,
                                const Eigen::VectorXd& bt, double tol) {
    std::vector<int> act;
    Eigen::VectorXd slack = bt - prob.A * p;
    for (int r = 0; r < prob.rows(); ++r)
        if (slack(r) <= tol) act.push_back(r);
    return act;
}

/// Move p along null-space directions of its active rows until the active
/// set has full rank (a vertex). Cost never increases. Throws on an
/// unbounded flat face (the polytope would contain a line).
SolveStatus purify_to_vertex(const OpfProblem& prob, const Eigen::VectorXd& bt,
                             const SolverTolerances& tols, Eigen::VectorXd& p) {
    const int n = prob.n;
    for (int pass = 0; pass <= n; ++pass) {
        std::vector<int> act = active_rows_at(prob, p, bt, tols.active);
        Eigen::MatrixXd K(act.size() + 1, n);
        for (size_t k = 0; k < act.size(); ++k) K.row(k) = prob.A.row(act[k]);
        K.row(act.size()) = Eigen::RowVectorXd::Ones(n);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (lu.dimensionOfKernel() == 0) return SolveStatus::Optimal; // vertex

        Eigen::VectorXd u = lu.kernel().col(0);
        u /= u.norm();
        double cu = prob.cost.dot(u);
        if (cu > tols.pivot) {
            u = -u;
        } else if (std::abs(cu) <= tols.pivot) {
            for (int i = 0; i < n; ++i) {
                if (std::abs(u(i)) > 1e-12) {
                    if (u(i) < 0) u = -u;
                    break;
                }
            }
        }

        auto max_step = [&](const Eigen::VectorXd& dir, double& alpha) {
            Eigen::VectorXd ad = prob.A * dir;
            Eigen::VectorXd slack = bt - prob.A * p;
            alpha = std::numeric_limits<double>::infinity();
            for (int r = 0; r < prob.rows(); ++r) {
                if (ad(r) <= tols.pivot) continue;
                double ratio = std::max(slack(r), 0.0) / ad(r);
                alpha = std::min(alpha, ratio);
            }
            return std::isfinite(alpha);
        };

        double alpha;
        if (!max_step(u, alpha)) {
            if (prob.cost.dot(u) < -tols.pivot) return SolveStatus::Unbounded;
            u = -u;
            if (!max_step(u, alpha))
                throw NumericalFailure("feasible set contains a line; no vertex exists");
        }
        p += alpha * u;
    }
    throw NumericalFailure("purification failed to reach a vertex");
}

/// Greedy canonical working set: n-1 active rows, lowest indices first,
/// each independent of the span of the already-chosen rows plus e'.
std::vector<int> canonical_rows(const OpfProblem& prob, const std::vector<int>& act,
                                const SolverTolerances& tols) {
    const int n = prob.n;
    std::vector<int> chosen;
    if (n == 1) return chosen;
    Eigen::MatrixXd Q(n, n); // orthonormal columns spanning {e} + chosen rows
    Q.col(0) = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    int q = 1;
    for (int r : act) {
        Eigen::VectorXd w = prob.A.row(r).transpose();
        double norm_a = std::max(1.0, w.norm());
        for (int rep = 0; rep < 2; ++rep) // re-orthogonalize for stability
            w -= Q.leftCols(q) * (Q.leftCols(q).transpose() * w);
        if (w.norm() > tols.rank * norm_a) {
            Q.col(q++) = w / w.norm();
            chosen.push_back(r);
            if (static_cast<int>(chosen.size()) == n - 1) break;
        }
    }
    return chosen;
}

} // namespace

Basis make_basis(const OpfProblem& prob, std::vector<int> rows) {
    const int n = prob.n;
    if (static_cast<int>(rows.size()) != n - 1)
        throw SingularBasis("basis needs exactly n-1 rows, got " +
                            std::to_string(rows.size()));
    std::sort(rows.begin(), rows.end());
    Basis basis;
    basis.B.resize(n, n);
    for (int k = 0; k < n - 1; ++k) {
        int r = rows[k];
        if (r < 0 || r >= prob.rows())
            throw SingularBasis("basis row " + std::to_string(r) + " out of range");
        basis.B.row(k) = prob.A.row(r);
    }
    basis.B.row(n - 1) = Eigen::RowVectorXd::Ones(n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis.B);
    if (!lu.isInvertible())
        throw SingularBasis("basis rows plus the balance row are rank deficient");
    basis.B_inv = lu.inverse();
    basis.rows = std::move(rows);
    return basis;
}

Basis extract_basis(const OpfProblem& prob, const Eigen::VectorXd& p,
                    const Eigen::VectorXd& omega, const SolverTolerances& tols) {
    Eigen::VectorXd bt = prob.b + prob.C * omega;
    std::vector<int> act = active_rows_at(prob, p, bt, tols.active);
    std::vector<int> rows = canonical_rows(prob, act, tols);
    if (static_cast<int>(rows.size()) != prob.n - 1)
        throw RankDeficient("point is not a vertex: only " +
                            std::to_string(rows.size() + 1) + " of " +
                            std::to_string(prob.n) + " independent active rows");
    return make_basis(prob, rows);
}

LpSolution solve_opf(const OpfProblem& prob, const Eigen::VectorXd& omega,
                     const SolverTolerances& tols) {
    const int n = prob.n;
    const int rows = prob.rows();
    if (omega.size() != prob.v)
        throw DomainError("omega has size " + std::to_string(omega.size()) +
                          ", expected " + std::to_string(prob.v));

    Eigen::VectorXd bt = prob.b + prob.C * omega;
    const double rhs = prob.balance_rhs(omega);

    LpSolution sol;

    // start point: meet the balance row inside the generator box
    BoxBounds box = box_bounds(prob);
    Eigen::VectorXd p;
    if (!greedy_balance_point(box, rhs, tols.feas, p)) {
        sol.status = SolveStatus::Infeasible;
        return sol;
    }

    // phase 1: drive the worst violation to zero with one relaxation
    // variable t on the initially violated rows,  min t  over (p, t)
    Eigen::VectorXd slack = bt - prob.A * p;
    int worst = -1;
    double t0 = 0.0;
    for (int r = 0; r < rows; ++r) {
        if (-slack(r) > t0) {
            t0 = -slack(r);
            worst = r;
        }
    }

    if (worst >= 0 && t0 > tols.feas) {
        const int dim = n + 1;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows + 1, dim);
        G.topLeftCorner(rows, n) = prob.A;
        Eigen::VectorXd h(rows + 1);
        h.head(rows) = bt;
        for (int r = 0; r < rows; ++r)
            if (slack(r) < -tols.feas) G(r, n) = -1.0; // relax violated rows only
        G(rows, n) = -1.0; // t >= 0
        h(rows) = 0.0;

        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        g(n) = 1.0;
        Eigen::VectorXd eq = Eigen::VectorXd::Zero(dim);
        eq.head(n).setOnes();

        // vertex start: n-1 pinned box rows + the worst violated row
        int split = -1; // generator strictly between its bounds, if any
        for (int i = 0; i < n; ++i) {
            if (p(i) > box.lb(i) + tols.active && p(i) < box.ub(i) - tols.active) {
                split = i;
                break;
            }
        }
        if (split < 0 && n > 0) split = n - 1; // all pinned: skip the last one
        std::vector<int> W = pinned_box_rows(prob, box, p, split, tols.active);
        if (static_cast<int>(W.size()) != n - 1)
            throw NumericalFailure("phase-1 start is not a vertex of the lifted problem");
        W.push_back(worst);

        Eigen::VectorXd z(dim);
        z.head(n) = p;
        z(n) = t0;

        ActiveSetCore core(G, h, g, eq, tols);
        core.run(z, W); // never unbounded: t >= 0 bounds the objective

        if (z(n) > tols.feas) {
            sol.status = SolveStatus::Infeasible;
            return sol;
        }
        p = z.head(n);
    }

    // purification: walk to a vertex of the original polytope
    SolveStatus purity = purify_to_vertex(prob, bt, tols, p);
    if (purity == SolveStatus::Unbounded) {
        sol.status = SolveStatus::Unbounded;
        return sol;
    }

    // phase 2: optimize from the vertex
    if (n > 1) {
        std::vector<int> act = active_rows_at(prob, p, bt, tols.active);
        std::vector<int> W = canonical_rows(prob, act, tols);
        if (static_cast<int>(W.size()) != n - 1)
            throw NumericalFailure("phase-2 start is not a vertex");
        Eigen::VectorXd eq = Eigen::VectorXd::Ones(n);
        ActiveSetCore core(prob.A, bt, prob.cost, eq, tols);
        auto result = core.run(p, W);
        if (result == ActiveSetCore::Result::Unbounded) {
            sol.status = SolveStatus::Unbounded;
            return sol;
        }
    }

    sol.status = SolveStatus::Optimal;
    sol.p = p;
    sol.objective = prob.cost.dot(p);
    sol.active_rows = active_rows_at(prob, p, bt, tols.active);
    sol.basis = extract_basis(prob, p, omega, tols);
    return sol;
}

} // namespace opfens
