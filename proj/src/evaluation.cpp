#include "opfens/evaluation.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "opfens/io.hpp"

namespace opfens {

namespace {

/// Per-scenario outcome of evaluating every prefix ensemble at once.
/// Member policies are probability-ordered, so the K-member ensemble is the
/// first K members; a prefix scan then yields all K values in one pass.
struct ScenarioEval {
    bool lp_feasible = false;
    double lp_objective = 0.0;
    std::vector<double> member_cost;  // +inf when the member output is infeasible
    std::vector<char> member_feasible;
};

ScenarioEval evaluate_scenario(const std::vector<BasisPolicy>& policies,
                               const OpfProblem& prob, const UncertaintyModel& model,
                               std::int64_t index, double feas_tol) {
    ScenarioEval ev;
    Eigen::VectorXd omega =
        sample_omega_at(model, StreamPurpose::Test, static_cast<std::uint64_t>(index));
    LpSolution sol = solve_opf(prob, omega);
    ev.lp_feasible = sol.status == SolveStatus::Optimal;
    ev.lp_objective = sol.objective;
    ev.member_cost.resize(policies.size());
    ev.member_feasible.resize(policies.size());
    for (size_t k = 0; k < policies.size(); ++k) {
        Eigen::VectorXd p = policies[k].eval(omega);
        bool ok = check_feasible(prob, p, omega, feas_tol);
        ev.member_feasible[k] = ok ? 1 : 0;
        ev.member_cost[k] = ok ? prob.cost.dot(p)
                               : std::numeric_limits<double>::infinity();
    }
    return ev;
}

EvaluationReport evaluate_core(const EnsemblePolicy& ens,
                               const std::vector<int>& ens_sizes,
                               const OpfProblem& prob, const UncertaintyModel& model,
                               std::int64_t n_test, int threads) {
    if (n_test < 1) throw DomainError("n_test must be at least 1");
    if (ens.members.empty()) throw DomainError("ensemble has no members");

    std::vector<int> sizes = ens_sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    if (sizes.empty() || sizes.front() < 1)
        throw DomainError("ensemble sizes must be positive");

    std::vector<BasisPolicy> policies;
    policies.reserve(ens.members.size());
    for (const EnsembleMember& member : ens.members) policies.push_back(member.policy);

    std::vector<ScenarioEval> evals(static_cast<size_t>(n_test));
    bool failed = false;
    std::string what;
#ifdef _OPENMP
    int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (std::int64_t i = 0; i < n_test; ++i) {
        try {
            evals[static_cast<size_t>(i)] =
                evaluate_scenario(policies, prob, model, i, ens.feas_tol);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                what = e.what();
            }
        }
    }
#else
    (void)threads;
    for (std::int64_t i = 0; i < n_test; ++i)
        evals[static_cast<size_t>(i)] =
            evaluate_scenario(policies, prob, model, i, ens.feas_tol);
#endif
    if (failed) throw NumericalFailure("test-scenario evaluation failed: " + what);

    EvaluationReport report;
    report.case_id = prob.case_id;
    report.sigma_scaling = model.sigma_scaling;
    report.seed = model.seed;
    report.n_test = n_test;

    std::int64_t n_lp_feasible = 0;
    std::vector<std::int64_t> optimal_count(sizes.size(), 0);
    std::vector<std::int64_t> feasible_count(sizes.size(), 0);

    for (const ScenarioEval& ev : evals) {
        if (!ev.lp_feasible) continue;
        ++n_lp_feasible;
        // running best over the member prefix; sizes are ascending so one
        // sweep covers every requested K
        double best = std::numeric_limits<double>::infinity();
        size_t covered = 0;
        for (size_t s = 0; s < sizes.size(); ++s) {
            size_t upto = std::min<size_t>(static_cast<size_t>(sizes[s]), policies.size());
            for (; covered < upto; ++covered)
                best = std::min(best, ev.member_cost[covered]);
            if (std::isfinite(best)) {
                feasible_count[s] += 1;
                double tol = kOptimalCostRelTol * std::max(1.0, std::abs(ev.lp_objective));
                if (std::abs(best - ev.lp_objective) <= tol) optimal_count[s] += 1;
            }
        }
    }

    report.infeasible_lp_count = n_test - n_lp_feasible;
    for (size_t s = 0; s < sizes.size(); ++s) {
        PerKRecord rec;
        rec.K = sizes[s];
        if (n_lp_feasible > 0) {
            rec.prop_optimal = static_cast<double>(optimal_count[s]) /
                               static_cast<double>(n_lp_feasible);
            rec.prop_feasible = static_cast<double>(feasible_count[s]) /
                                static_cast<double>(n_lp_feasible);
        }
        report.per_k.push_back(rec);
    }
    return report;
}

} // namespace

EvaluationReport evaluate_ensemble(const EnsemblePolicy& ens,
                                   const std::vector<int>& ens_sizes,
                                   const OpfProblem& prob,
                                   const UncertaintyModel& model,
                                   std::int64_t n_test, int threads) {
    return evaluate_core(ens, ens_sizes, prob, model, n_test, threads);
}

std::vector<CurvePoint> coverage_curve(const DiscoveryTrace& trace,
                                       const std::vector<std::int64_t>& checkpoints,
                                       const std::vector<SampleOutcome>& holdout) {
    // first-appearance position of every learned basis
    std::map<std::vector<int>, std::int64_t> first_seen;
    for (const CatalogEntry& entry : trace.catalog)
        first_seen.emplace(entry.rows, entry.first_seen);

    std::int64_t n_feasible = 0;
    std::vector<std::int64_t> seen_at; // first_seen of each holdout basis, or INT64_MAX
    for (const SampleOutcome& out : holdout) {
        if (!out.feasible) continue;
        ++n_feasible;
        auto it = first_seen.find(out.basis_rows);
        seen_at.push_back(it == first_seen.end() ? std::numeric_limits<std::int64_t>::max()
                                                 : it->second);
    }

    std::vector<CurvePoint> curve;
    for (std::int64_t cp : checkpoints) {
        CurvePoint pt;
        pt.samples_seen = cp;
        if (n_feasible > 0) {
            std::int64_t covered = 0;
            for (std::int64_t fs : seen_at)
                if (fs < cp) ++covered;
            pt.value = static_cast<double>(covered) / static_cast<double>(n_feasible);
        }
        curve.push_back(pt);
    }
    return curve;
}

EvaluationReport evaluate_out_of_sample(const std::vector<int>& ens_sizes,
                                        const DiscoveryTrace& trace,
                                        const OpfProblem& prob,
                                        const UncertaintyModel& model,
                                        std::int64_t n_test,
                                        const std::vector<std::int64_t>& checkpoints,
                                        int threads) {
    if (ens_sizes.empty()) throw DomainError("need at least one ensemble size");
    int k_max = *std::max_element(ens_sizes.begin(), ens_sizes.end());
    EnsemblePolicy ens = top_k_ensemble(trace, prob, k_max);

    EvaluationReport report = evaluate_core(ens, ens_sizes, prob, model, n_test, threads);

    if (!checkpoints.empty()) {
        for (std::int64_t cp : checkpoints) {
            CurvePoint pt;
            pt.samples_seen = cp;
            pt.value = static_cast<double>(trace.unique_bases_at(cp));
            report.unique_bases_curve.push_back(pt);
        }
        // holdout scenarios sized like the test set, from a disjoint stream
        std::vector<SampleOutcome> holdout =
            threads <= 1
                ? solve_scenarios_serial(prob, model, StreamPurpose::Holdout, 0, n_test)
                : solve_scenarios_parallel(prob, model, StreamPurpose::Holdout, 0,
                                           n_test, threads);
        report.coverage_curve = coverage_curve(trace, checkpoints, holdout);
    }
    return report;
}

namespace {

std::string format_double(double x, int decimals) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(decimals);
    out << x;
    return out.str();
}

std::string format_full(double x) {
    std::ostringstream out;
    out.precision(17);
    out << x;
    return out.str();
}

} // namespace

std::string render_tables(const EvaluationReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(report);

    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "# per_k\nK,prop_optimal,prop_feasible\n";
        for (const PerKRecord& rec : report.per_k)
            out << rec.K << ',' << format_full(rec.prop_optimal) << ','
                << format_full(rec.prop_feasible) << '\n';
        if (!report.unique_bases_curve.empty()) {
            out << "\n# unique_bases\nsamples_seen,unique_bases\n";
            for (const CurvePoint& pt : report.unique_bases_curve)
                out << pt.samples_seen << ',' << format_full(pt.value) << '\n';
        }
        if (!report.coverage_curve.empty()) {
            out << "\n# coverage\nsamples_seen,holdout_mass_covered\n";
            for (const CurvePoint& pt : report.coverage_curve)
                out << pt.samples_seen << ',' << format_full(pt.value) << '\n';
        }
        return out.str();
    }

    out << "case " << report.case_id << "  (sigma scaling "
        << format_double(report.sigma_scaling, 3) << ", seed " << report.seed
        << ")\n";
    out << "test scenarios: " << report.n_test << "  (LP-infeasible: "
        << report.infeasible_lp_count << ")\n\n";
    out << "    K  prop_optimal  prop_feasible\n";
    for (const PerKRecord& rec : report.per_k) {
        out << std::setw(5) << rec.K << "  " << std::setw(12)
            << format_double(rec.prop_optimal, 3) << "  " << std::setw(13)
            << format_double(rec.prop_feasible, 3) << '\n';
    }
    if (!report.unique_bases_curve.empty()) {
        out << "\n  samples_seen  unique_bases\n";
        for (const CurvePoint& pt : report.unique_bases_curve)
            out << std::setw(14) << pt.samples_seen << "  " << std::setw(12)
                << static_cast<std::int64_t>(pt.value) << '\n';
    }
    if (!report.coverage_curve.empty()) {
        out << "\n  samples_seen  holdout_mass_covered\n";
        for (const CurvePoint& pt : report.coverage_curve)
            out << std::setw(14) << pt.samples_seen << "  " << std::setw(20)
                << format_double(pt.value, 3) << '\n';
    }
    return out.str();
}

} // namespace opfens
