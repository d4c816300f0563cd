#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opfens/learning.hpp"

namespace opfens {

struct PerKRecord {
    int K = 0;
    double prop_optimal = 0.0;
    double prop_feasible = 0.0;
};

struct CurvePoint {
    std::int64_t samples_seen = 0;
    double value = 0.0;
};

struct EvaluationReport {
    std::string case_id;
    double sigma_scaling = 0.0;
    std::uint64_t seed = 0;
    std::int64_t n_test = 0;
    std::int64_t infeasible_lp_count = 0; // test scenarios outside Omega^R
    std::vector<PerKRecord> per_k;
    std::vector<CurvePoint> coverage_curve;     // holdout mass covered by O_{M'}
    std::vector<CurvePoint> unique_bases_curve; // training discovery curve
};

enum class ReportFormat { Csv, Json, Text };

/// Out-of-sample assessment: n_test fresh scenarios from the test stream,
/// per-K optimal/feasible proportions (LP-infeasible scenarios excluded
/// from denominators), plus coverage and unique-basis curves at the given
/// checkpoints. "Optimal" means ensemble cost within 1e-6 relative of the
/// LP optimum.
EvaluationReport evaluate_out_of_sample(const std::vector<int>& ens_sizes,
                                        const DiscoveryTrace& trace,
                                        const OpfProblem& prob,
                                        const UncertaintyModel& model,
                                        std::int64_t n_test,
                                        const std::vector<std::int64_t>& checkpoints = {},
                                        int threads = 0);

/// Same per-K assessment for an already-built (e.g. reloaded) ensemble;
/// prefix ensembles are taken over its member order. No curves.
EvaluationReport evaluate_ensemble(const EnsemblePolicy& ens,
                                   const std::vector<int>& ens_sizes,
                                   const OpfProblem& prob,
                                   const UncertaintyModel& model,
                                   std::int64_t n_test, int threads = 0);

/// Fraction of (feasible) holdout scenarios whose canonical optimal basis
/// appears within the first `checkpoint` training samples of the trace.
std::vector<CurvePoint> coverage_curve(const DiscoveryTrace& trace,
                                       const std::vector<std::int64_t>& checkpoints,
                                       const std::vector<SampleOutcome>& holdout);

/// Deterministic, column-stable rendering. Text mode prints proportions
/// to three decimals.
std::string render_tables(const EvaluationReport& report, ReportFormat format);

inline constexpr double kOptimalCostRelTol = 1e-6;

} // namespace opfens
