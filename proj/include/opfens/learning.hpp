#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "opfens/lp.hpp"
#include "opfens/network.hpp"
#include "opfens/policy.hpp"

namespace opfens {

/// Independent zero-mean normal deviation per bus, sigma_i = scaling * |d_i|.
struct UncertaintyModel {
    Eigen::VectorXd sigma; // size v, p.u.
    std::uint64_t seed = 0;
    double sigma_scaling = 0.0; // provenance, kept for artifact metadata

    static UncertaintyModel from_scaling(const PowerNetwork& net,
                                         double sigma_scaling,
                                         std::uint64_t seed);
};

/// Disjoint sample streams derived from one base seed. Training and
/// out-of-sample streams must never overlap; the purpose tag enforces it.
enum class StreamPurpose : std::uint32_t { Training = 1, Test = 2, Holdout = 3 };

/// The omega draw for one (purpose, index) slot. Pure function of
/// (model.seed, purpose, index): the i-th draw is identical no matter
/// which thread or batch produces it.
Eigen::VectorXd sample_omega_at(const UncertaintyModel& model,
                                StreamPurpose purpose, std::uint64_t index);

/// k i.i.d. draws from the start of a stream.
std::vector<Eigen::VectorXd> sample_omega(const UncertaintyModel& model,
                                          std::uint64_t k,
                                          StreamPurpose purpose = StreamPurpose::Training);

/// Outcome of solving one scenario.
struct SampleOutcome {
    std::int64_t index = 0;
    bool feasible = false;
    std::vector<int> basis_rows; // canonical, empty when infeasible
    double objective = 0.0;
};

/// Serial reference: solve scenarios [start, start+count) one by one.
std::vector<SampleOutcome> solve_scenarios_serial(const OpfProblem& prob,
                                                  const UncertaintyModel& model,
                                                  StreamPurpose purpose,
                                                  std::int64_t start,
                                                  std::int64_t count);

/// OpenMP kernel. Produces exactly the serial result for any thread count:
/// each sample is an independent pure function of its index.
std::vector<SampleOutcome> solve_scenarios_parallel(const OpfProblem& prob,
                                                    const UncertaintyModel& model,
                                                    StreamPurpose purpose,
                                                    std::int64_t start,
                                                    std::int64_t count,
                                                    int threads = 0);

constexpr std::int32_t kInfeasibleId = -1;

struct TraceRecord {
    std::int64_t sample_index = 0;
    std::int32_t basis_id = kInfeasibleId;
    bool is_new = false; // training prefix: first occurrence;
                         // window: X_i, novelty vs the first M samples only
};

struct CatalogEntry {
    std::int32_t id = 0;              // discovery order over all M+W samples
    std::vector<int> rows;            // kept-row indices of the basis
    std::int64_t count_training = 0;  // occurrences among the first M samples
    std::int64_t count_total = 0;     // occurrences among all M+W samples
    std::int64_t first_seen = 0;      // sample index of first occurrence
};

struct DiscoveryTrace {
    std::int64_t M = 0;
    std::int64_t W = 0;
    std::vector<TraceRecord> records;   // size M+W, ascending sample_index
    std::vector<CatalogEntry> catalog;  // indexed by id
    std::int64_t infeasible_training = 0;
    std::int64_t infeasible_total = 0;

    /// pi-hat of a catalog entry: share of the first M samples.
    double pi_hat(std::int32_t id) const {
        return static_cast<double>(catalog.at(id).count_training) /
               static_cast<double>(M);
    }

    /// Unique bases among the first `samples_seen` records.
    std::int64_t unique_bases_at(std::int64_t samples_seen) const;
};

/// Smallest integer W with W > (8/eps) * ln(1/delta), the Chernoff-style
/// window bound. Throws DomainError unless 0 < eps < 1 and 0 < delta < 1.
int window_size(double epsilon, double delta);

/// Draw and solve M+W scenarios from the training stream and assemble the
/// discovery trace. threads <= 1 uses the serial reference path.
DiscoveryTrace run_learning(const OpfProblem& prob, const UncertaintyModel& model,
                            std::int64_t M, std::int64_t W, int threads = 0);

/// Build a trace from precomputed outcomes (deterministic merge step,
/// shared by the serial and parallel paths).
DiscoveryTrace assemble_trace(const std::vector<SampleOutcome>& outcomes,
                              std::int64_t M, std::int64_t W);

/// Mean of X_i over the final W records; infeasible records count 0.
/// Throws InsufficientSamples.
double rate_of_discovery(const DiscoveryTrace& trace);

struct CoverageVerdict {
    double epsilon = 0.0;
    double delta = 0.0;
    std::int64_t W = 0;
    double R_W = 0.0;
    enum class Outcome { Success, Inconclusive } outcome = Outcome::Inconclusive;
};

/// Success iff R_W < eps/2 strictly. Requires trace.W >= window_size(eps, delta),
/// else throws WindowTooSmall.
CoverageVerdict coverage_test(const DiscoveryTrace& trace, double epsilon,
                              double delta);

/// The K most frequent training bases (ties by first observation), with
/// pi-hat as member probability. Bases never seen in the first M samples
/// are not candidates. K above the catalog size truncates.
EnsemblePolicy top_k_ensemble(const DiscoveryTrace& trace, const OpfProblem& prob,
                              int K);

/// Monte-Carlo check of the coverage-test guarantee on a synthetic
/// categorical distribution whose designated unobserved categories carry
/// exactly tail_mass. Returns the fraction of trials with R_W < eps/2;
/// the bound promises it stays below delta. Throws DomainError if
/// tail_mass <= epsilon (the conditioning event would be empty).
double validate_theorem2_montecarlo(int num_categories, double tail_mass,
                                    double epsilon, double delta, int trials,
                                    std::uint64_t seed);

} // namespace opfens
