#include "opfens/learning.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace opfens {

UncertaintyModel UncertaintyModel::from_scaling(const PowerNetwork& net,
                                                double sigma_scaling,
                                                std::uint64_t seed) {
    if (sigma_scaling < 0.0)
        throw DomainError("sigma scaling must be non-negative");
    UncertaintyModel model;
    model.sigma = sigma_scaling * net.d.cwiseAbs();
    model.seed = seed;
    model.sigma_scaling = sigma_scaling;
    return model;
}

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint32_t purpose,
                                std::uint64_t index) {
    constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;
    std::uint64_t key = mix64(seed + golden * (purpose + 1ull));
    return mix64(key + golden * (index + 1ull));
}

inline double unit_open(std::uint64_t bits) {
    // (0, 1]: Box-Muller needs log() of a strictly positive uniform
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

inline double unit_halfopen(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53; // [0, 1)
}

} // namespace

Eigen::VectorXd sample_omega_at(const UncertaintyModel& model,
                                StreamPurpose purpose, std::uint64_t index) {
    const int v = static_cast<int>(model.sigma.size());
    std::mt19937_64 rng(stream_key(model.seed, static_cast<std::uint32_t>(purpose), index));
    Eigen::VectorXd omega(v);
    // hand-rolled Box-Muller: std::normal_distribution is implementation-
    // defined, which would break cross-platform reproducibility
    for (int i = 0; i < v; i += 2) {
        double u1 = unit_open(rng());
        double u2 = unit_halfopen(rng());
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        omega(i) = radius * std::cos(angle);
        if (i + 1 < v) omega(i + 1) = radius * std::sin(angle);
    }
    return omega.cwiseProduct(model.sigma);
}

std::vector<Eigen::VectorXd> sample_omega(const UncertaintyModel& model,
                                          std::uint64_t k, StreamPurpose purpose) {
    std::vector<Eigen::VectorXd> draws;
    draws.reserve(k);
    for (std::uint64_t i = 0; i < k; ++i)
        draws.push_back(sample_omega_at(model, purpose, i));
    return draws;
}

namespace {

SampleOutcome solve_one(const OpfProblem& prob, const UncertaintyModel& model,
                        StreamPurpose purpose, std::int64_t index) {
    SampleOutcome out;
    out.index = index;
    Eigen::VectorXd omega =
        sample_omega_at(model, purpose, static_cast<std::uint64_t>(index));
    LpSolution sol = solve_opf(prob, omega);
    if (sol.status == SolveStatus::Optimal) {
        out.feasible = true;
        out.basis_rows = sol.basis->rows;
        out.objective = sol.objective;
    }
    // Infeasible and (pathological) Unbounded scenarios both fall outside
    // the recoverable set and are recorded as infeasible.
    return out;
}

} // namespace

std::vector<SampleOutcome> solve_scenarios_serial(const OpfProblem& prob,
                                                  const UncertaintyModel& model,
                                                  StreamPurpose purpose,
                                                  std::int64_t start,
                                                  std::int64_t count) {
    std::vector<SampleOutcome> out(static_cast<size_t>(count));
    for (std::int64_t k = 0; k < count; ++k)
        out[static_cast<size_t>(k)] = solve_one(prob, model, purpose, start + k);
    return out;
}

std::vector<SampleOutcome> solve_scenarios_parallel(const OpfProblem& prob,
                                                    const UncertaintyModel& model,
                                                    StreamPurpose purpose,
                                                    std::int64_t start,
                                                    std::int64_t count,
                                                    int threads) {
    std::vector<SampleOutcome> out(static_cast<size_t>(count));
    bool failed = false;
    std::string what;
#ifdef _OPENMP
    if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t k = 0; k < count; ++k) {
        try {
            out[static_cast<size_t>(k)] = solve_one(prob, model, purpose, start + k);
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
    for (std::int64_t k = 0; k < count; ++k)
        out[static_cast<size_t>(k)] = solve_one(prob, model, purpose, start + k);
#endif
    if (failed) throw NumericalFailure("scenario solve failed: " + what);
    return out;
}

DiscoveryTrace assemble_trace(const std::vector<SampleOutcome>& outcomes,
                              std::int64_t M, std::int64_t W) {
    if (M < 1) throw DomainError("training size M must be at least 1");
    if (W < 0) throw DomainError("window size W must be non-negative");
    if (static_cast<std::int64_t>(outcomes.size()) != M + W)
        throw InsufficientSamples("expected " + std::to_string(M + W) +
                                  " outcomes, got " + std::to_string(outcomes.size()));

    DiscoveryTrace trace;
    trace.M = M;
    trace.W = W;
    trace.records.reserve(outcomes.size());
    std::map<std::vector<int>, std::int32_t> ids;

    for (std::int64_t k = 0; k < M + W; ++k) {
        const SampleOutcome& out = outcomes[static_cast<size_t>(k)];
        TraceRecord rec;
        rec.sample_index = out.index;
        if (!out.feasible) {
            rec.basis_id = kInfeasibleId;
            rec.is_new = false;
            trace.infeasible_total += 1;
            if (k < M) trace.infeasible_training += 1;
            trace.records.push_back(rec);
            continue;
        }
        auto [it, inserted] = ids.emplace(out.basis_rows,
                                          static_cast<std::int32_t>(trace.catalog.size()));
        if (inserted) {
            CatalogEntry entry;
            entry.id = it->second;
            entry.rows = out.basis_rows;
            entry.first_seen = out.index;
            trace.catalog.push_back(std::move(entry));
        }
        CatalogEntry& entry = trace.catalog[static_cast<size_t>(it->second)];
        entry.count_total += 1;
        if (k < M) entry.count_training += 1;
        rec.basis_id = it->second;
        if (k < M) {
            rec.is_new = inserted; // first occurrence in the training prefix
        } else {
            // window indicator X_i: novelty against the set discovered in
            // the first M samples only (fixed baseline)
            rec.is_new = entry.count_training == 0;
        }
        trace.records.push_back(rec);
    }
    return trace;
}

DiscoveryTrace run_learning(const OpfProblem& prob, const UncertaintyModel& model,
                            std::int64_t M, std::int64_t W, int threads) {
    if (M < 1) throw DomainError("training size M must be at least 1");
    if (W < 0) throw DomainError("window size W must be non-negative");
    std::vector<SampleOutcome> outcomes =
        threads <= 1 ? solve_scenarios_serial(prob, model, StreamPurpose::Training, 0, M + W)
                     : solve_scenarios_parallel(prob, model, StreamPurpose::Training, 0,
                                                M + W, threads);
    return assemble_trace(outcomes, M, W);
}

std::int64_t DiscoveryTrace::unique_bases_at(std::int64_t samples_seen) const {
    std::int64_t count = 0;
    for (const CatalogEntry& entry : catalog)
        if (entry.first_seen < samples_seen) ++count;
    return count;
}

int window_size(double epsilon, double delta) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw DomainError("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("delta must lie in (0, 1)");
    double bound = (8.0 / epsilon) * std::log(1.0 / delta);
    return static_cast<int>(std::floor(bound)) + 1; // smallest integer > bound
}

double rate_of_discovery(const DiscoveryTrace& trace) {
    if (trace.W < 1)
        throw InsufficientSamples("trace has no window samples");
    std::int64_t hits = 0;
    for (std::int64_t k = trace.M; k < trace.M + trace.W; ++k)
        hits += trace.records[static_cast<size_t>(k)].is_new ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(trace.W);
}

CoverageVerdict coverage_test(const DiscoveryTrace& trace, double epsilon,
                              double delta) {
    int needed = window_size(epsilon, delta);
    if (trace.W < needed)
        throw WindowTooSmall("window has " + std::to_string(trace.W) +
                             " samples, coverage test needs at least " +
                             std::to_string(needed));
    CoverageVerdict verdict;
    verdict.epsilon = epsilon;
    verdict.delta = delta;
    verdict.W = trace.W;
    verdict.R_W = rate_of_discovery(trace);
    verdict.outcome = verdict.R_W < epsilon / 2.0
                          ? CoverageVerdict::Outcome::Success
                          : CoverageVerdict::Outcome::Inconclusive;
    return verdict;
}

EnsemblePolicy top_k_ensemble(const DiscoveryTrace& trace, const OpfProblem& prob,
                              int K) {
    if (K < 1) throw DomainError("ensemble size K must be at least 1");

    // candidates: bases observed in the training prefix, most frequent first,
    // ties broken by earlier first observation
    std::vector<const CatalogEntry*> candidates;
    for (const CatalogEntry& entry : trace.catalog)
        if (entry.count_training > 0) candidates.push_back(&entry);
    std::sort(candidates.begin(), candidates.end(),
              [](const CatalogEntry* a, const CatalogEntry* b) {
                  if (a->count_training != b->count_training)
                      return a->count_training > b->count_training;
                  return a->first_seen < b->first_seen;
              });
    if (static_cast<size_t>(K) < candidates.size()) candidates.resize(static_cast<size_t>(K));

    EnsemblePolicy ens;
    ens.members.reserve(candidates.size());
    for (const CatalogEntry* entry : candidates) {
        EnsembleMember member;
        member.policy = make_policy(prob, make_basis(prob, entry->rows));
        member.probability = trace.pi_hat(entry->id);
        ens.members.push_back(std::move(member));
    }
    return ens;
}

double validate_theorem2_montecarlo(int num_categories, double tail_mass,
                                    double epsilon, double delta, int trials,
                                    std::uint64_t seed) {
    if (num_categories < 2) throw DomainError("need at least two categories");
    if (!(tail_mass > epsilon))
        throw DomainError("tail mass must exceed epsilon for the conditioning "
                          "event to hold");
    if (tail_mass >= 1.0) throw DomainError("tail mass must be below 1");
    if (trials < 1) throw DomainError("need at least one trial");

    const int W = window_size(epsilon, delta);
    // categorical layout: the last quarter of the categories (at least one)
    // are the never-observed tail and share tail_mass uniformly
    const int tail_count = std::max(1, num_categories / 4);
    const int head_count = num_categories - tail_count;
    if (head_count < 1) throw DomainError("tail swallowed every category");

    int violations = 0;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng(stream_key(seed, 0x7e02u, static_cast<std::uint64_t>(t)));
        std::int64_t new_hits = 0;
        for (int i = 0; i < W; ++i) {
            double u = unit_halfopen(rng());
            // category c is a tail category iff u < tail_mass; which tail
            // category is irrelevant to the novelty indicator
            new_hits += u < tail_mass ? 1 : 0;
        }
        double rate = static_cast<double>(new_hits) / static_cast<double>(W);
        // violation: the unobserved mass is >= tail_mass > epsilon, yet the
        // test would still claim coverage success
        if (rate < epsilon / 2.0) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(trials);
}

} // namespace opfens
