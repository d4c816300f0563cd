#pragma once

#include <string>

#include "opfens/evaluation.hpp"
#include "opfens/learning.hpp"
#include "opfens/network.hpp"
#include "opfens/policy.hpp"

namespace opfens {

/// Ensemble artifact: per member the basis row labels, empirical
/// probability, gain matrix and offset vector in full precision, plus the
/// case identity. Enough to reload and evaluate without re-learning.
std::string ensemble_to_json(const EnsemblePolicy& ens, const OpfProblem& prob,
                             double sigma_scaling, std::uint64_t seed);

/// Reload an ensemble against the problem it was learned on.
/// Throws EnsembleCaseMismatch if the case id or data digest differs,
/// SchemaMismatch on a wrong schema version.
EnsemblePolicy ensemble_from_json(const std::string& text, const OpfProblem& prob);

double sigma_scaling_from_ensemble_json(const std::string& text);

/// trace CSV: sample_index, basis_id | "INFEASIBLE", is_new.
std::string trace_to_csv(const DiscoveryTrace& trace);

/// catalog CSV: basis_id, count, pi_hat, row labels joined by "|".
std::string catalog_to_csv(const DiscoveryTrace& trace, const OpfProblem& prob);

std::string verdict_to_json(const CoverageVerdict& verdict);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);

/// Normalized PowerNetwork form; parse-independent and idempotent.
std::string network_to_json(const PowerNetwork& net);
PowerNetwork network_from_json(const std::string& text);

} // namespace opfens
