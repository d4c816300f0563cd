#pragma once

#include <string>
#include <vector>

#include "opfens/common.hpp"
#include "opfens/network.hpp"

namespace opfens {

// MATPOWER column positions (version 2 case format).
namespace mpcol {
// bus
inline constexpr int BUS_I = 0;
inline constexpr int BUS_TYPE = 1;
inline constexpr int PD = 2;
// gen
inline constexpr int GEN_BUS = 0;
inline constexpr int GEN_STATUS = 7;
inline constexpr int PMAX = 8;
inline constexpr int PMIN = 9;
// branch
inline constexpr int F_BUS = 0;
inline constexpr int T_BUS = 1;
inline constexpr int BR_X = 3;
inline constexpr int RATE_A = 5;
inline constexpr int BR_STATUS = 10;
// gencost
inline constexpr int COST_MODEL = 0;
inline constexpr int NCOST = 3;
inline constexpr int COST = 4;
} // namespace mpcol

/// Raw tables of a MATPOWER case file, numeric fields only.
struct RawCase {
    std::string name; // from "function mpc = <name>"
    double base_mva = 0.0;
    std::vector<std::vector<double>> bus;
    std::vector<std::vector<double>> gen;
    std::vector<std::vector<double>> branch;
    std::vector<std::vector<double>> gencost;
    std::vector<std::string> warnings; // ignored blocks etc.
};

/// Parse MATPOWER case text. Interprets mpc.baseMVA and the bus/gen/branch/
/// gencost matrices; other mpc.* blocks are recorded as warnings.
/// Throws SyntaxError, MissingTable, InconsistentRow.
RawCase parse_matpower(const std::string& text);

/// Convenience: read a file and parse it.
RawCase parse_matpower_file(const std::string& path);

/// Validate the RawCase invariants (bus references, single reference bus,
/// gencost coefficient counts). Throws CaseValidationError.
void validate_raw_case(const RawCase& raw);

/// Convert a validated RawCase into a per-unit PowerNetwork.
/// Out-of-service generators and branches are dropped; rateA = 0 becomes an
/// unlimited branch (fmax = +inf). Throws IslandedNetwork if the active
/// branch graph does not connect all buses.
PowerNetwork to_network(const RawCase& raw);

} // namespace opfens
