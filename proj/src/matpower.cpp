#include "opfens/matpower.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace opfens {

namespace {

// Strip "%..." comments and surrounding whitespace.
std::string clean_line(std::string line) {
    auto pos = line.find('%');
    if (pos != std::string::npos) line.erase(pos);
    auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    auto last = line.find_last_not_of(" \t\r\n");
    return line.substr(first, last - first + 1);
}

std::vector<double> parse_row(const std::string& text, const std::string& table) {
    std::vector<double> row;
    const char* p = text.c_str();
    while (*p) {
        while (*p == ' ' || *p == '\t' || *p == ',') ++p;
        if (!*p) break;
        char* end = nullptr;
        double value = std::strtod(p, &end);
        if (end == p) {
            // accept Matlab Inf spellings
            if (std::strncmp(p, "Inf", 3) == 0) {
                value = std::numeric_limits<double>::infinity();
                end = const_cast<char*>(p) + 3;
            } else if (std::strncmp(p, "-Inf", 4) == 0) {
                value = -std::numeric_limits<double>::infinity();
                end = const_cast<char*>(p) + 4;
            } else {
                throw SyntaxError("mpc." + table + ": cannot parse numeric field at '" +
                                  std::string(p).substr(0, 16) + "'");
            }
        }
        row.push_back(value);
        p = end;
    }
    return row;
}

// Reads rows until the closing "];". The opening "mpc.<name> = [" line may
// already carry data after the bracket.
std::vector<std::vector<double>> parse_matrix(std::istringstream& in,
                                              std::string first_line,
                                              const std::string& table) {
    std::vector<std::vector<double>> rows;
    std::string pending = std::move(first_line);
    bool closed = false;
    while (true) {
        std::string chunk = pending;
        pending.clear();
        auto end_pos = chunk.find(']');
        if (end_pos != std::string::npos) {
            closed = true;
            chunk.erase(end_pos);
        }
        // a physical line may hold several ';'-terminated rows
        std::stringstream parts(chunk);
        std::string piece;
        while (std::getline(parts, piece, ';')) {
            piece = clean_line(piece);
            if (piece.empty()) continue;
            auto row = parse_row(piece, table);
            if (!row.empty()) rows.push_back(std::move(row));
        }
        if (closed) break;
        std::string line;
        if (!std::getline(in, line))
            throw SyntaxError("mpc." + table + ": matrix block not closed with ']'");
        pending = clean_line(line);
    }
    for (const auto& row : rows) {
        if (row.size() != rows.front().size())
            throw InconsistentRow("mpc." + table + ": row with " +
                                  std::to_string(row.size()) + " columns, expected " +
                                  std::to_string(rows.front().size()));
    }
    return rows;
}

void require_columns(const std::vector<std::vector<double>>& table, size_t min_cols,
                     const std::string& name) {
    for (const auto& row : table) {
        if (row.size() < min_cols)
            throw InconsistentRow("mpc." + name + ": expected at least " +
                                  std::to_string(min_cols) + " columns, got " +
                                  std::to_string(row.size()));
    }
}

} // namespace

RawCase parse_matpower(const std::string& text) {
    RawCase raw;
    std::istringstream in(text);
    std::string line;
    bool saw_base_mva = false;
    bool saw_bus = false, saw_gen = false, saw_branch = false, saw_gencost = false;

    while (std::getline(in, line)) {
        line = clean_line(line);
        if (line.empty()) continue;

        if (line.rfind("function", 0) == 0) {
            auto eq = line.find('=');
            if (eq != std::string::npos) raw.name = clean_line(line.substr(eq + 1));
            continue;
        }
        if (line.rfind("mpc.", 0) != 0) continue;

        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SyntaxError("assignment without '=': " + line);
        std::string key = clean_line(line.substr(4, eq - 4));
        std::string value = clean_line(line.substr(eq + 1));

        if (key == "baseMVA") {
            raw.base_mva = std::strtod(value.c_str(), nullptr);
            saw_base_mva = true;
            continue;
        }
        if (key == "version") continue;

        bool is_matrix = !value.empty() && value.front() == '[';
        if (!is_matrix) {
            raw.warnings.push_back("ignored scalar block mpc." + key);
            continue;
        }
        value.erase(0, 1); // drop '['

        if (key == "bus") {
            raw.bus = parse_matrix(in, value, key);
            saw_bus = true;
        } else if (key == "gen") {
            raw.gen = parse_matrix(in, value, key);
            saw_gen = true;
        } else if (key == "branch") {
            raw.branch = parse_matrix(in, value, key);
            saw_branch = true;
        } else if (key == "gencost") {
            raw.gencost = parse_matrix(in, value, key);
            saw_gencost = true;
        } else {
            parse_matrix(in, value, key); // consume and discard
            raw.warnings.push_back("ignored matrix block mpc." + key);
        }
    }

    if (!saw_base_mva) throw MissingTable("mpc.baseMVA not found");
    if (!saw_bus) throw MissingTable("mpc.bus not found");
    if (!saw_gen) throw MissingTable("mpc.gen not found");
    if (!saw_branch) throw MissingTable("mpc.branch not found");
    if (!saw_gencost) throw MissingTable("mpc.gencost not found");

    require_columns(raw.bus, 3, "bus");
    require_columns(raw.gen, 10, "gen");
    require_columns(raw.branch, 11, "branch");
    require_columns(raw.gencost, 4, "gencost");
    if (raw.gencost.size() < raw.gen.size())
        throw InconsistentRow("mpc.gencost has fewer rows than mpc.gen");
    return raw;
}

RawCase parse_matpower_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    RawCase raw = parse_matpower(buf.str());
    if (raw.name.empty()) {
        auto slash = path.find_last_of('/');
        auto base = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = base.find_last_of('.');
        raw.name = dot == std::string::npos ? base : base.substr(0, dot);
    }
    return raw;
}

void validate_raw_case(const RawCase& raw) {
    std::set<long> bus_ids;
    int ref_count = 0;
    for (const auto& row : raw.bus) {
        long id = static_cast<long>(row[mpcol::BUS_I]);
        if (!bus_ids.insert(id).second)
            throw CaseValidationError("duplicate bus id " + std::to_string(id));
        if (static_cast<int>(row[mpcol::BUS_TYPE]) == 3) ++ref_count;
    }
    if (ref_count != 1)
        throw CaseValidationError("expected exactly one reference bus (type 3), found " +
                                  std::to_string(ref_count));
    for (const auto& row : raw.gen) {
        long bus = static_cast<long>(row[mpcol::GEN_BUS]);
        if (!bus_ids.count(bus))
            throw CaseValidationError("generator references unknown bus " +
                                      std::to_string(bus));
    }
    for (const auto& row : raw.branch) {
        for (int col : {mpcol::F_BUS, mpcol::T_BUS}) {
            long bus = static_cast<long>(row[col]);
            if (!bus_ids.count(bus))
                throw CaseValidationError("branch references unknown bus " +
                                          std::to_string(bus));
        }
    }
    for (size_t i = 0; i < raw.gencost.size(); ++i) {
        const auto& row = raw.gencost[i];
        int model = static_cast<int>(row[mpcol::COST_MODEL]);
        int ncost = static_cast<int>(row[mpcol::NCOST]);
        size_t needed = mpcol::COST + (model == 1 ? 2 * ncost : ncost);
        if (row.size() < needed)
            throw CaseValidationError("gencost row " + std::to_string(i) + ": ncost " +
                                      std::to_string(ncost) + " needs " +
                                      std::to_string(needed) + " columns, got " +
                                      std::to_string(row.size()));
    }
}

namespace {

// Linear cost coefficient in $/MWh per the cost-extraction rule:
// polynomial (model 2) -> coefficient of p^1; piecewise linear (model 1)
// -> slope of the first segment.
double linear_cost(const std::vector<double>& row) {
    int model = static_cast<int>(row[mpcol::COST_MODEL]);
    int ncost = static_cast<int>(row[mpcol::NCOST]);
    if (model == 2) {
        // coefficients in decreasing power order: c_{ncost-1} ... c_1 c_0
        if (ncost >= 2) return row[mpcol::COST + ncost - 2];
        return 0.0;
    }
    if (model == 1) {
        if (ncost < 2)
            throw CaseValidationError("piecewise cost with fewer than two points");
        double x1 = row[mpcol::COST + 0], y1 = row[mpcol::COST + 1];
        double x2 = row[mpcol::COST + 2], y2 = row[mpcol::COST + 3];
        if (x2 == x1) throw CaseValidationError("piecewise cost with zero-width segment");
        return (y2 - y1) / (x2 - x1);
    }
    throw CaseValidationError("unknown gencost model " + std::to_string(model));
}

// Connectivity of the active-branch graph over all buses.
bool connected(int v, const std::vector<std::pair<int, int>>& edges) {
    if (v <= 1) return true;
    std::vector<std::vector<int>> adj(v);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(v, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int w : adj[u])
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                stack.push_back(w);
            }
    }
    return reached == v;
}

} // namespace

PowerNetwork to_network(const RawCase& raw) {
    validate_raw_case(raw);
    if (raw.base_mva <= 0) throw CaseValidationError("baseMVA must be positive");

    PowerNetwork net;
    net.case_id = raw.name;
    net.v = static_cast<int>(raw.bus.size());

    std::map<long, int> bus_index;
    net.d = Eigen::VectorXd::Zero(net.v);
    net.mu = Eigen::VectorXd::Zero(net.v); // no forecast column in MATPOWER
    for (int i = 0; i < net.v; ++i) {
        const auto& row = raw.bus[i];
        bus_index[static_cast<long>(row[mpcol::BUS_I])] = i;
        net.d(i) = row[mpcol::PD] / raw.base_mva;
        if (static_cast<int>(row[mpcol::BUS_TYPE]) == 3) net.ref_bus = i;
    }

    // in-service generators
    std::vector<int> gen_rows;
    for (size_t g = 0; g < raw.gen.size(); ++g)
        if (raw.gen[g][mpcol::GEN_STATUS] > 0) gen_rows.push_back(static_cast<int>(g));
    net.n = static_cast<int>(gen_rows.size());
    net.pmin.resize(net.n);
    net.pmax.resize(net.n);
    net.cost.resize(net.n);
    net.H = Eigen::MatrixXd::Zero(net.v, net.n);
    net.gen_bus.resize(net.n);
    for (int k = 0; k < net.n; ++k) {
        const auto& row = raw.gen[gen_rows[k]];
        int bus = bus_index.at(static_cast<long>(row[mpcol::GEN_BUS]));
        net.gen_bus[k] = bus;
        net.H(bus, k) = 1.0;
        net.pmin(k) = row[mpcol::PMIN] / raw.base_mva;
        net.pmax(k) = row[mpcol::PMAX] / raw.base_mva;
        // $/MWh * MW/p.u. = $/p.u.
        net.cost(k) = linear_cost(raw.gencost[gen_rows[k]]) * raw.base_mva;
    }

    // in-service branches
    std::vector<int> branch_rows;
    for (size_t l = 0; l < raw.branch.size(); ++l)
        if (raw.branch[l][mpcol::BR_STATUS] > 0) branch_rows.push_back(static_cast<int>(l));
    net.m = static_cast<int>(branch_rows.size());
    net.fmin.resize(net.m);
    net.fmax.resize(net.m);
    net.susceptance.resize(net.m);
    net.incidence = Eigen::MatrixXd::Zero(net.m, net.v);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(net.m);
    for (int l = 0; l < net.m; ++l) {
        const auto& row = raw.branch[branch_rows[l]];
        int from = bus_index.at(static_cast<long>(row[mpcol::F_BUS]));
        int to = bus_index.at(static_cast<long>(row[mpcol::T_BUS]));
        double x = row[mpcol::BR_X];
        if (x == 0.0)
            throw CaseValidationError("branch " + std::to_string(branch_rows[l]) +
                                      " has zero reactance");
        net.incidence(l, from) = 1.0;
        net.incidence(l, to) = -1.0;
        net.susceptance(l) = 1.0 / x;
        double rate_a = row[mpcol::RATE_A];
        // rateA = 0 is the MATPOWER convention for an unlimited branch
        double limit = rate_a > 0 ? rate_a / raw.base_mva
                                  : std::numeric_limits<double>::infinity();
        net.fmax(l) = limit;
        net.fmin(l) = -limit;
        edges.emplace_back(from, to);
    }

    if (!connected(net.v, edges))
        throw IslandedNetwork("active branch graph does not connect all " +
                              std::to_string(net.v) + " buses");
    return net;
}

} // namespace opfens
