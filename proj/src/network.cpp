#include "opfens/network.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <limits>

namespace opfens {

std::string to_string(const RowLabel& label) {
    const char* kind = nullptr;
    switch (label.kind) {
        case RowKind::GenUB: kind = "gen_ub"; break;
        case RowKind::GenLB: kind = "gen_lb"; break;
        case RowKind::FlowUB: kind = "flow_ub"; break;
        case RowKind::FlowLB: kind = "flow_lb"; break;
    }
    return std::string(kind) + ":" + std::to_string(label.index);
}

RowLabel row_label_from_string(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw DomainError("malformed row label: " + text);
    std::string kind = text.substr(0, colon);
    int index = std::stoi(text.substr(colon + 1));
    if (kind == "gen_ub") return {RowKind::GenUB, index};
    if (kind == "gen_lb") return {RowKind::GenLB, index};
    if (kind == "flow_ub") return {RowKind::FlowUB, index};
    if (kind == "flow_lb") return {RowKind::FlowLB, index};
    throw DomainError("unknown row kind: " + kind);
}

int OpfProblem::global_row_id(int kept_row) const {
    const RowLabel& label = row_labels.at(static_cast<size_t>(kept_row));
    int m = nominal_rows / 2 - n;
    switch (label.kind) {
        case RowKind::GenUB: return label.index;
        case RowKind::GenLB: return n + label.index;
        case RowKind::FlowUB: return 2 * n + label.index;
        case RowKind::FlowLB: return 2 * n + m + label.index;
    }
    return -1;
}

namespace {

inline void fnv_mix(std::uint64_t& h, std::uint64_t x) {
    for (int byte = 0; byte < 8; ++byte) {
        h ^= (x >> (8 * byte)) & 0xff;
        h *= 0x100000001b3ull;
    }
}

inline void fnv_mix_double(std::uint64_t& h, double x) {
    // normalize -0.0 so equal values hash equally
    if (x == 0.0) x = 0.0;
    fnv_mix(h, std::bit_cast<std::uint64_t>(x));
}

} // namespace

std::uint64_t OpfProblem::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : case_id) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    fnv_mix(h, static_cast<std::uint64_t>(n));
    fnv_mix(h, static_cast<std::uint64_t>(v));
    fnv_mix(h, static_cast<std::uint64_t>(nominal_rows));
    fnv_mix_double(h, balance_rhs_base);
    for (int i = 0; i < rows(); ++i) {
        fnv_mix(h, static_cast<std::uint64_t>(global_row_id(i)));
        fnv_mix_double(h, b(i));
        for (int j = 0; j < n; ++j) fnv_mix_double(h, A(i, j));
        for (int j = 0; j < v; ++j) fnv_mix_double(h, C(i, j));
    }
    for (int j = 0; j < n; ++j) fnv_mix_double(h, cost(j));
    return h;
}

Eigen::MatrixXd build_ptdf(const PowerNetwork& net) {
    const int v = net.v;
    const int m = net.m;
    if (v == 1 || m == 0) return Eigen::MatrixXd::Zero(m, v);

    // weighted Laplacian B = E' diag(beta) E  and flow matrix Bf = diag(beta) E
    Eigen::MatrixXd bf = net.susceptance.asDiagonal() * net.incidence;
    Eigen::MatrixXd lap = net.incidence.transpose() * bf;

    // delete reference row/column
    std::vector<int> keep;
    keep.reserve(v - 1);
    for (int i = 0; i < v; ++i)
        if (i != net.ref_bus) keep.push_back(i);

    Eigen::MatrixXd reduced(v - 1, v - 1);
    for (int r = 0; r < v - 1; ++r)
        for (int c = 0; c < v - 1; ++c) reduced(r, c) = lap(keep[r], keep[c]);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced);
    if (!lu.isInvertible())
        throw SingularReducedLaplacian(
            "reduced bus susceptance matrix is singular (case " + net.case_id + ")");

    Eigen::MatrixXd bf_red(m, v - 1);
    for (int c = 0; c < v - 1; ++c) bf_red.col(c) = bf.col(keep[c]);

    // M_red = Bf_red * reduced^-1; reduced is symmetric, solve on the transpose
    Eigen::MatrixXd m_red_t = lu.solve(bf_red.transpose());

    Eigen::MatrixXd ptdf = Eigen::MatrixXd::Zero(m, v);
    for (int c = 0; c < v - 1; ++c) ptdf.col(keep[c]) = m_red_t.row(c).transpose();

    for (int r = 0; r < m; ++r)
        for (int c = 0; c < v; ++c)
            if (std::abs(ptdf(r, c)) < 1e-12) ptdf(r, c) = 0.0;
    return ptdf;
}

OpfProblem assemble_problem(const PowerNetwork& net) {
    const int n = net.n;
    const int m = net.m;
    const int v = net.v;
    const double inf = std::numeric_limits<double>::infinity();

    Eigen::MatrixXd M = build_ptdf(net);
    Eigen::MatrixXd MH = M * net.H;
    Eigen::VectorXd flow_base = M * (net.mu - net.d); // M (mu - d)

    OpfProblem prob;
    prob.case_id = net.case_id;
    prob.n = n;
    prob.v = v;
    prob.cost = net.cost;
    prob.nominal_rows = 2 * (n + m);
    prob.balance_rhs_base = (net.d - net.mu).sum();

    // count kept rows: generator rows are always kept (finite bounds are a
    // model requirement), flow rows drop when the limit is infinite
    int kept = 2 * n;
    for (int l = 0; l < m; ++l) {
        if (net.fmax(l) < inf) ++kept;
        if (net.fmin(l) > -inf) ++kept;
    }

    prob.A = Eigen::MatrixXd::Zero(kept, n);
    prob.b = Eigen::VectorXd::Zero(kept);
    prob.C = Eigen::MatrixXd::Zero(kept, v);
    prob.row_labels.reserve(kept);

    int r = 0;
    for (int i = 0; i < n; ++i) { // p <= pmax
        if (!std::isfinite(net.pmax(i)))
            throw CaseValidationError("generator " + std::to_string(i) +
                                      " has non-finite pmax");
        prob.A(r, i) = 1.0;
        prob.b(r) = net.pmax(i);
        prob.row_labels.push_back({RowKind::GenUB, i});
        ++r;
    }
    for (int i = 0; i < n; ++i) { // -p <= -pmin
        if (!std::isfinite(net.pmin(i)))
            throw CaseValidationError("generator " + std::to_string(i) +
                                      " has non-finite pmin");
        prob.A(r, i) = -1.0;
        prob.b(r) = -net.pmin(i);
        prob.row_labels.push_back({RowKind::GenLB, i});
        ++r;
    }
    for (int l = 0; l < m; ++l) { // MH p <= fmax - M(mu - d),  C = -M
        if (!(net.fmax(l) < inf)) continue;
        prob.A.row(r) = MH.row(l);
        prob.b(r) = net.fmax(l) - flow_base(l);
        prob.C.row(r) = -M.row(l);
        prob.row_labels.push_back({RowKind::FlowUB, l});
        ++r;
    }
    for (int l = 0; l < m; ++l) { // -MH p <= -fmin + M(mu - d),  C = +M
        if (!(net.fmin(l) > -inf)) continue;
        prob.A.row(r) = -MH.row(l);
        prob.b(r) = -net.fmin(l) + flow_base(l);
        prob.C.row(r) = M.row(l);
        prob.row_labels.push_back({RowKind::FlowLB, l});
        ++r;
    }
    return prob;
}

} // namespace opfens
