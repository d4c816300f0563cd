#include "opfens/io.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace opfens {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t x) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << x;
    return out.str();
}

std::uint64_t parse_hex64(const std::string& text) {
    return std::stoull(text, nullptr, 16);
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        arr.push_back(std::move(row));
    }
    return arr;
}

Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index cols_hint = -1) {
    Eigen::Index rows = static_cast<Eigen::Index>(arr.size());
    Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(arr[0].size()) : cols_hint;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = arr[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
    return m;
}

// +-inf encodes as null (JSON has no infinity); sign recovered by bound kind
json limit_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::isfinite(v(i)))
            arr.push_back(v(i));
        else
            arr.push_back(nullptr);
    }
    return arr;
}

Eigen::VectorXd limit_from_json(const json& arr, double inf_value) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) =
            arr[i].is_null() ? inf_value : arr[i].get<double>();
    return v;
}

void require_schema(const json& j, const std::string& what) {
    if (!j.contains("schema_version"))
        throw SchemaMismatch(what + ": missing schema_version");
    int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
        throw SchemaMismatch(what + ": schema_version " + std::to_string(version) +
                             ", this build reads " + std::to_string(kSchemaVersion));
}

} // namespace

std::string ensemble_to_json(const EnsemblePolicy& ens, const OpfProblem& prob,
                             double sigma_scaling, std::uint64_t seed) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["tool_version"] = kVersion;
    j["kind"] = "ensemble";
    j["case_id"] = prob.case_id;
    j["problem_digest"] = hex64(prob.digest());
    j["sigma_scaling"] = sigma_scaling;
    j["seed"] = hex64(seed);
    j["n"] = prob.n;
    j["v"] = prob.v;
    j["feas_tol"] = ens.feas_tol;
    json members = json::array();
    for (const EnsembleMember& member : ens.members) {
        json m;
        m["probability"] = member.probability;
        json rows = json::array();
        for (int r : member.policy.basis.rows)
            rows.push_back(to_string(prob.row_labels.at(static_cast<size_t>(r))));
        m["basis_rows"] = std::move(rows);
        m["gain"] = matrix_to_json(member.policy.gain);
        m["offset"] = vector_to_json(member.policy.offset);
        members.push_back(std::move(m));
    }
    j["members"] = std::move(members);
    return j.dump(2) + "\n";
}

EnsemblePolicy ensemble_from_json(const std::string& text, const OpfProblem& prob) {
    json j = json::parse(text);
    require_schema(j, "ensemble");
    if (j.at("kind").get<std::string>() != "ensemble")
        throw SchemaMismatch("artifact kind is not 'ensemble'");
    if (j.at("case_id").get<std::string>() != prob.case_id)
        throw EnsembleCaseMismatch("ensemble was learned on case '" +
                                   j.at("case_id").get<std::string>() +
                                   "', not '" + prob.case_id + "'");
    if (parse_hex64(j.at("problem_digest").get<std::string>()) != prob.digest())
        throw EnsembleCaseMismatch("problem data changed since the ensemble was "
                                   "learned (digest mismatch)");

    // label -> kept-row index
    std::map<std::string, int> kept;
    for (int r = 0; r < prob.rows(); ++r)
        kept[to_string(prob.row_labels[static_cast<size_t>(r)])] = r;

    EnsemblePolicy ens;
    ens.feas_tol = j.value("feas_tol", 1e-7);
    for (const json& m : j.at("members")) {
        std::vector<int> rows;
        for (const json& label : m.at("basis_rows")) {
            auto it = kept.find(label.get<std::string>());
            if (it == kept.end())
                throw EnsembleCaseMismatch("basis row " + label.get<std::string>() +
                                           " does not exist in this problem");
            rows.push_back(it->second);
        }
        EnsembleMember member;
        member.probability = m.at("probability").get<double>();
        member.policy.basis = make_basis(prob, rows);
        member.policy.gain = matrix_from_json(m.at("gain"), prob.v);
        member.policy.offset = vector_from_json(m.at("offset"));
        ens.members.push_back(std::move(member));
    }
    return ens;
}

double sigma_scaling_from_ensemble_json(const std::string& text) {
    json j = json::parse(text);
    require_schema(j, "ensemble");
    return j.at("sigma_scaling").get<double>();
}

std::string trace_to_csv(const DiscoveryTrace& trace) {
    std::ostringstream out;
    out << "sample_index,basis_id,is_new\n";
    for (const TraceRecord& rec : trace.records) {
        out << rec.sample_index << ',';
        if (rec.basis_id == kInfeasibleId)
            out << "INFEASIBLE";
        else
            out << rec.basis_id;
        out << ',' << (rec.is_new ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string catalog_to_csv(const DiscoveryTrace& trace, const OpfProblem& prob) {
    std::ostringstream out;
    out.precision(17);
    out << "basis_id,count,pi_hat,rows\n";
    for (const CatalogEntry& entry : trace.catalog) {
        out << entry.id << ',' << entry.count_training << ',' << trace.pi_hat(entry.id)
            << ',';
        for (size_t k = 0; k < entry.rows.size(); ++k) {
            if (k) out << '|';
            out << to_string(prob.row_labels.at(static_cast<size_t>(entry.rows[k])));
        }
        out << '\n';
    }
    return out.str();
}

std::string verdict_to_json(const CoverageVerdict& verdict) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "coverage_verdict";
    j["epsilon"] = verdict.epsilon;
    j["delta"] = verdict.delta;
    j["window"] = verdict.W;
    j["rate_of_discovery"] = verdict.R_W;
    j["outcome"] = verdict.outcome == CoverageVerdict::Outcome::Success
                       ? "SUCCESS"
                       : "INCONCLUSIVE";
    return j.dump(2) + "\n";
}

std::string report_to_json(const EvaluationReport& report) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "evaluation_report";
    j["case_id"] = report.case_id;
    j["sigma_scaling"] = report.sigma_scaling;
    j["seed"] = hex64(report.seed);
    j["n_test"] = report.n_test;
    j["infeasible_lp_count"] = report.infeasible_lp_count;
    json per_k = json::array();
    for (const PerKRecord& rec : report.per_k) {
        per_k.push_back({{"K", rec.K},
                         {"prop_optimal", rec.prop_optimal},
                         {"prop_feasible", rec.prop_feasible}});
    }
    j["per_k"] = std::move(per_k);
    auto curve_json = [](const std::vector<CurvePoint>& curve) {
        json arr = json::array();
        for (const CurvePoint& pt : curve)
            arr.push_back({{"samples_seen", pt.samples_seen}, {"value", pt.value}});
        return arr;
    };
    j["coverage_curve"] = curve_json(report.coverage_curve);
    j["unique_bases_curve"] = curve_json(report.unique_bases_curve);
    return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    require_schema(j, "report");
    if (j.at("kind").get<std::string>() != "evaluation_report")
        throw SchemaMismatch("artifact kind is not 'evaluation_report'");
    EvaluationReport report;
    report.case_id = j.at("case_id").get<std::string>();
    report.sigma_scaling = j.at("sigma_scaling").get<double>();
    report.seed = parse_hex64(j.at("seed").get<std::string>());
    report.n_test = j.at("n_test").get<std::int64_t>();
    report.infeasible_lp_count = j.at("infeasible_lp_count").get<std::int64_t>();
    for (const json& rec : j.at("per_k")) {
        report.per_k.push_back({rec.at("K").get<int>(),
                                rec.at("prop_optimal").get<double>(),
                                rec.at("prop_feasible").get<double>()});
    }
    auto curve_from = [](const json& arr) {
        std::vector<CurvePoint> curve;
        for (const json& pt : arr)
            curve.push_back({pt.at("samples_seen").get<std::int64_t>(),
                             pt.at("value").get<double>()});
        return curve;
    };
    report.coverage_curve = curve_from(j.at("coverage_curve"));
    report.unique_bases_curve = curve_from(j.at("unique_bases_curve"));
    return report;
}

std::string network_to_json(const PowerNetwork& net) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "power_network";
    j["case_id"] = net.case_id;
    j["buses"] = net.v;
    j["branches"] = net.m;
    j["generators"] = net.n;
    j["ref_bus"] = net.ref_bus;
    j["demand"] = vector_to_json(net.d);
    j["forecast"] = vector_to_json(net.mu);
    j["pmin"] = vector_to_json(net.pmin);
    j["pmax"] = vector_to_json(net.pmax);
    j["fmin"] = limit_to_json(net.fmin);
    j["fmax"] = limit_to_json(net.fmax);
    j["cost"] = vector_to_json(net.cost);
    j["gen_bus"] = net.gen_bus;
    json branches = json::array();
    for (int l = 0; l < net.m; ++l) {
        int from = -1, to = -1;
        for (int c = 0; c < net.v; ++c) {
            if (net.incidence(l, c) > 0.5) from = c;
            if (net.incidence(l, c) < -0.5) to = c;
        }
        branches.push_back({{"from", from}, {"to", to},
                            {"susceptance", net.susceptance(l)}});
    }
    j["branch_list"] = std::move(branches);
    return j.dump(2) + "\n";
}

PowerNetwork network_from_json(const std::string& text) {
    json j = json::parse(text);
    require_schema(j, "network");
    if (j.at("kind").get<std::string>() != "power_network")
        throw SchemaMismatch("artifact kind is not 'power_network'");
    constexpr double inf = std::numeric_limits<double>::infinity();
    PowerNetwork net;
    net.case_id = j.at("case_id").get<std::string>();
    net.v = j.at("buses").get<int>();
    net.m = j.at("branches").get<int>();
    net.n = j.at("generators").get<int>();
    net.ref_bus = j.at("ref_bus").get<int>();
    net.d = vector_from_json(j.at("demand"));
    net.mu = vector_from_json(j.at("forecast"));
    net.pmin = vector_from_json(j.at("pmin"));
    net.pmax = vector_from_json(j.at("pmax"));
    net.fmin = limit_from_json(j.at("fmin"), -inf);
    net.fmax = limit_from_json(j.at("fmax"), inf);
    net.cost = vector_from_json(j.at("cost"));
    net.gen_bus = j.at("gen_bus").get<std::vector<int>>();
    net.H = Eigen::MatrixXd::Zero(net.v, net.n);
    for (int k = 0; k < net.n; ++k) net.H(net.gen_bus[static_cast<size_t>(k)], k) = 1.0;
    net.susceptance.resize(net.m);
    net.incidence = Eigen::MatrixXd::Zero(net.m, net.v);
    int l = 0;
    for (const json& br : j.at("branch_list")) {
        net.incidence(l, br.at("from").get<int>()) = 1.0;
        net.incidence(l, br.at("to").get<int>()) = -1.0;
        net.susceptance(l) = br.at("susceptance").get<double>();
        ++l;
    }
    return net;
}

} // namespace opfens
