// opfens command-line front end: parse -> learn -> certify -> evaluate -> report.
//
// Exit codes: 0 success, 1 error, 2 coverage test inconclusive.
// Same config + seed produce byte-identical artifacts: nothing written here
// depends on wall-clock time, hostnames, or iteration order of hash maps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "opfens/evaluation.hpp"
#include "opfens/io.hpp"
#include "opfens/learning.hpp"
#include "opfens/matpower.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace opfens;

namespace {

struct Options {
    std::string case_path;
    std::string ensemble_path;
    double sigma = 0.03;
    std::int64_t samples = 5000; // total M + W
    double epsilon = 0.02;
    double delta = 0.1;
    std::vector<int> k_list = {1, 5, 10, 20, 50, 100};
    std::int64_t n_test = 5000;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir = ".";
    std::string format = "text";
    std::vector<std::string> report_paths;
    std::string out_file; // report subcommand only
};

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    return ReportFormat::Text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to '" + path.string() + "'");
}

std::string hex64_string(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// Effective-configuration record embedded in every run's metadata. Only
/// experiment-defining parameters belong here: presentation and location
/// details (--out, --format, --threads) never change the artifacts, and
/// keeping them out preserves byte-identity across reruns of one experiment.
json config_json(const Options& opt, const char* subcommand) {
    json j;
    j["subcommand"] = subcommand;
    j["case"] = fs::path(opt.case_path).filename().string();
    j["sigma"] = opt.sigma;
    j["samples"] = opt.samples;
    j["epsilon"] = opt.epsilon;
    j["delta"] = opt.delta;
    j["k"] = opt.k_list;
    j["n_test"] = opt.n_test;
    j["seed"] = hex64_string(opt.seed);
    return j;
}

void write_run_metadata(const Options& opt, const char* subcommand,
                        const fs::path& dir, const json& extra) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "run_metadata";
    j["tool_version"] = kVersion;
    j["config"] = config_json(opt, subcommand);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_file(dir / "run.json", j.dump(2) + "\n");
}

void normalize_k_list(std::vector<int>& k_list) {
    std::sort(k_list.begin(), k_list.end());
    k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
    if (k_list.empty() || k_list.front() < 1)
        throw DomainError("--k values must be positive integers");
}

int k_list_back_or_one(const std::vector<int>& k_list) {
    return k_list.empty() ? 1 : k_list.back();
}

int cmd_learn(Options opt) {
    normalize_k_list(opt.k_list);
    const int W = window_size(opt.epsilon, opt.delta);
    const std::int64_t M = opt.samples - W;
    if (M < 1)
        throw DomainError("--samples " + std::to_string(opt.samples) +
                          " leaves no training data: the coverage window alone "
                          "needs " + std::to_string(W) + " samples");

    PowerNetwork net = to_network(parse_matpower_file(opt.case_path));
    OpfProblem prob = assemble_problem(net);
    UncertaintyModel model = UncertaintyModel::from_scaling(net, opt.sigma, opt.seed);

    DiscoveryTrace trace = run_learning(prob, model, M, W, opt.threads);
    CoverageVerdict verdict = coverage_test(trace, opt.epsilon, opt.delta);

    const int k_max = k_list_back_or_one(opt.k_list);
    EnsemblePolicy ens = top_k_ensemble(trace, prob, k_max);
    if (static_cast<size_t>(k_max) > ens.members.size())
        std::cerr << "warning: requested up to K=" << k_max << " but training observed "
                  << ens.members.size()
                  << (ens.members.size() == 1 ? " basis" : " bases")
                  << "; the ensemble is truncated to the catalog\n";

    fs::create_directories(opt.out_dir);
    fs::path dir(opt.out_dir);
    write_file(dir / "ensemble.json", ensemble_to_json(ens, prob, opt.sigma, opt.seed));
    write_file(dir / "trace.csv", trace_to_csv(trace));
    write_file(dir / "catalog.csv", catalog_to_csv(trace, prob));
    write_file(dir / "verdict.json", verdict_to_json(verdict));

    json extra;
    extra["case_id"] = prob.case_id;
    extra["problem_digest"] = hex64_string(prob.digest());
    extra["M"] = M;
    extra["W"] = W;
    extra["catalog_size"] = trace.catalog.size();
    extra["infeasible_training"] = trace.infeasible_training;
    extra["infeasible_total"] = trace.infeasible_total;
    write_run_metadata(opt, "learn", dir, extra);

    const bool success = verdict.outcome == CoverageVerdict::Outcome::Success;
    if (parse_format(opt.format) == ReportFormat::Json) {
        std::cout << verdict_to_json(verdict);
    } else {
        std::cout << "case " << prob.case_id << ": " << net.v << " buses, " << net.m
                  << " branches, " << net.n << " generators -> "
                  << prob.nominal_constraint_count() << " constraints\n"
                  << "samples: " << M << " training + " << W << " window\n"
                  << "catalog: " << trace.catalog.size() << " unique bases"
                  << "  (infeasible scenarios: " << trace.infeasible_total << ")\n"
                  << "rate of discovery R_W = " << verdict.R_W << "\n"
                  << "coverage test (epsilon=" << opt.epsilon << ", delta=" << opt.delta
                  << "): " << (success ? "SUCCESS" : "INCONCLUSIVE") << "\n"
                  << "ensemble: " << ens.members.size()
                  << (ens.members.size() == 1 ? " member" : " members")
                  << " (requested up to K=" << k_max << ")\n"
                  << "artifacts written to " << dir.string() << "\n";
    }
    return success ? 0 : 2;
}

int cmd_evaluate(Options opt, bool sigma_given, bool seed_given) {
    normalize_k_list(opt.k_list);

    PowerNetwork net = to_network(parse_matpower_file(opt.case_path));
    OpfProblem prob = assemble_problem(net);

    std::string text = read_file(opt.ensemble_path);
    double artifact_sigma = sigma_scaling_from_ensemble_json(text);
    if (sigma_given && artifact_sigma != opt.sigma)
        throw EnsembleCaseMismatch(
            "ensemble was learned at sigma scaling " + std::to_string(artifact_sigma) +
            ", not " + std::to_string(opt.sigma) +
            "; omit --sigma to evaluate at the training value");
    opt.sigma = artifact_sigma;

    EnsemblePolicy ens = ensemble_from_json(text, prob);
    if (!seed_given) {
        json j = json::parse(text);
        opt.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
    }

    const int k_max = k_list_back_or_one(opt.k_list);
    if (static_cast<size_t>(k_max) > ens.members.size())
        std::cerr << "warning: K=" << k_max << " exceeds the " << ens.members.size()
                  << "-member catalog; those sizes are evaluated at the full catalog\n";

    UncertaintyModel model = UncertaintyModel::from_scaling(net, opt.sigma, opt.seed);
    EvaluationReport report =
        evaluate_ensemble(ens, opt.k_list, prob, model, opt.n_test, opt.threads);

    fs::create_directories(opt.out_dir);
    fs::path dir(opt.out_dir);
    write_file(dir / "report.json", report_to_json(report));
    ReportFormat format = parse_format(opt.format);
    if (format == ReportFormat::Csv)
        write_file(dir / "report.csv", render_tables(report, format));
    else if (format == ReportFormat::Text)
        write_file(dir / "report.txt", render_tables(report, format));

    json extra;
    extra["case_id"] = prob.case_id;
    extra["problem_digest"] = hex64_string(prob.digest());
    extra["ensemble_members"] = ens.members.size();
    write_run_metadata(opt, "evaluate", dir, extra);

    std::cout << render_tables(report, format);
    return 0;
}

/// Merge >= 1 evaluation reports into one table document.
std::string merge_reports(const std::vector<EvaluationReport>& reports,
                          ReportFormat format) {
    if (format == ReportFormat::Json) {
        json merged;
        merged["schema_version"] = kSchemaVersion;
        merged["kind"] = "merged_report";
        json arr = json::array();
        for (const EvaluationReport& r : reports) arr.push_back(json::parse(report_to_json(r)));
        merged["reports"] = std::move(arr);
        return merged.dump(2) + "\n";
    }

    if (format == ReportFormat::Csv) {
        std::ostringstream out;
        out << "case_id,sigma_scaling,n_test,infeasible_lp,K,prop_optimal,prop_feasible\n";
        out.precision(17);
        for (const EvaluationReport& r : reports)
            for (const PerKRecord& rec : r.per_k)
                out << r.case_id << ',' << r.sigma_scaling << ',' << r.n_test << ','
                    << r.infeasible_lp_count << ',' << rec.K << ','
                    << rec.prop_optimal << ',' << rec.prop_feasible << '\n';
        return out.str();
    }

    // text: one row per case, one optimal/feasible column per K (union)
    std::vector<int> ks;
    for (const EvaluationReport& r : reports)
        for (const PerKRecord& rec : r.per_k) ks.push_back(rec.K);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    size_t name_width = 4;
    for (const EvaluationReport& r : reports)
        name_width = std::max(name_width, r.case_id.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width)) << "case" << std::right
        << "  " << std::setw(6) << "n_test" << "  " << std::setw(6) << "infeas";
    for (int k : ks) {
        std::string head = "K=" + std::to_string(k) + " opt/feas";
        out << "  " << std::setw(13) << head;
    }
    out << '\n';
    for (const EvaluationReport& r : reports) {
        out << std::left << std::setw(static_cast<int>(name_width)) << r.case_id
            << std::right << "  " << std::setw(6) << r.n_test << "  " << std::setw(6)
            << r.infeasible_lp_count;
        std::map<int, const PerKRecord*> by_k;
        for (const PerKRecord& rec : r.per_k) by_k[rec.K] = &rec;
        for (int k : ks) {
            auto it = by_k.find(k);
            if (it == by_k.end()) {
                out << "  " << std::setw(13) << "-";
                continue;
            }
            std::ostringstream cell;
            cell.setf(std::ios::fixed);
            cell.precision(3);
            cell << it->second->prop_optimal << '/' << it->second->prop_feasible;
            out << "  " << std::setw(13) << cell.str();
        }
        out << '\n';
    }
    return out.str();
}

int cmd_report(const Options& opt) {
    if (opt.report_paths.empty())
        throw DomainError("report needs at least one report.json path");
    std::vector<EvaluationReport> reports;
    reports.reserve(opt.report_paths.size());
    for (const std::string& path : opt.report_paths)
        reports.push_back(report_from_json(read_file(path)));

    std::string rendered = merge_reports(reports, parse_format(opt.format));
    if (!opt.out_file.empty()) {
        if (fs::path(opt.out_file).has_parent_path())
            fs::create_directories(fs::path(opt.out_file).parent_path());
        write_file(opt.out_file, rendered);
    }
    std::cout << rendered;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    const char* env_out = std::getenv("OPFENS_OUT_DIR");
    if (env_out != nullptr && *env_out != '\0') opt.out_dir = env_out;

    CLI::App app{"opfens: statistical learning of optimal-basis policies for DC-OPF"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file (flags win)");
    app.set_version_flag("--version", std::string("opfens ") + kVersion);

    CLI::App* learn = app.add_subcommand(
        "learn", "sample scenarios, learn the basis catalog, run the coverage test");
    learn->add_option("--case", opt.case_path, "MATPOWER case file")
        ->required()
        ->check(CLI::ExistingFile);
    learn->add_option("--sigma", opt.sigma, "demand-proportional sigma scaling")
        ->capture_default_str();
    learn->add_option("--samples", opt.samples,
                      "total training samples M + W (W is derived from epsilon/delta)")
        ->capture_default_str();
    learn->add_option("--epsilon", opt.epsilon, "coverage tolerance")->capture_default_str();
    learn->add_option("--delta", opt.delta, "coverage confidence")->capture_default_str();
    learn->add_option("--k", opt.k_list, "ensemble sizes to prepare")->capture_default_str();
    learn->add_option("--n-test", opt.n_test, "(recorded for evaluate)")->capture_default_str();
    learn->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
    learn->add_option("--threads", opt.threads, "OpenMP threads, 0 = all")
        ->capture_default_str();
    learn->add_option("--out", opt.out_dir, "output directory (env OPFENS_OUT_DIR)")
        ->capture_default_str();
    learn->add_option("--format", opt.format, "stdout format")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "out-of-sample assessment of a learned ensemble");
    evaluate->add_option("--case", opt.case_path, "MATPOWER case file")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--ensemble", opt.ensemble_path, "ensemble.json from learn")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* sigma_opt =
        evaluate->add_option("--sigma", opt.sigma,
                             "must match the training sigma; default: from the artifact");
    evaluate->add_option("--k", opt.k_list, "ensemble sizes to evaluate")
        ->capture_default_str();
    evaluate->add_option("--n-test", opt.n_test, "test scenarios")->capture_default_str();
    CLI::Option* seed_opt =
        evaluate->add_option("--seed", opt.seed, "RNG seed; default: from the artifact");
    evaluate->add_option("--threads", opt.threads, "OpenMP threads, 0 = all")
        ->capture_default_str();
    evaluate->add_option("--out", opt.out_dir, "output directory (env OPFENS_OUT_DIR)")
        ->capture_default_str();
    evaluate->add_option("--format", opt.format, "report rendering")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();

    CLI::App* report = app.add_subcommand(
        "report", "merge evaluation reports into one multi-case table");
    report->add_option("paths", opt.report_paths, "report.json files")
        ->required()
        ->check(CLI::ExistingFile);
    report->add_option("--format", opt.format, "table rendering")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();
    report->add_option("--out", opt.out_file, "also write the merged table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (learn->parsed()) return cmd_learn(opt);
        if (evaluate->parsed())
            return cmd_evaluate(opt, sigma_opt->count() > 0, seed_opt->count() > 0);
        return cmd_report(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
