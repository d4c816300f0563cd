// Benchmark: serial reference scenario kernel vs the OpenMP one, with a
// bitwise equality check between the two on every run.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "opfens/learning.hpp"
#include "opfens/matpower.hpp"

using namespace opfens;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool outcomes_equal(const std::vector<SampleOutcome>& a,
                    const std::vector<SampleOutcome>& b) {
    if (a.size() != b.size()) return false;
    for (size_t k = 0; k < a.size(); ++k) {
        if (a[k].index != b[k].index) return false;
        if (a[k].feasible != b[k].feasible) return false;
        if (a[k].basis_rows != b[k].basis_rows) return false;
        if (a[k].objective != b[k].objective) return false; // bitwise
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    std::string case_path;
    std::int64_t samples = 2000;
    double sigma = 0.03;
    std::uint64_t seed = 0;
    std::vector<int> thread_counts = {1, 2, 4, 8};

    CLI::App app{"opfens_bench: serial reference vs OpenMP scenario kernel"};
    app.add_option("--case", case_path, "MATPOWER case file")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--samples", samples, "scenarios per run")->capture_default_str();
    app.add_option("--sigma", sigma, "sigma scaling")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--threads", thread_counts, "thread counts to benchmark")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        PowerNetwork net = to_network(parse_matpower_file(case_path));
        OpfProblem prob = assemble_problem(net);
        UncertaintyModel model = UncertaintyModel::from_scaling(net, sigma, seed);

        std::printf("case %s: %d buses, %d generators, %d kept rows, %lld scenarios\n",
                    prob.case_id.c_str(), net.v, prob.n, prob.rows(),
                    static_cast<long long>(samples));

        auto t0 = std::chrono::steady_clock::now();
        std::vector<SampleOutcome> reference =
            solve_scenarios_serial(prob, model, StreamPurpose::Training, 0, samples);
        double serial_s = seconds_since(t0);
        std::printf("%8s  %10.3f s  %12.1f scen/s  %s\n", "serial", serial_s,
                    samples / serial_s, "reference");

        for (int threads : thread_counts) {
            t0 = std::chrono::steady_clock::now();
            std::vector<SampleOutcome> parallel = solve_scenarios_parallel(
                prob, model, StreamPurpose::Training, 0, samples, threads);
            double par_s = seconds_since(t0);
            bool same = outcomes_equal(reference, parallel);
            std::printf("%5d thr  %10.3f s  %12.1f scen/s  speedup %.2fx  %s\n", threads,
                        par_s, samples / par_s, serial_s / par_s,
                        same ? "bitwise-identical" : "MISMATCH");
            if (!same) return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
