// Acceptance suite: runs every experiment from configs/ and prints one
// PASS/FAIL line per criterion. Criterion 10 reruns each experiment with the
// same config and seed and compares the reports byte for byte.
//
//   acceptance [--out DIR] [--configs DIR] [criterion ...]

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "diraclab/errors.hpp"
#include "diraclab/experiments.hpp"

using namespace diraclab;

namespace {

struct Outcome {
    bool ran = false;
    bool passed = true;
    std::vector<std::string> notes;
};

struct Suite {
    std::string config_dir;
    std::string out_dir;
    std::set<int> wanted;
    std::map<int, Outcome> outcomes;
    /// experiment name -> reproducible JSON of the first run
    std::map<std::string, std::string> first_runs;

    bool want(int c) const { return wanted.empty() || wanted.count(c); }

    ExperimentConfig config(const std::string& file) const
    {
        return load_config((std::filesystem::path(config_dir) / file).string());
    }

    void record(const ExperimentReport& rep)
    {
        std::printf("  %s finished in %.1f s\n", rep.experiment.c_str(), rep.wall_time);
        for (const auto& c : rep.checks) {
            std::printf("    [%d] %s  %s: %.6g (%s)\n", c.criterion, c.passed ? "ok  " : "FAIL", c.name.c_str(), c.value,
                        c.requirement.c_str());
            auto& o = outcomes[c.criterion];
            o.ran = true;
            o.passed = o.passed && c.passed;
            if (!c.passed) o.notes.push_back(c.name);
        }
        first_runs[rep.experiment] = rep.reproducible_json().dump();
        if (!out_dir.empty()) {
            const auto dir = std::filesystem::path(out_dir) / rep.experiment;
            rep.write(dir.string(), FieldEncoding::binary);
        }
        std::fflush(stdout);
    }

    void error(int criterion, const std::string& what)
    {
        std::printf("    [%d] ERROR  %s\n", criterion, what.c_str());
        auto& o = outcomes[criterion];
        o.ran = true;
        o.passed = false;
        o.notes.push_back(what);
        std::fflush(stdout);
    }
};

// Each experiment with the criteria it feeds.
struct Job {
    std::string file;
    std::vector<int> criteria;
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance suite: criteria 1-10"};
    Suite suite;
    suite.config_dir = DIRACLAB_CONFIG_DIR;
    std::vector<int> selected;
    app.add_option("--configs", suite.config_dir, "Directory holding the experiment configs");
    app.add_option("--out", suite.out_dir, "Write every report under this directory");
    app.add_option("criteria", selected, "Run only these criteria (default: all)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    suite.wanted.insert(selected.begin(), selected.end());

    const std::vector<Job> jobs{{"algebra.ini", {1}},
                                {"covariance.ini", {2, 3}},
                                {"sample.ini", {4}},
                                {"free_equilibrium.ini", {5}},
                                {"decay.ini", {6}},
                                {"waveop.ini", {7}},
                                {"perturbed_equilibrium.ini", {8}},
                                {"spectrum.ini", {9}}};
    const std::map<std::string, std::string> command{{"algebra.ini", "check-algebra"},
                                                     {"covariance.ini", "covariance"},
                                                     {"sample.ini", "sample"},
                                                     {"free_equilibrium.ini", "free-equilibrium"},
                                                     {"decay.ini", "decay"},
                                                     {"waveop.ini", "waveop"},
                                                     {"perturbed_equilibrium.ini", "perturbed-equilibrium"},
                                                     {"spectrum.ini", "spectrum"}};

    auto wanted_job = [&](const Job& j) {
        if (suite.want(10)) return true;
        for (int c : j.criteria)
            if (suite.want(c)) return true;
        return false;
    };

    // Criteria 7 and 8 share the default potential on 32^3; its bound-state
    // decomposition is computed once per pass and reused by both runs.
    std::optional<SpectralDecomposition> shared;
    std::string shared_key;
    auto decomposition_for = [&](const ExperimentConfig& cfg) -> const SpectralDecomposition* {
        if (cfg.potential == "zero" || cfg.amplitude == 0.0) return nullptr;
        const auto j = cfg.to_json();
        std::string key;
        for (const char* k : {"n", "L", "mass", "potential", "amplitude", "potential_width", "power", "rho",
                              "gap_margin", "spectral_subspace", "spectral_degree", "spectral_max_grid", "spectral_tol"})
            key += j.at(k).dump() + " ";
        if (shared && key != shared_key) return nullptr;  // different problem: the driver computes its own
        if (!shared) {
            shared_key = key;
            std::printf("  computing bound-state decomposition on %d^3\n", cfg.n);
            std::fflush(stdout);
            shared = decompose(cfg);
            std::printf("  decomposition: %zu gap eigenvalues, %d iterations\n", shared->bound_states.size(),
                        shared->iterations);
        }
        return &*shared;
    };

    auto run = [&](const std::string& file, const ExperimentConfig& cfg) {
        const std::string& cmd = command.at(file);
        if (cmd == "waveop") return cmd_waveop(cfg, decomposition_for(cfg));
        if (cmd == "perturbed-equilibrium") return cmd_perturbed_equilibrium(cfg, decomposition_for(cfg));
        return run_experiment(cmd, cfg);
    };

    std::vector<std::pair<std::string, ExperimentConfig>> done;
    for (const auto& job : jobs) {
        if (!wanted_job(job)) continue;
        std::printf("%s\n", job.file.c_str());
        std::fflush(stdout);
        try {
            const auto cfg = suite.config(job.file);
            suite.record(run(job.file, cfg));
            done.emplace_back(job.file, cfg);
        } catch (const Error& e) {
            for (int c : job.criteria) suite.error(c, e.what());
        }
    }

    if (suite.want(10)) {
        std::printf("determinism reruns\n");
        auto& o = suite.outcomes[10];
        o.ran = true;
        // Recompute the decomposition too, so its reported eigenvalues are rerun as well.
        shared.reset();
        shared_key.clear();
        if (done.empty()) {
            o.passed = false;
            o.notes.push_back("nothing to rerun");
        }
        for (const auto& [file, cfg] : done) {
            try {
                const auto again = run(file, cfg);
                const std::string& first = suite.first_runs.at(again.experiment);
                const bool same = again.reproducible_json().dump() == first;
                std::printf("    [10] %s  %s rerun reproduces %zu bytes of report (%.1f s)\n", same ? "ok  " : "FAIL",
                            again.experiment.c_str(), first.size(), again.wall_time);
                if (!same) {
                    o.passed = false;
                    o.notes.push_back(again.experiment + " differs");
                }
            } catch (const Error& e) {
                o.passed = false;
                o.notes.push_back(file + ": " + e.what());
            }
            std::fflush(stdout);
        }
    }

    std::printf("\n");
    bool all = true;
    for (int c = 1; c <= 10; ++c) {
        if (!suite.want(c)) continue;
        const auto it = suite.outcomes.find(c);
        const bool ok = it != suite.outcomes.end() && it->second.ran && it->second.passed;
        all = all && ok;
        std::string why;
        if (it == suite.outcomes.end() || !it->second.ran) why = " (not run)";
        else if (!ok) {
            why = " (";
            for (std::size_t i = 0; i < it->second.notes.size(); ++i) why += (i ? "; " : "") + it->second.notes[i];
            why += ")";
        }
        std::printf("criterion %2d: %s%s\n", c, ok ? "PASS" : "FAIL", why.c_str());
    }
    return all ? 0 : 1;
}
