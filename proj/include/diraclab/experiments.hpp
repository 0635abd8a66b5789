#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diraclab/io.hpp"
#include "diraclab/potential.hpp"
#include "diraclab/random_ensemble.hpp"
#include "diraclab/test_functions.hpp"

namespace diraclab {

/// One probe phi. Grammar (whitespace-separated key=value pairs):
///   kind=site|gaussian  spin=<orientation>  amp=<a>  at=<x,y,z>  width=<w>  cutoff=<c>  name=<label>
/// Several probes are joined with ';'.
struct ProbeSpec {
    std::string name;
    std::string kind = "gaussian";
    std::string spin = "up";
    double amplitude = 1.0;
    Vec3 center = Vec3::Zero();
    double width = 1.0;
    double cutoff = 6.0;
};

std::vector<ProbeSpec> parse_probes(const std::string& text);
std::string format_probes(const std::vector<ProbeSpec>& probes);
TestFunction make_probe(const PeriodicGrid& grid, const ProbeSpec& spec);

/// Everything an experiment reads. Loaded from a flat `key = value` file;
/// unknown keys are rejected. Defaults are listed in config_schema().
struct ExperimentConfig {
    // lattice and dynamics
    int n = 16;
    double L = 16.0;
    double mass = 1.0;
    double dt = 0.05;

    // initial measure
    std::string sampler = "gaussian";  ///< gaussian | moving-average
    std::string spectrum = "anisotropic";  ///< identity | anisotropic (Gaussian sampler only)
    double spectrum_strength = 0.8;
    std::uint64_t spectrum_seed = 5;
    std::string kernel = "gaussian";
    double kernel_width = 0.5;
    double radius = 2.0;
    std::string noise = "rademacher";
    std::size_t samples = 1000;
    std::uint64_t seed = 1;

    // potential
    std::string potential = "zero";
    double amplitude = 0.0;
    double potential_width = 2.0;
    double power = 3.0;
    double rho = 6.0;
    double delta = 0.5;

    // time grid t_start, t_start + t_step, ..., t_max
    double t_start = 0.0;
    double t_max = 4.0;
    double t_step = 1.0;

    std::vector<ProbeSpec> probes;
    std::vector<std::array<int, 3>> modes{{1, 0, 0}, {2, 1, 0}, {3, 2, 1}, {0, 4, 2}, {5, 5, 5}};

    // covariance analytics
    std::vector<double> fixed_point_times{0.7, 3.1, 9.4};
    std::vector<double> average_times{5.0, 10.0, 20.0, 40.0};
    double envelope_step = 0.01;

    // algebra suite
    int algebra_points = 100;

    // decay and scattering
    double sigma = 3.0;
    /// Cook cutoff; 0 means t_max.
    double wave_t_max = 0.0;
    double dtau = 0.05;
    double fit_t0 = 2.0;
    double fit_t1 = 6.0;
    std::size_t direct_samples = 8;

    // spectral solver
    double gap_margin = 1e-3;
    int spectral_subspace = 32;
    int spectral_degree = 40;
    int spectral_max_grid = 16;
    double spectral_tol = 1e-10;

    // tolerances
    double algebra_tol = 1e-12;
    double fixed_point_tol = 1e-10;
    double average_slope = -1.0;
    double average_slope_tol = 0.2;
    double se_factor = 3.0;
    double entry_fraction = 0.9;
    double char_tol = 0.02;
    double kurtosis_ratio = 5.0;
    int kurtosis_probe = 0;
    double decay_slope_min = -1.8;
    double decay_slope_max = -1.2;
    double integrand_slope_max = -1.2;
    double remainder_slope_max = -0.35;
    double quadrature_tol = 1e-6;
    double collapse_tol = 1e-8;
    double dual_tol = 1e-10;
    double residual_tol = 1e-8;
    double resolvent_tol = 1e-6;
    double uniform_cap = 2.0;
    double uniform_transient = 2.0;

    // output
    std::string out;
    std::string field_encoding = "binary";
    std::size_t dump_samples = 1;

    PeriodicGrid grid() const { return PeriodicGrid(n, L); }
    std::vector<double> times() const;
    double cook_t_max() const { return wave_t_max > 0.0 ? wave_t_max : t_max; }
    PotentialProfile profile() const;
    SpectralOptions spectral_options() const;
    FieldEncoding encoding() const;

    /// Throws ConfigError naming the offending key unless the configuration is
    /// self-consistent: R < L/4, t_max < L/2, wave_t_max < L/2, sigma > 5/2,
    /// rho > 5, 5 + delta < rho, and every value in range.
    void validate() const;
    nlohmann::json to_json() const;
};

struct ConfigKey {
    std::string name;
    std::string help;
};

/// Every accepted key with a one-line description.
const std::vector<ConfigKey>& config_schema();

/// Parses `key = value` lines (whole-line '#' or ';' comments). Throws ConfigError on
/// unknown keys, duplicate keys, sections or malformed values; validates.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<stream>");
ExperimentConfig load_config(const std::string& path);
/// Applies one `key = value` assignment without validating.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

std::shared_ptr<const Sampler> make_sampler(const ExperimentConfig& cfg);

/// A pass/fail statement tied to one acceptance criterion.
struct Check {
    int criterion = 0;
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string requirement;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
};

struct FieldArtifact {
    std::string name;
    RealSpinorField field;
};

struct ExperimentReport {
    std::string experiment;
    nlohmann::json config;
    nlohmann::json results = nlohmann::json::object();
    /// deque so references returned by table() survive later tables.
    std::deque<Table> tables;
    std::vector<Check> checks;
    std::vector<FieldArtifact> fields;
    double wall_time = 0.0;

    bool passed() const;
    Check& check(int criterion, std::string name, bool passed, double value, std::string requirement);
    Table& table(std::string name, std::vector<std::string> columns);
    /// Everything except the wall time, so two runs can be compared bit for bit.
    nlohmann::json reproducible_json() const;
    nlohmann::json to_json() const;
    /// report.json, <table>.csv per table, <field>.field per dump.
    void write(const std::string& dir, FieldEncoding encoding) const;
};

void write_table_csv(std::ostream& out, const Table& t);

/// Library, dependency and RNG versions recorded in every report.
nlohmann::json version_info();

/// Bound-state decomposition for the configured potential.
SpectralDecomposition decompose(const ExperimentConfig& cfg);

// Drivers. Each one is a thin layer over the library and returns its tables
// and checks; nothing is written until ExperimentReport::write.
ExperimentReport cmd_check_algebra(const ExperimentConfig& cfg);
ExperimentReport cmd_covariance(const ExperimentConfig& cfg);
ExperimentReport cmd_sample(const ExperimentConfig& cfg);
ExperimentReport cmd_free_equilibrium(const ExperimentConfig& cfg);
ExperimentReport cmd_decay(const ExperimentConfig& cfg, const SpectralDecomposition* decomp = nullptr);
ExperimentReport cmd_waveop(const ExperimentConfig& cfg, const SpectralDecomposition* decomp = nullptr);
ExperimentReport cmd_perturbed_equilibrium(const ExperimentConfig& cfg, const SpectralDecomposition* decomp = nullptr);
ExperimentReport cmd_spectrum(const ExperimentConfig& cfg);

/// Runs a driver by subcommand name.
ExperimentReport run_experiment(const std::string& command, const ExperimentConfig& cfg);
const std::vector<std::string>& experiment_names();

}  // namespace diraclab
