#include "diraclab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <fftw3.h>

#include "diraclab/covariance.hpp"
#include "diraclab/free_dynamics.hpp"
#include "diraclab/norms.hpp"
#include "diraclab/rng.hpp"
#include "diraclab/scattering.hpp"
#include "diraclab/spinor_algebra.hpp"

#ifndef DIRACLAB_VERSION
#define DIRACLAB_VERSION "0.0.0"
#endif

namespace diraclab {

using nlohmann::json;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) throw ConfigError("config key '" + key + "': value must be finite");
    }
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_number<double>(key, item));
    return out;
}

std::string format_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + shortest(v[i]);
    return s;
}

std::vector<std::array<int, 3>> parse_modes(const std::string& key, const std::string& text)
{
    std::vector<std::array<int, 3>> out;
    for (const auto& item : split(text, ';')) {
        if (item.empty()) continue;
        const auto parts = split(item, ',');
        if (parts.size() != 3) throw ConfigError("config key '" + key + "': mode '" + item + "' needs three indices");
        out.push_back({parse_number<int>(key, parts[0]), parse_number<int>(key, parts[1]),
                       parse_number<int>(key, parts[2])});
    }
    return out;
}

std::string format_modes(const std::vector<std::array<int, 3>>& modes)
{
    std::string s;
    for (std::size_t i = 0; i < modes.size(); ++i)
        s += (i ? ";" : "") + std::to_string(modes[i][0]) + "," + std::to_string(modes[i][1]) + "," +
             std::to_string(modes[i][2]);
    return s;
}

struct KeyDef {
    std::string name;
    std::string help;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<json(const ExperimentConfig&)> get;
};

template <class T>
KeyDef scalar_key(std::string name, T ExperimentConfig::*member, std::string help)
{
    KeyDef k;
    k.name = name;
    k.help = std::move(help);
    k.set = [name, member](ExperimentConfig& c, const std::string& v) {
        if constexpr (std::is_same_v<T, std::string>) c.*member = trim(v);
        else c.*member = parse_number<T>(name, v);
    };
    k.get = [member](const ExperimentConfig& c) { return json(c.*member); };
    return k;
}

KeyDef list_key(std::string name, std::vector<double> ExperimentConfig::*member, std::string help)
{
    KeyDef k;
    k.name = name;
    k.help = std::move(help);
    k.set = [name, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_list(name, v); };
    k.get = [member](const ExperimentConfig& c) { return json(format_list(c.*member)); };
    return k;
}

const std::vector<KeyDef>& key_table()
{
    using C = ExperimentConfig;
    static const std::vector<KeyDef> table = [] {
        std::vector<KeyDef> t{
            scalar_key("n", &C::n, "grid points per axis"),
            scalar_key("L", &C::L, "box side length"),
            scalar_key("mass", &C::mass, "Dirac mass m > 0"),
            scalar_key("dt", &C::dt, "Strang time step"),
            scalar_key("sampler", &C::sampler, "initial measure: gaussian | moving-average"),
            scalar_key("spectrum", &C::spectrum, "Gaussian spectral density: identity | anisotropic"),
            scalar_key("spectrum_strength", &C::spectrum_strength, "anisotropy strength s in I + s M"),
            scalar_key("spectrum_seed", &C::spectrum_seed, "seed of the anisotropy matrix M"),
            scalar_key("kernel", &C::kernel, "moving-average kernel: gaussian | tent | indicator"),
            scalar_key("kernel_width", &C::kernel_width, "moving-average kernel width"),
            scalar_key("radius", &C::radius, "moving-average kernel radius R (R < L/4)"),
            scalar_key("noise", &C::noise, "moving-average noise: rademacher | normal"),
            scalar_key("samples", &C::samples, "ensemble size N"),
            scalar_key("seed", &C::seed, "ensemble seed"),
            scalar_key("potential", &C::potential, "zero | gaussian-beta | gaussian-scalar | power-scalar"),
            scalar_key("amplitude", &C::amplitude, "potential amplitude A"),
            scalar_key("potential_width", &C::potential_width, "Gaussian potential width w"),
            scalar_key("power", &C::power, "power-scalar exponent p"),
            scalar_key("rho", &C::rho, "declared potential decay rate rho > 5"),
            scalar_key("delta", &C::delta, "weight offset delta with 5 + delta < rho"),
            scalar_key("t_start", &C::t_start, "first time of the time grid"),
            scalar_key("t_max", &C::t_max, "last time of the time grid (< L/2)"),
            scalar_key("t_step", &C::t_step, "spacing of the time grid"),
        };
        KeyDef probes;
        probes.name = "probes";
        probes.help = "probe functions, ';'-separated: kind=site|gaussian spin=.. amp=.. at=x,y,z width=.. cutoff=..";
        probes.set = [](C& c, const std::string& v) { c.probes = parse_probes(v); };
        probes.get = [](const C& c) { return json(format_probes(c.probes)); };
        t.push_back(probes);
        KeyDef modes;
        modes.name = "modes";
        modes.help = "probe wavevector indices, ';'-separated triples jx,jy,jz";
        modes.set = [](C& c, const std::string& v) { c.modes = parse_modes("modes", v); };
        modes.get = [](const C& c) { return json(format_modes(c.modes)); };
        t.push_back(modes);
        const std::vector<KeyDef> rest{
            list_key("fixed_point_times", &C::fixed_point_times, "times of the identity fixed-point check"),
            list_key("average_times", &C::average_times, "horizons T of the time-average law"),
            scalar_key("envelope_step", &C::envelope_step, "sampling step of the envelope over [T, 2T]"),
            scalar_key("algebra_points", &C::algebra_points, "random wavevectors in the algebra suite"),
            scalar_key("sigma", &C::sigma, "decay weight <x>^-sigma (sigma > 5/2)"),
            scalar_key("wave_t_max", &C::wave_t_max, "Cook integral cutoff (< L/2; 0 means t_max)"),
            scalar_key("dtau", &C::dtau, "Cook quadrature step"),
            scalar_key("fit_t0", &C::fit_t0, "start of the slope-fit window"),
            scalar_key("fit_t1", &C::fit_t1, "end of the slope-fit window"),
            scalar_key("direct_samples", &C::direct_samples, "samples evolved directly (cross-checks, uniform bound)"),
            scalar_key("gap_margin", &C::gap_margin, "refuse eigenvalues this close to +-m"),
            scalar_key("spectral_subspace", &C::spectral_subspace, "eigen-solver subspace size"),
            scalar_key("spectral_degree", &C::spectral_degree, "eigen-solver Chebyshev degree"),
            scalar_key("spectral_max_grid", &C::spectral_max_grid, "largest n the eigen-solver accepts"),
            scalar_key("spectral_tol", &C::spectral_tol, "eigenpair residual target"),
            scalar_key("algebra_tol", &C::algebra_tol, "tolerance of the P and G identities"),
            scalar_key("fixed_point_tol", &C::fixed_point_tol, "tolerance of the identity fixed point"),
            scalar_key("average_slope", &C::average_slope, "target slope of the time-average law"),
            scalar_key("average_slope_tol", &C::average_slope_tol, "allowed slope deviation"),
            scalar_key("se_factor", &C::se_factor, "standard errors allowed in Monte Carlo comparisons"),
            scalar_key("entry_fraction", &C::entry_fraction, "fraction of spectrum entries that must agree"),
            scalar_key("char_tol", &C::char_tol, "slack added to se_factor/sqrt(N) for characteristic functionals"),
            scalar_key("kurtosis_ratio", &C::kurtosis_ratio, "required drop of |kappa_4| over the time grid"),
            scalar_key("kurtosis_probe", &C::kurtosis_probe, "probe index of the kurtosis check"),
            scalar_key("decay_slope_min", &C::decay_slope_min, "lower end of the decay slope band"),
            scalar_key("decay_slope_max", &C::decay_slope_max, "upper end of the decay slope band"),
            scalar_key("integrand_slope_max", &C::integrand_slope_max, "largest accepted Cook integrand slope"),
            scalar_key("remainder_slope_max", &C::remainder_slope_max, "largest accepted remainder slope"),
            scalar_key("quadrature_tol", &C::quadrature_tol, "step-halving tolerance of the Cook integral"),
            scalar_key("collapse_tol", &C::collapse_tol, "tolerance of the V = 0 collapse"),
            scalar_key("dual_tol", &C::dual_tol, "tolerance of dual-route against direct pairings"),
            scalar_key("residual_tol", &C::residual_tol, "bound-state residual tolerance"),
            scalar_key("resolvent_tol", &C::resolvent_tol, "resolvent identity tolerance"),
            scalar_key("uniform_cap", &C::uniform_cap, "cap of the uniform bound relative to t = t_start"),
            scalar_key("uniform_transient", &C::uniform_transient, "transient excluded from the trend test"),
            scalar_key("out", &C::out, "output directory"),
            scalar_key("field_encoding", &C::field_encoding, "field dumps: binary | csv"),
            scalar_key("dump_samples", &C::dump_samples, "ensemble samples dumped as fields"),
        };
        t.insert(t.end(), rest.begin(), rest.end());
        return t;
    }();
    return table;
}

const KeyDef* find_key(const std::string& name)
{
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

std::vector<std::size_t> mode_sites(const PeriodicGrid& g, const std::vector<std::array<int, 3>>& modes)
{
    std::vector<std::size_t> out;
    for (const auto& m : modes) out.push_back(g.index(m[0], m[1], m[2]));
    return out;
}

std::string mode_label(const std::array<int, 3>& m)
{
    return "(" + std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]) + ")";
}

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ExperimentReport start_report(const std::string& name, const ExperimentConfig& cfg)
{
    ExperimentReport r;
    r.experiment = name;
    r.config = cfg.to_json();
    return r;
}

LatticePotential configured_potential(const ExperimentConfig& cfg)
{
    return build_potential(cfg.grid(), cfg.profile(), cfg.rho);
}

// The decomposition to use with V: the caller's, a fresh one, or none for V = 0
// (the free lattice has no gap eigenvalues).
const SpectralDecomposition* resolve_decomposition(const ExperimentConfig& cfg, const LatticePotential& V,
                                                   const SpectralDecomposition* given,
                                                   std::optional<SpectralDecomposition>& storage)
{
    if (given) {
        require_same_grid(given->grid, V.grid, "experiment decomposition");
        return given;
    }
    if (V.is_zero()) return nullptr;
    storage = spectral_decompose(V, cfg.mass, cfg.spectral_options());
    return &*storage;
}

void record_decomposition(ExperimentReport& rep, const SpectralDecomposition* d)
{
    json j;
    j["bound_states"] = d ? d->bound_states.size() : 0;
    j["computed"] = d != nullptr;
    if (d) {
        j["iterations"] = d->iterations;
        j["subspace"] = d->subspace;
        j["min_threshold_distance"] = d->min_threshold_distance();
        j["max_residual"] = d->max_residual();
        json omegas = json::array();
        for (const auto& b : d->bound_states) omegas.push_back(b.omega);
        j["omegas"] = omegas;
    }
    rep.results["spectral_decomposition"] = j;
}

std::vector<TestFunction> configured_probes(const ExperimentConfig& cfg, std::size_t at_least)
{
    if (cfg.probes.size() < at_least)
        throw ConfigError("config key 'probes': this experiment needs at least " + std::to_string(at_least) +
                          " probe(s)");
    std::vector<TestFunction> out;
    for (const auto& p : cfg.probes) out.push_back(make_probe(cfg.grid(), p));
    return out;
}

template <class Derived>
double max_entry(const Eigen::MatrixBase<Derived>& m)
{
    return m.cwiseAbs().maxCoeff();
}

WaveOperatorOptions cook_options(const ExperimentConfig& cfg)
{
    WaveOperatorOptions opt;
    opt.t_max = cfg.cook_t_max();
    opt.dtau = cfg.dtau;
    opt.tolerance = cfg.quadrature_tol;
    opt.fit_t0 = cfg.fit_t0;
    opt.fit_t1 = cfg.fit_t1;
    opt.slope_threshold = cfg.integrand_slope_max;
    if (cfg.fit_t1 > opt.t_max + 1e-12) throw ConfigError("config key 'fit_t1': must not exceed the Cook cutoff");
    return opt;
}

// Least-squares slope of log y against log(1 + t) over t0 <= t <= t1.
LineFit window_fit(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1)
{
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12 && y[i] > 0.0) {
            xs.push_back(1.0 + t[i]);
            ys.push_back(y[i]);
        }
    return fit_loglog(xs, ys);
}

}  // namespace

// ---------------------------------------------------------------------------
// probes

std::vector<ProbeSpec> parse_probes(const std::string& text)
{
    std::vector<ProbeSpec> out;
    for (const auto& chunk : split(text, ';')) {
        if (chunk.empty()) continue;
        ProbeSpec p;
        p.name = "probe" + std::to_string(out.size());
        std::istringstream words(chunk);
        std::string word;
        const std::string where = "probe " + std::to_string(out.size());
        while (words >> word) {
            const auto eq = word.find('=');
            if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + word + "'");
            const std::string key = word.substr(0, eq), value = word.substr(eq + 1);
            if (key == "kind") p.kind = value;
            else if (key == "spin") p.spin = value;
            else if (key == "name") p.name = value;
            else if (key == "amp") p.amplitude = parse_number<double>(where + " amp", value);
            else if (key == "width") p.width = parse_number<double>(where + " width", value);
            else if (key == "cutoff") p.cutoff = parse_number<double>(where + " cutoff", value);
            else if (key == "at") {
                const auto xyz = split(value, ',');
                if (xyz.size() != 3) throw ConfigError(where + ": 'at' needs three coordinates");
                for (int i = 0; i < 3; ++i) p.center[i] = parse_number<double>(where + " at", xyz[i]);
            } else {
                throw ConfigError(where + ": unknown key '" + key + "'");
            }
        }
        if (p.kind != "site" && p.kind != "gaussian")
            throw ConfigError(where + ": kind must be site or gaussian, got '" + p.kind + "'");
        try {
            spin_orientation(p.spin);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (!(p.width > 0.0)) throw ConfigError(where + ": width must be positive");
        if (!(p.cutoff > 0.0)) throw ConfigError(where + ": cutoff must be positive");
        out.push_back(p);
    }
    return out;
}

std::string format_probes(const std::vector<ProbeSpec>& probes)
{
    std::string s;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto& p = probes[i];
        if (i) s += "; ";
        s += "name=" + p.name + " kind=" + p.kind + " spin=" + p.spin + " amp=" + shortest(p.amplitude) +
             " at=" + shortest(p.center.x()) + "," + shortest(p.center.y()) + "," + shortest(p.center.z());
        if (p.kind == "gaussian") s += " width=" + shortest(p.width) + " cutoff=" + shortest(p.cutoff);
    }
    return s;
}

TestFunction make_probe(const PeriodicGrid& grid, const ProbeSpec& spec)
{
    const Spinor4 spin = spin_orientation(spec.spin);
    TestFunction f = spec.kind == "site" ? site_bump(grid, spec.center, spin, spec.amplitude)
                                         : gaussian_bump(grid, spec.center, spec.width, spec.cutoff, spin,
                                                         spec.amplitude);
    f.name = spec.name;
    return f;
}

// ---------------------------------------------------------------------------
// configuration

std::vector<double> ExperimentConfig::times() const
{
    const int count = static_cast<int>(std::llround((t_max - t_start) / t_step));
    std::vector<double> out;
    for (int i = 0; i <= count; ++i) out.push_back(t_start + i * t_step);
    return out;
}

PotentialProfile ExperimentConfig::profile() const
{
    PotentialProfile p;
    p.kind = parse_profile_kind(potential);
    p.amplitude = amplitude;
    p.width = potential_width;
    p.power = power;
    return p;
}

SpectralOptions ExperimentConfig::spectral_options() const
{
    SpectralOptions o;
    o.gap_margin = gap_margin;
    o.subspace = spectral_subspace;
    o.degree = spectral_degree;
    o.max_grid = spectral_max_grid;
    o.tolerance = spectral_tol;
    return o;
}

FieldEncoding ExperimentConfig::encoding() const
{
    return field_encoding == "csv" ? FieldEncoding::csv : FieldEncoding::binary;
}

void ExperimentConfig::validate() const
{
    require(n >= 4, "n", "must be at least 4");
    require(L > 0.0, "L", "must be positive");
    require(mass > 0.0, "mass", "must be positive");
    require(dt > 0.0, "dt", "must be positive");
    require(sampler == "gaussian" || sampler == "moving-average", "sampler",
            "must be gaussian or moving-average, got '" + sampler + "'");
    require(spectrum == "identity" || spectrum == "anisotropic", "spectrum",
            "must be identity or anisotropic, got '" + spectrum + "'");
    require(spectrum_strength >= 0.0, "spectrum_strength", "must be nonnegative");
    try {
        parse_kernel_shape(kernel);
    } catch (const Error& e) {
        throw ConfigError(std::string("config key 'kernel': ") + e.what());
    }
    try {
        parse_noise_kind(noise);
    } catch (const Error& e) {
        throw ConfigError(std::string("config key 'noise': ") + e.what());
    }
    require(kernel_width > 0.0, "kernel_width", "must be positive");
    require(radius >= 0.0, "radius", "must be nonnegative");
    if (sampler == "moving-average")
        require(radius < L / 4.0, "radius", "R = " + shortest(radius) + " must stay below L/4 = " + shortest(L / 4.0));
    require(samples >= 2, "samples", "must be at least 2");
    require(direct_samples <= samples, "direct_samples", "cannot exceed samples");
    try {
        parse_profile_kind(potential);
    } catch (const Error& e) {
        throw ConfigError(std::string("config key 'potential': ") + e.what());
    }
    require(potential_width > 0.0, "potential_width", "must be positive");
    require(power > 0.0, "power", "must be positive");
    require(rho > 5.0, "rho", "declared decay rate must exceed 5, got " + shortest(rho));
    require(delta > 0.0, "delta", "must be positive");
    require(5.0 + delta < rho, "delta", "5 + delta = " + shortest(5.0 + delta) + " must stay below rho = " + shortest(rho));
    require(t_start >= 0.0, "t_start", "must be nonnegative");
    require(t_step > 0.0, "t_step", "must be positive");
    require(t_max >= t_start, "t_max", "must not precede t_start");
    require(t_max < L / 2.0, "t_max", "t_max = " + shortest(t_max) + " must stay below L/2 = " + shortest(L / 2.0));
    {
        const double ratio = (t_max - t_start) / t_step;
        require(std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio), "t_step",
                "must divide t_max - t_start");
    }
    require(sigma > 2.5, "sigma", "weight exponent must exceed 5/2, got " + shortest(sigma));
    require(wave_t_max >= 0.0 && wave_t_max < L / 2.0, "wave_t_max",
            "must lie in [0, L/2) = [0, " + shortest(L / 2.0) + ")");
    require(dtau > 0.0, "dtau", "must be positive");
    require(fit_t0 >= 0.0 && fit_t0 < fit_t1, "fit_t0", "needs 0 <= fit_t0 < fit_t1");
    require(envelope_step > 0.0, "envelope_step", "must be positive");
    require(algebra_points >= 1, "algebra_points", "must be at least 1");
    for (double t : fixed_point_times) require(std::isfinite(t), "fixed_point_times", "must be finite");
    require(average_times.size() >= 2, "average_times", "needs at least two horizons");
    for (std::size_t i = 0; i < average_times.size(); ++i) {
        require(average_times[i] > 0.0, "average_times", "horizons must be positive");
        if (i) require(average_times[i] > average_times[i - 1], "average_times", "must increase");
    }
    require(!modes.empty(), "modes", "needs at least one wavevector");
    require(gap_margin >= 0.0, "gap_margin", "must be nonnegative");
    require(spectral_subspace >= 2, "spectral_subspace", "must be at least 2");
    require(spectral_degree >= 1, "spectral_degree", "must be at least 1");
    require(spectral_max_grid >= 1, "spectral_max_grid", "must be at least 1");
    require(spectral_tol > 0.0, "spectral_tol", "must be positive");
    require(se_factor > 0.0, "se_factor", "must be positive");
    require(entry_fraction > 0.0 && entry_fraction <= 1.0, "entry_fraction", "must lie in (0, 1]");
    require(char_tol >= 0.0, "char_tol", "must be nonnegative");
    require(kurtosis_ratio > 0.0, "kurtosis_ratio", "must be positive");
    require(kurtosis_probe >= 0 && (probes.empty() || kurtosis_probe < static_cast<int>(probes.size())),
            "kurtosis_probe", "must index a configured probe");
    require(decay_slope_min < decay_slope_max, "decay_slope_min", "must be below decay_slope_max");
    for (auto [key, v] : {std::pair{"algebra_tol", algebra_tol}, {"fixed_point_tol", fixed_point_tol},
                          {"quadrature_tol", quadrature_tol}, {"collapse_tol", collapse_tol},
                          {"dual_tol", dual_tol}, {"residual_tol", residual_tol},
                          {"resolvent_tol", resolvent_tol}, {"average_slope_tol", average_slope_tol}})
        require(v > 0.0, key, "must be positive");
    require(uniform_cap > 0.0, "uniform_cap", "must be positive");
    require(uniform_transient >= 0.0, "uniform_transient", "must be nonnegative");
    require(field_encoding == "binary" || field_encoding == "csv", "field_encoding", "must be binary or csv");
}

json ExperimentConfig::to_json() const
{
    json j = json::object();
    for (const auto& k : key_table()) j[k.name] = k.get(*this);
    return j;
}

const std::vector<ConfigKey>& config_schema()
{
    static const std::vector<ConfigKey> schema = [] {
        std::vector<ConfigKey> out;
        for (const auto& k : key_table()) out.push_back({k.name, k.help});
        return out;
    }();
    return schema;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    const KeyDef* def = find_key(key);
    if (!def) throw ConfigError("unknown config key '" + key + "'");
    def->set(cfg, value);
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    ExperimentConfig cfg;
    for (const auto& [key, node] : tree) {
        if (!node.empty()) throw ConfigError(origin + ": sections are not supported ([" + key + "])");
        try {
            set_config_value(cfg, key, node.data());
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in, path);
}

std::shared_ptr<const Sampler> make_sampler(const ExperimentConfig& cfg)
{
    const PeriodicGrid g = cfg.grid();
    if (cfg.sampler == "moving-average") {
        MovingAverageSpec spec;
        spec.shape = parse_kernel_shape(cfg.kernel);
        spec.width = cfg.kernel_width;
        spec.radius = cfg.radius;
        spec.noise = parse_noise_kind(cfg.noise);
        return std::make_shared<MovingAverageSampler>(g, spec);
    }
    if (cfg.sampler != "gaussian") throw ConfigError("config key 'sampler': unknown sampler '" + cfg.sampler + "'");
    auto q0 = cfg.spectrum == "identity" ? CovarianceSpectrum::identity(g)
                                         : CovarianceSpectrum::anisotropic(g, cfg.spectrum_strength, cfg.spectrum_seed);
    return std::make_shared<GaussianSampler>(std::move(q0));
}

// ---------------------------------------------------------------------------
// reports

bool ExperimentReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Check& ExperimentReport::check(int criterion, std::string name, bool ok, double value, std::string requirement)
{
    checks.push_back({criterion, std::move(name), ok, value, std::move(requirement)});
    return checks.back();
}

Table& ExperimentReport::table(std::string name, std::vector<std::string> columns)
{
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
}

json ExperimentReport::reproducible_json() const
{
    json j;
    j["experiment"] = experiment;
    j["passed"] = passed();
    j["config"] = config;
    j["versions"] = version_info();
    j["results"] = results;
    json cs = json::array();
    for (const auto& c : checks)
        cs.push_back({{"criterion", c.criterion},
                      {"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"requirement", c.requirement}});
    j["checks"] = cs;
    json ts = json::object();
    for (const auto& t : tables) ts[t.name] = {{"columns", t.columns}, {"rows", t.rows}};
    j["tables"] = ts;
    json fs = json::array();
    for (const auto& f : fields) fs.push_back(f.name);
    j["fields"] = fs;
    return j;
}

json ExperimentReport::to_json() const
{
    json j = reproducible_json();
    j["wall_time"] = wall_time;
    return j;
}

void write_table_csv(std::ostream& out, const Table& t)
{
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (row[i].is_string()) {
                const auto s = row[i].get<std::string>();
                if (s.find_first_of(",\"") != std::string::npos) out << json(s).dump();
                else out << s;
            } else {
                out << row[i].dump();
            }
        }
        out << '\n';
    }
}

void ExperimentReport::write(const std::string& dir, FieldEncoding encoding) const
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "report.json");
        out << to_json().dump(2) << '\n';
        if (!out) throw Error("cannot write report.json in " + dir);
    }
    for (const auto& t : tables) {
        std::ofstream out(fs::path(dir) / (t.name + ".csv"));
        write_table_csv(out, t);
        if (!out) throw Error("cannot write " + t.name + ".csv in " + dir);
    }
    for (const auto& f : fields) save_field((fs::path(dir) / (f.name + ".field")).string(), f.field, encoding);
}

json version_info()
{
    return {{"diraclab", DIRACLAB_VERSION},
            {"rng", std::string(rng_version)},
            {"fftw", std::string(fftw_version)},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"compiler", __VERSION__}};
}

SpectralDecomposition decompose(const ExperimentConfig& cfg)
{
    return spectral_decompose(configured_potential(cfg), cfg.mass, cfg.spectral_options());
}

// ---------------------------------------------------------------------------
// drivers

ExperimentReport cmd_check_algebra(const ExperimentConfig& cfg)
{
    Stopwatch clock;
    auto rep = start_report("check-algebra", cfg);
    const auto dirac = build_dirac_matrices(cfg.mass);
    const auto lambdas = build_lambda_set();

    double clifford = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const Mat4 anti = dirac[a] * dirac[b] + dirac[b] * dirac[a];
            const Mat4 expect = (a == b ? 2.0 : 0.0) * Mat4::Identity();
            clifford = std::max(clifford, max_entry(anti - expect));
        }

    double lambda_sym = 0.0;
    const RMat8 I8 = RMat8::Identity();
    for (int a = 0; a < 3; ++a) {
        lambda_sym = std::max(lambda_sym, (lambdas.lambda[a] - lambdas.lambda[a].transpose()).cwiseAbs().maxCoeff());
        lambda_sym = std::max(lambda_sym, (lambdas.lambda[a] * lambdas.lambda0 + lambdas.lambda0 * lambdas.lambda[a])
                                              .cwiseAbs()
                                              .maxCoeff());
        for (int b = 0; b < 3; ++b) {
            const RMat8 anti = lambdas.lambda[a] * lambdas.lambda[b] + lambdas.lambda[b] * lambdas.lambda[a];
            lambda_sym = std::max(lambda_sym, (anti - (a == b ? 2.0 : 0.0) * I8).cwiseAbs().maxCoeff());
        }
        lambda_sym = std::max(lambda_sym, (lambdas.lambda[a] - realify_operator(dirac.alpha[a])).cwiseAbs().maxCoeff());
    }
    lambda_sym = std::max(lambda_sym, (lambdas.lambda0 + lambdas.lambda0.transpose()).cwiseAbs().maxCoeff());
    lambda_sym = std::max(lambda_sym, (lambdas.lambda0 * lambdas.lambda0 + I8).cwiseAbs().maxCoeff());

    RandomStream rng(cfg.seed, 0);
    const auto uniform = [&] { return static_cast<double>(rng.bits() >> 11) * 0x1.0p-53; };
    double anti_herm = 0.0, square = 0.0, unitary = 0.0;
    auto& pts = rep.table("algebra_points", {"kx", "ky", "kz", "t", "anti_hermitian", "square", "unitary"});
    for (int i = 0; i < cfg.algebra_points; ++i) {
        const double pi = 3.14159265358979323846;
        const Vec3 k(pi * (2.0 * uniform() - 1.0), pi * (2.0 * uniform() - 1.0), pi * (2.0 * uniform() - 1.0));
        const double t = 20.0 * uniform();
        const double w = omega(k, cfg.mass);
        const Mat8 P = symbol_P(lambdas, k, cfg.mass);
        const Mat8 G = symbol_G(lambdas, k, cfg.mass, t);
        const double a = max_entry(P + P.adjoint());
        const double s = max_entry(P * P + w * w * Mat8::Identity());
        const double u = max_entry(G * G.adjoint() - Mat8::Identity());
        anti_herm = std::max(anti_herm, a);
        square = std::max(square, s);
        unitary = std::max(unitary, u);
        pts.rows.push_back({k.x(), k.y(), k.z(), t, a, s, u});
    }

    auto& summary = rep.table("algebra", {"check", "max_deviation", "tolerance"});
    summary.rows.push_back({"clifford", clifford, 0.0});
    summary.rows.push_back({"lambda_symmetries", lambda_sym, 0.0});
    summary.rows.push_back({"P_anti_hermitian", anti_herm, cfg.algebra_tol});
    summary.rows.push_back({"P_squared", square, cfg.algebra_tol});
    summary.rows.push_back({"G_unitary", unitary, cfg.algebra_tol});

    rep.check(1, "Clifford relations {alpha_a, alpha_b} = 2 delta_ab", clifford == 0.0, clifford, "exact (0)");
    rep.check(1, "Lambda symmetries and relations", lambda_sym == 0.0, lambda_sym, "exact (0)");
    rep.check(1, "P(k)^* = -P(k)", anti_herm <= cfg.algebra_tol, anti_herm, "<= " + shortest(cfg.algebra_tol));
    rep.check(1, "P(k)^2 = -omega^2 I", square <= cfg.algebra_tol, square, "<= " + shortest(cfg.algebra_tol));
    rep.check(1, "G_t(k) unitary", unitary <= cfg.algebra_tol, unitary, "<= " + shortest(cfg.algebra_tol));
    rep.results["points"] = cfg.algebra_points;
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_covariance(const ExperimentConfig& cfg)
{
    Stopwatch clock;
    auto rep = start_report("covariance", cfg);
    const PeriodicGrid g = cfg.grid();

    // Identity fixed point.
    const auto id = CovarianceSpectrum::identity(g);
    auto& fixed = rep.table("fixed_point", {"t", "max_deviation"});
    double worst = 0.0;
    for (double t : cfg.fixed_point_times) {
        const double d = qhat_evolve(id, cfg.mass, t).max_abs_difference(id);
        fixed.rows.push_back({t, d});
        worst = std::max(worst, d);
    }
    const double lim = qhat_limit(id, cfg.mass).max_abs_difference(id);
    fixed.rows.push_back({"limit", lim});
    rep.check(2, "qhat_evolve(I, t) = I", worst <= cfg.fixed_point_tol, worst, "<= " + shortest(cfg.fixed_point_tol));
    rep.check(2, "qhat_limit(I) = I", lim <= cfg.fixed_point_tol, lim, "<= " + shortest(cfg.fixed_point_tol));

    // Time-average law for the configured spectrum. The discrepancy carries an
    // oscillating factor in 2 omega T; its envelope max over [T, 2T] is fitted.
    const auto q0 = make_sampler(cfg)->covariance();
    auto& avg = rep.table("time_average", {"mode", "omega", "T", "discrepancy", "envelope"});
    auto& slopes = rep.table("time_average_slopes", {"mode", "omega", "envelope_slope", "raw_slope", "residual"});
    double largest = 0.0;
    std::vector<LineFit> fits;
    for (const auto& m : cfg.modes) {
        const std::size_t site = g.index(m[0], m[1], m[2]);
        const Vec3 k = g.symbol_wavevector(site);
        const Mat8 limit = qhat_limit_mode(q0[site], k, cfg.mass);
        const auto discrepancy = [&](double T) {
            return (qhat_time_average_mode(q0[site], k, cfg.mass, 0.0, T) - limit).norm();
        };
        std::vector<double> raw, env;
        for (double T : cfg.average_times) {
            double e = 0.0;
            const int steps = static_cast<int>(std::ceil(T / cfg.envelope_step));
            for (int i = 0; i <= steps; ++i) e = std::max(e, discrepancy(T + T * i / steps));
            raw.push_back(discrepancy(T));
            env.push_back(e);
            largest = std::max(largest, e);
            avg.rows.push_back({mode_label(m), omega(k, cfg.mass), T, raw.back(), e});
        }
        if (env.front() > 1e-12) {
            const auto fe = fit_loglog(cfg.average_times, env);
            const auto fr = fit_loglog(cfg.average_times, raw);
            fits.push_back(fe);
            slopes.rows.push_back({mode_label(m), omega(k, cfg.mass), fe.slope, fr.slope, fe.residual});
        }
    }
    const std::string band = shortest(cfg.average_slope) + " +- " + shortest(cfg.average_slope_tol);
    if (largest <= 1e-12) {
        rep.check(3, "stationary spectrum: time average equals the limit", true, largest, "discrepancy <= 1e-12");
    } else {
        for (std::size_t i = 0; i < fits.size(); ++i)
            rep.check(3, "time-average envelope slope at mode " + slopes.rows[i][0].get<std::string>(),
                      std::abs(fits[i].slope - cfg.average_slope) <= cfg.average_slope_tol, fits[i].slope, band);
        if (fits.size() < cfg.modes.size())
            rep.check(3, "every probe mode moves under the dynamics", false, double(fits.size()),
                      "= " + std::to_string(cfg.modes.size()));
    }
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_sample(const ExperimentConfig& cfg)
{
    Stopwatch clock;
    auto rep = start_report("sample", cfg);
    const PeriodicGrid g = cfg.grid();
    const auto sampler = make_sampler(cfg);
    const Ensemble ens(sampler, cfg.samples, cfg.seed);
    const double t = cfg.t_max;
    const auto u = std::make_shared<FreePropagator>(g, cfg.mass, t);
    const auto evolved = ens.transformed([u](const RealSpinorField& r) { return u->apply_real(r); },
                                         "U0(" + shortest(t) + ")");
    const auto q0 = sampler->covariance();
    const auto sites = mode_sites(g, cfg.modes);
    const auto est = empirical_spectrum(evolved, sites);

    auto& entries = rep.table("spectrum_entries", {"mode", "i", "j", "estimate_re", "estimate_im", "expected_re",
                                                   "expected_im", "stderr_re", "stderr_im", "within"});
    std::size_t within = 0, total = 0;
    for (std::size_t p = 0; p < sites.size(); ++p) {
        const Mat8 expect = qhat_evolve_mode(q0[sites[p]], g.symbol_wavevector(sites[p]), cfg.mass, t);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const cd e = est[p].estimate(i, j), x = expect(i, j), se = est[p].std_error(i, j);
                const bool ok = std::abs(e.real() - x.real()) <= cfg.se_factor * se.real() + 1e-12 &&
                                std::abs(e.imag() - x.imag()) <= cfg.se_factor * se.imag() + 1e-12;
                within += ok;
                ++total;
                entries.rows.push_back({mode_label(cfg.modes[p]), i, j, e.real(), e.imag(), x.real(), x.imag(),
                                        se.real(), se.imag(), ok});
            }
    }
    const double fraction = double(within) / double(total);
    rep.results["t"] = t;
    rep.results["entries"] = total;
    rep.results["within"] = within;
    rep.results["fraction"] = fraction;
    rep.results["ensemble"] = json::parse(evolved.metadata_json());
    rep.check(4, "empirical spectrum at t within " + shortest(cfg.se_factor) + " standard errors", fraction >= cfg.entry_fraction,
              fraction, ">= " + shortest(cfg.entry_fraction) + " of entries");
    for (std::size_t i = 0; i < std::min(cfg.dump_samples, cfg.samples); ++i) {
        rep.fields.push_back({"sample" + std::to_string(i) + "_initial", ens.sample(i)});
        rep.fields.push_back({"sample" + std::to_string(i) + "_evolved", evolved.sample(i)});
    }
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_free_equilibrium(const ExperimentConfig& cfg)
{
    Stopwatch clock;
    auto rep = start_report("free-equilibrium", cfg);
    const auto sampler = make_sampler(cfg);
    const Ensemble ens(sampler, cfg.samples, cfg.seed);
    const auto probes = configured_probes(cfg, 1);
    const auto times = cfg.times();
    const auto qinf = qhat_limit(sampler->covariance(), cfg.mass);

    // <U0(t) psi0, phi> = <psi0, U0'(t) phi>: evolve each probe once.
    std::vector<RealSpinorField> duals;
    for (const auto& p : probes)
        for (double t : times) duals.push_back(realify(dual_evolve_free(p.field, cfg.mass, t)));
    const auto rows = pairings(ens, duals);

    const double N = double(cfg.samples);
    const double threshold = cfg.se_factor / std::sqrt(N) + cfg.char_tol;
    auto& chf = rep.table("char_functional", {"probe", "t", "estimate_re", "estimate_im", "stderr", "target", "deviation"});
    auto& cum = rep.table("cumulants", {"probe", "t", "variance", "excess_kurtosis", "kurtosis_err", "skewness",
                                        "skewness_err"});
    const std::size_t nt = times.size();
    std::vector<std::vector<CumulantReport>> kappa(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double target = std::exp(-0.5 * quadratic_form(qinf, probes[p].field));
        double final_dev = 0.0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            std::vector<double> col(rows.size());
            for (std::size_t s = 0; s < rows.size(); ++s) col[s] = rows[s][p * nt + ti];
            const auto est = char_functional_from_pairings(col);
            const double dev = std::abs(est.value - target);
            chf.rows.push_back({probes[p].name, times[ti], est.value.real(), est.value.imag(), est.std_error, target, dev});
            const auto c = cumulants(col);
            kappa[p].push_back(c);
            cum.rows.push_back({probes[p].name, times[ti], c.variance, c.excess_kurtosis, c.excess_kurtosis_err,
                                c.skewness, c.skewness_err});
            final_dev = dev;
        }
        rep.check(5, "char functional of " + probes[p].name + " at t = " + shortest(times.back()), final_dev <= threshold,
                  final_dev, "<= " + shortest(cfg.se_factor) + "/sqrt(N) + " + shortest(cfg.char_tol) + " = " + shortest(threshold));
    }
    const auto& kp = kappa[cfg.kurtosis_probe];
    const double k0 = std::abs(kp.front().excess_kurtosis), k1 = std::abs(kp.back().excess_kurtosis);
    const double drop = k1 > 0.0 ? k0 / k1 : INFINITY;
    rep.results["kurtosis_initial"] = kp.front().excess_kurtosis;
    rep.results["kurtosis_final"] = kp.back().excess_kurtosis;
    rep.check(5, "|kappa_4| drop for " + probes[cfg.kurtosis_probe].name, drop >= cfg.kurtosis_ratio,
              std::isfinite(drop) ? drop : 1e300, ">= " + shortest(cfg.kurtosis_ratio));

    // Dual route against direct evolution on a few samples.
    double dual_err = 0.0;
    for (std::size_t s = 0; s < std::min(cfg.direct_samples, cfg.samples); ++s) {
        const auto r0 = ens.sample(s);
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const auto rt = evolve_free_real(r0, cfg.mass, times[ti]);
            for (std::size_t p = 0; p < probes.size(); ++p) {
                const double direct = pairing(rt, probes[p].real());
                const double dual = rows[s][p * nt + ti];
                dual_err = std::max(dual_err, std::abs(direct - dual) / std::max(1.0, std::abs(direct)));
            }
        }
    }
    if (cfg.direct_samples > 0)
        rep.check(5, "dual-route pairings equal direct evolution", dual_err <= cfg.dual_tol, dual_err,
                  "<= " + shortest(cfg.dual_tol));
    rep.results["threshold"] = threshold;
    rep.results["ensemble"] = json::parse(ens.metadata_json());
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_decay(const ExperimentConfig& cfg, const SpectralDecomposition* decomp)
{
    Stopwatch clock;
    auto rep = start_report("decay", cfg);
    const auto V = configured_potential(cfg);
    std::optional<SpectralDecomposition> storage;
    const SpectralDecomposition* d = resolve_decomposition(cfg, V, decomp, storage);
    record_decomposition(rep, d);
    const auto probes = configured_probes(cfg, 1);

    DecayOptions opt;
    opt.sigma = cfg.sigma;
    opt.times = cfg.times();
    opt.dt = cfg.dt;
    const auto report = decay_diagnostic(probes.front().field, V, cfg.mass, d, opt);
    auto& tab = rep.table("decay", {"t", "weighted_norm"});
    for (std::size_t i = 0; i < report.times.size(); ++i) tab.rows.push_back({report.times[i], report.norms[i]});
    rep.results["slope"] = report.fit.slope;
    rep.results["intercept"] = report.fit.intercept;
    rep.results["fit_residual"] = report.fit.residual;
    rep.results["sigma"] = report.sigma;
    rep.results["periodization_ok"] = V.periodization_ok;
    const bool ok = report.fit.slope >= cfg.decay_slope_min && report.fit.slope <= cfg.decay_slope_max;
    rep.check(6, "weighted-norm decay slope", ok, report.fit.slope,
              "in [" + shortest(cfg.decay_slope_min) + ", " + shortest(cfg.decay_slope_max) + "]");
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_waveop(const ExperimentConfig& cfg, const SpectralDecomposition* decomp)
{
    Stopwatch clock;
    auto rep = start_report("waveop", cfg);
    const PeriodicGrid g = cfg.grid();
    const WaveOperatorOptions opt = cook_options(cfg);
    const auto probes = configured_probes(cfg, 1);
    const auto& phi = probes.front();
    const auto times = cfg.times();
    if (times.back() > opt.t_max + 1e-12)
        throw ConfigError("config key 't_max': remainder times must not exceed wave_t_max");
    const auto V = configured_potential(cfg);
    std::optional<SpectralDecomposition> storage;
    const SpectralDecomposition* d = resolve_decomposition(cfg, V, decomp, storage);
    record_decomposition(rep, d);

    const ScatteringSetup setup{&V, cfg.mass, d};
    const auto w = wave_operator(phi, setup, opt);

    auto& integrand = rep.table("integrand", {"tau", "norm"});
    for (std::size_t i = 0; i < w.tau.size(); ++i) integrand.rows.push_back({w.tau[i], w.integrand_norm[i]});

    const auto rs = remainder_series(phi.field, setup, w, times, true);
    const auto rfit = window_fit(rs.times, rs.norms, cfg.fit_t0, cfg.fit_t1);

    // Schur bound at every remainder time, with the configured initial measure.
    const auto sampler = make_sampler(cfg);
    const auto q0 = sampler->covariance();
    const double l1 = l1_norm(to_realspace(q0));
    std::vector<RealSpinorField> rreal;
    for (const auto& r : rs.fields) rreal.push_back(realify(r));
    const Ensemble ens(sampler, cfg.samples, cfg.seed);
    const auto mc = per_sample(ens, [&](std::size_t, const RealSpinorField& psi) {
        std::vector<double> v;
        for (const auto& r : rreal) {
            const double p = pairing(psi, r);
            v.push_back(p * p);
        }
        return v;
    });
    const auto mc_stats = column_stats(mc);
    auto& rem = rep.table("remainder", {"t", "norm", "pairing_exact", "pairing_bound", "pairing_mc", "pairing_mc_stderr"});
    bool schur = true;
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < rs.times.size(); ++i) {
        const auto b = mean_square_pairing_bound(q0, l1, rs.fields[i]);
        schur = schur && b.holds();
        if (b.bound > 0.0) worst_ratio = std::max(worst_ratio, b.exact / b.bound);
        rem.rows.push_back({rs.times[i], rs.norms[i], b.exact, b.bound, mc_stats[i].mean, mc_stats[i].std_error});
    }

    // V = 0 collapse on the same grid and probe.
    const auto V0 = build_potential(g, PotentialProfile{}, cfg.rho);
    const ScatteringSetup free_setup{&V0, cfg.mass, nullptr};
    const auto w0 = wave_operator(phi, free_setup, opt);
    const auto rs0 = remainder_series(phi.field, free_setup, w0, times);
    const double collapse_w = max_abs_difference(w0.w_phi, phi.field);
    const double collapse_r = *std::max_element(rs0.norms.begin(), rs0.norms.end());
    const double free_functional = std::exp(-0.5 * quadratic_form(qhat_limit(q0, cfg.mass), phi.field));
    const double collapse_f = std::abs(limit_functional(w0, q0, cfg.mass) - free_functional);

    rep.results["t_max"] = w.t_max;
    rep.results["dtau"] = w.dtau;
    rep.results["dt"] = w.dt;
    rep.results["tail_bound"] = w.tail_bound;
    rep.results["c_fit"] = w.c_fit;
    rep.results["quadrature_error"] = w.quadrature_error;
    rep.results["integrand_slope"] = w.integrand_fit.slope;
    rep.results["integrand_fit_residual"] = w.integrand_fit.residual;
    rep.results["remainder_slope"] = rfit.slope;
    rep.results["remainder_fit_residual"] = rfit.residual;
    rep.results["norm_phi"] = norm(phi.field);
    rep.results["norm_pc_phi"] = norm(w.pc_phi);
    rep.results["norm_w_phi"] = norm(w.w_phi);
    rep.results["l1_q0"] = l1;
    rep.results["schur_worst_ratio"] = worst_ratio;
    rep.results["limit_functional"] = limit_functional(w, q0, cfg.mass);
    rep.results["collapse"] = {{"w_minus_phi", collapse_w}, {"max_remainder", collapse_r}, {"functional", collapse_f}};

    const std::string win = " over [" + shortest(cfg.fit_t0) + ", " + shortest(cfg.fit_t1) + "]";
    rep.check(7, "Cook integrand slope" + win, w.integrand_fit.slope <= cfg.integrand_slope_max, w.integrand_fit.slope,
              "<= " + shortest(cfg.integrand_slope_max));
    rep.check(7, "remainder slope" + win, rfit.slope <= cfg.remainder_slope_max, rfit.slope,
              "<= " + shortest(cfg.remainder_slope_max));
    rep.check(7, "quadrature step-halving change / ||phi||", w.quadrature_ok, w.quadrature_error,
              "< " + shortest(cfg.quadrature_tol));
    rep.check(7, "Schur bound at every remainder time", schur, worst_ratio, "exact / bound <= 1");
    rep.check(7, "V = 0: W phi = phi", collapse_w <= cfg.collapse_tol, collapse_w, "<= " + shortest(cfg.collapse_tol));
    rep.check(7, "V = 0: r(t) = 0", collapse_r <= cfg.collapse_tol, collapse_r, "<= " + shortest(cfg.collapse_tol));
    rep.check(7, "V = 0: limit functional equals the free one", collapse_f <= cfg.collapse_tol, collapse_f,
              "<= " + shortest(cfg.collapse_tol));
    rep.fields.push_back({"w_phi", realify(w.w_phi)});
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_perturbed_equilibrium(const ExperimentConfig& cfg, const SpectralDecomposition* decomp)
{
    Stopwatch clock;
    auto rep = start_report("perturbed-equilibrium", cfg);
    const WaveOperatorOptions opt = cook_options(cfg);
    const auto probes = configured_probes(cfg, 1);
    const auto times = cfg.times();
    const std::size_t nt = times.size();
    const auto sampler = make_sampler(cfg);
    const auto q0 = sampler->covariance();
    const Ensemble ens(sampler, cfg.samples, cfg.seed);
    const auto V = configured_potential(cfg);
    std::optional<SpectralDecomposition> storage;
    const SpectralDecomposition* d = resolve_decomposition(cfg, V, decomp, storage);
    record_decomposition(rep, d);
    const ScatteringSetup setup{&V, cfg.mass, d};

    // <P_c U(t) psi0, phi> = <psi0, U(-t) P_c phi>; the discrete Strang step
    // satisfies S(dt)^* = S(-dt), so this is the same number as direct evolution.
    std::vector<RealSpinorField> duals;
    std::vector<double> targets;
    auto& wtab = rep.table("wave_operator", {"probe", "norm_phi", "norm_w_phi", "quadrature_error", "tail_bound",
                                             "integrand_slope", "limit_functional"});
    for (const auto& p : probes) {
        const auto w = wave_operator(p, setup, opt);
        targets.push_back(limit_functional(w, q0, cfg.mass));
        wtab.rows.push_back({p.name, norm(p.field), norm(w.w_phi), w.quadrature_error, w.tail_bound,
                             w.integrand_fit.slope, targets.back()});
        rep.check(8, "wave operator quadrature for " + p.name, w.quadrature_ok, w.quadrature_error,
                  "< " + shortest(cfg.quadrature_tol));
        const PerturbedPropagator backward(V, cfg.mass, -cfg.dt);
        ComplexSpinorField chi = setup.project(p.field);
        int done = 0;
        for (double t : times) {
            const int target = step_count(t, cfg.dt);
            backward.advance(chi, target - done);
            done = target;
            duals.push_back(realify(chi));
        }
    }
    const auto rows = pairings(ens, duals);
    const double threshold = cfg.se_factor / std::sqrt(double(cfg.samples)) + cfg.char_tol;
    auto& chf = rep.table("char_functional", {"probe", "t", "estimate_re", "estimate_im", "stderr", "target", "deviation"});
    for (std::size_t p = 0; p < probes.size(); ++p) {
        double final_dev = 0.0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            std::vector<double> col(rows.size());
            for (std::size_t s = 0; s < rows.size(); ++s) col[s] = rows[s][p * nt + ti];
            const auto est = char_functional_from_pairings(col);
            final_dev = std::abs(est.value - targets[p]);
            chf.rows.push_back({probes[p].name, times[ti], est.value.real(), est.value.imag(), est.std_error,
                                targets[p], final_dev});
        }
        rep.check(8, "char functional of " + probes[p].name + " at t = " + shortest(times.back()), final_dev <= threshold,
                  final_dev, "<= " + shortest(cfg.se_factor) + "/sqrt(N) + " + shortest(cfg.char_tol) + " = " + shortest(threshold));
    }

    // Uniform bound E ||P_c U(t) psi0||_{L^2_{-5/2-delta}} on directly evolved samples,
    // which also cross-check the dual-route pairings.
    const std::size_t K = std::min(cfg.direct_samples, cfg.samples);
    const WeightedNormSpec weight{0.0, -(2.5 + cfg.delta)};
    std::vector<std::vector<double>> wn(nt);
    double dual_err = 0.0;
    const PerturbedPropagator forward(V, cfg.mass, cfg.dt);
    for (std::size_t s = 0; s < K; ++s) {
        ComplexSpinorField psi = complexify(ens.sample(s));
        int done = 0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const int target = step_count(times[ti], cfg.dt);
            forward.advance(psi, target - done);
            done = target;
            const ComplexSpinorField pc = setup.project(psi);
            wn[ti].push_back(weighted_norm(pc, weight));
            for (std::size_t p = 0; p < probes.size(); ++p) {
                const double direct = pairing(pc, probes[p].field);
                dual_err = std::max(dual_err, std::abs(direct - rows[s][p * nt + ti]) / std::max(1.0, std::abs(direct)));
            }
        }
    }
    if (K > 0) {
        auto& ub = rep.table("uniform_bound", {"t", "mean", "stderr"});
        const auto stats = column_stats([&] {
            std::vector<std::vector<double>> r(K, std::vector<double>(nt));
            for (std::size_t ti = 0; ti < nt; ++ti)
                for (std::size_t s = 0; s < K; ++s) r[s][ti] = wn[ti][s];
            return r;
        }());
        std::vector<double> ts, means;
        double peak = 0.0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            ub.rows.push_back({times[ti], stats[ti].mean, stats[ti].std_error});
            peak = std::max(peak, stats[ti].mean);
            if (times[ti] >= times.front() + cfg.uniform_transient - 1e-12) {
                ts.push_back(times[ti]);
                means.push_back(stats[ti].mean);
            }
        }
        const double ratio = peak / stats.front().mean;
        rep.check(8, "uniform bound: sup_t mean / mean at t_start", ratio <= cfg.uniform_cap, ratio,
                  "<= " + shortest(cfg.uniform_cap));
        if (ts.size() >= 2) {
            const auto f = fit_line(ts, means);
            const double rise = f.slope * (ts.back() - ts.front());
            const double allowed = cfg.se_factor * stats.back().std_error;
            rep.results["uniform_trend_rise"] = rise;
            rep.check(8, "uniform bound: no upward trend after the transient", rise <= allowed, rise,
                      "<= " + shortest(cfg.se_factor) + " stderr = " + shortest(allowed));
        }
        rep.check(8, "dual-route pairings equal direct evolution", dual_err <= cfg.dual_tol, dual_err,
                  "<= " + shortest(cfg.dual_tol));
    }
    rep.results["threshold"] = threshold;
    rep.results["ensemble"] = json::parse(ens.metadata_json());
    rep.wall_time = clock.seconds();
    return rep;
}

ExperimentReport cmd_spectrum(const ExperimentConfig& cfg)
{
    Stopwatch clock;
    auto rep = start_report("spectrum", cfg);
    const auto V = configured_potential(cfg);
    const auto d = spectral_decompose(V, cfg.mass, cfg.spectral_options());
    record_decomposition(rep, &d);
    rep.results["periodization_ok"] = V.periodization_ok;
    rep.results["boundary_ratio"] = V.boundary_ratio;

    auto& states = rep.table("bound_states", {"index", "omega", "multiplicity", "residual", "resolvent_residual",
                                              "threshold_distance"});
    double worst_res = 0.0, worst_resolvent = 0.0;
    double lowest = INFINITY;
    for (const auto& b : d.bound_states) lowest = std::min(lowest, b.omega);
    for (std::size_t i = 0; i < d.bound_states.size(); ++i) {
        const auto& b = d.bound_states[i];
        const double rr = resolvent_check(b.zeta, b.omega, V, cfg.mass);
        worst_res = std::max(worst_res, b.residual);
        worst_resolvent = std::max(worst_resolvent, rr);
        states.rows.push_back({i, b.omega, b.multiplicity, b.residual, rr, cfg.mass - std::abs(b.omega)});
    }
    rep.check(9, "gap eigenvalues found", !d.bound_states.empty(), double(d.bound_states.size()), ">= 1");
    if (d.bound_states.empty()) {
        rep.wall_time = clock.seconds();
        return rep;
    }
    rep.check(9, "bound-state residual ||H zeta - omega zeta||", worst_res < cfg.residual_tol, worst_res,
              "< " + shortest(cfg.residual_tol));
    rep.check(9, "resolvent identity zeta = R0(omega)(-V zeta)", worst_resolvent < cfg.resolvent_tol, worst_resolvent,
              "< " + shortest(cfg.resolvent_tol));

    // Localization of the ground eigenspace.
    auto& decay = rep.table("eigenfunction_decay", {"index", "omega", "rate", "constant", "fit_residual", "norm_s1",
                                                    "norm_s2", "norm_s3", "norm_s4"});
    auto& shells = rep.table("ground_state_shells", {"radius", "max_abs"});
    bool finite = true;
    double min_rate = INFINITY;
    bool first = true;
    for (std::size_t i = 0; i < d.bound_states.size(); ++i) {
        const auto& b = d.bound_states[i];
        if (b.omega - lowest > 1e-8) continue;
        const auto e = eigenfunction_decay(b.zeta);
        std::vector<json> row{i, b.omega, e.rate, e.constant, e.fit_residual};
        for (double wn : e.weighted_norms) {
            row.push_back(wn);
            finite = finite && std::isfinite(wn) && wn > 0.0;
        }
        decay.rows.push_back(row);
        min_rate = std::min(min_rate, e.rate);
        if (first) {
            for (std::size_t s = 0; s < e.shell_radius.size(); ++s) shells.rows.push_back({e.shell_radius[s], e.shell_max[s]});
            rep.fields.push_back({"zeta" + std::to_string(i), realify(b.zeta)});
            first = false;
        }
    }
    rep.check(9, "weighted norms ||<x>^s zeta||, s = 1..4, finite", finite, finite ? 1.0 : 0.0, "all finite");
    rep.check(9, "exponential decay rate c of the ground state", min_rate > 0.0, min_rate, "> 0");
    rep.wall_time = clock.seconds();
    return rep;
}

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"check-algebra", "covariance", "sample", "free-equilibrium",
                                                "perturbed-equilibrium", "decay", "waveop", "spectrum"};
    return names;
}

ExperimentReport run_experiment(const std::string& command, const ExperimentConfig& cfg)
{
    if (command == "check-algebra") return cmd_check_algebra(cfg);
    if (command == "covariance") return cmd_covariance(cfg);
    if (command == "sample") return cmd_sample(cfg);
    if (command == "free-equilibrium") return cmd_free_equilibrium(cfg);
    if (command == "perturbed-equilibrium") return cmd_perturbed_equilibrium(cfg);
    if (command == "decay") return cmd_decay(cfg);
    if (command == "waveop") return cmd_waveop(cfg);
    if (command == "spectrum") return cmd_spectrum(cfg);
    throw ConfigError("unknown experiment '" + command + "'");
}

}  // namespace diraclab
