#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diraclab/errors.hpp"
#include "diraclab/experiments.hpp"
#include "diraclab/io.hpp"

using namespace diraclab;

namespace {

ExperimentConfig from_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test");
}

std::string config_error(const std::string& text)
{
    try {
        from_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool mentions(const std::string& message, const std::string& word)
{
    return message.find(word) != std::string::npos;
}

const nlohmann::json& table_rows(const nlohmann::json& report, const std::string& name)
{
    return report.at("tables").at(name).at("rows");
}

}  // namespace

TEST_CASE("config: values, comments and defaults")
{
    const auto cfg = from_text("# lattice\n"
                               "n = 12\n"
                               "L = 24\n"
                               "; ensemble\n"
                               "samples = 50\n"
                               "seed = 18446744073709551615\n"
                               "average_times = 1, 2.5, 7\n"
                               "modes = 1,0,0; 0,-2,3\n"
                               "probes = name=a kind=site spin=x amp=2 at=1,2,3; kind=gaussian spin=y width=1.5 at=0,0,0\n");
    CHECK(cfg.n == 12);
    CHECK(cfg.L == 24.0);
    CHECK(cfg.samples == 50);
    CHECK(cfg.seed == 18446744073709551615ULL);
    CHECK(cfg.average_times == std::vector<double>{1.0, 2.5, 7.0});
    REQUIRE(cfg.modes.size() == 2);
    CHECK(cfg.modes[1] == std::array<int, 3>{0, -2, 3});
    REQUIRE(cfg.probes.size() == 2);
    CHECK(cfg.probes[0].name == "a");
    CHECK(cfg.probes[0].center.z() == 3.0);
    CHECK(cfg.probes[1].name == "probe1");
    CHECK(cfg.probes[1].width == 1.5);
    // untouched keys keep their defaults
    CHECK(cfg.mass == 1.0);
    CHECK(cfg.sigma == 3.0);
}

TEST_CASE("config: malformed input is rejected with the key named")
{
    CHECK(mentions(config_error("bogus = 1\n"), "bogus"));
    CHECK(mentions(config_error("n = 8\nn = 8\n"), "n"));
    CHECK(mentions(config_error("[lattice]\nn = 8\n"), "section"));
    CHECK(mentions(config_error("mass = one\n"), "mass"));
    CHECK(mentions(config_error("mass = 1.0x\n"), "mass"));
    CHECK(mentions(config_error("samples = -3\n"), "samples"));
    CHECK(mentions(config_error("probes = kind=site spin=nowhere\n"), "probe"));
    CHECK(mentions(config_error("probes = kind=disk\n"), "kind"));
    CHECK(mentions(config_error("probes = at=1,2\n"), "at"));
    CHECK(mentions(config_error("modes = 1,2\n"), "modes"));
    CHECK(mentions(config_error("sampler = poisson\n"), "sampler"));
    CHECK(mentions(config_error("potential = square\n"), "potential"));
}

TEST_CASE("config: consistency rules")
{
    // R < L/4 for the moving-average sampler only
    CHECK(mentions(config_error("sampler = moving-average\nn = 16\nL = 16\nradius = 4\n"), "radius"));
    CHECK(config_error("sampler = moving-average\nn = 16\nL = 16\nradius = 3.9\n").empty());
    CHECK(config_error("sampler = gaussian\nn = 16\nL = 16\nradius = 4\n").empty());
    // recurrence window
    CHECK(mentions(config_error("L = 16\nt_max = 8\n"), "t_max"));
    CHECK(config_error("L = 16\nt_max = 7.5\nt_step = 0.5\n").empty());
    CHECK(mentions(config_error("L = 16\nwave_t_max = 8\n"), "wave_t_max"));
    CHECK(mentions(config_error("t_max = 4\nt_step = 1.5\n"), "t_step"));
    // weights
    CHECK(mentions(config_error("sigma = 2.5\n"), "sigma"));
    CHECK(config_error("sigma = 2.51\n").empty());
    CHECK(mentions(config_error("rho = 5\n"), "rho"));
    CHECK(mentions(config_error("rho = 6\ndelta = 1\n"), "delta"));
    CHECK(config_error("rho = 6\ndelta = 0.99\n").empty());
    CHECK(mentions(config_error("fit_t0 = 6\nfit_t1 = 6\n"), "fit_t0"));
    CHECK(mentions(config_error("samples = 4\ndirect_samples = 5\n"), "direct_samples"));
}

TEST_CASE("config: every key round-trips through the JSON echo")
{
    const auto cfg = from_text("n = 10\nL = 10\nkernel_width = 0.3\nprobes = name=p kind=gaussian spin=up-lower amp=0.5 "
                               "width=1.25 cutoff=4 at=-1,0.5,2\nfixed_point_times = 0.1, 0.2\n");
    const auto j = cfg.to_json();
    std::size_t keys = 0;
    for (const auto& k : config_schema()) {
        CHECK_MESSAGE(j.contains(k.name), k.name);
        ++keys;
    }
    CHECK(j.size() == keys);

    // Feeding the echo back reproduces the configuration.
    std::string text;
    for (const auto& [key, value] : j.items()) text += key + " = " + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
    const auto again = from_text(text);
    CHECK(again.to_json() == j);
}

TEST_CASE("probe grammar round trip")
{
    const std::string text = "name=s kind=site spin=down amp=1.5 at=1,-2,3; name=g kind=gaussian spin=x amp=0.25 "
                             "at=0.5,0,0 width=2 cutoff=7";
    const auto probes = parse_probes(text);
    REQUIRE(probes.size() == 2);
    CHECK(format_probes(probes) == text);
    CHECK(format_probes(parse_probes(format_probes(probes))) == text);
    const PeriodicGrid g(16, 16.0);
    const auto site = make_probe(g, probes[0]);
    CHECK(site.name == "s");
    const auto gauss = make_probe(g, probes[1]);
    CHECK(gauss.name == "g");
    CHECK(norm(gauss.field) > 0.0);
    CHECK(parse_probes(" ; ").empty());
}

TEST_CASE("command-line style overrides")
{
    ExperimentConfig cfg;
    set_config_value(cfg, "t_max", "3");
    set_config_value(cfg, "potential", "gaussian-beta");
    CHECK(cfg.t_max == 3.0);
    CHECK(cfg.potential == "gaussian-beta");
    CHECK_THROWS_AS(set_config_value(cfg, "nope", "1"), ConfigError);
    CHECK_THROWS_AS(set_config_value(cfg, "n", "2.5"), ConfigError);
}

TEST_CASE("report: JSON, CSV and field dumps")
{
    ExperimentReport rep;
    rep.experiment = "toy";
    rep.config = ExperimentConfig{}.to_json();
    rep.results["x"] = 0.1;
    auto& a = rep.table("a", {"name", "value"});
    auto& b = rep.table("b", {"t"});
    for (int i = 0; i < 40; ++i) b.rows.push_back({double(i)});
    // a is still valid after more tables were added
    a.rows.push_back({"plain", 1.5});
    a.rows.push_back({"with,comma", 0.1});
    rep.check(3, "ok", true, 1.0, "== 1");
    CHECK(rep.passed());
    rep.check(4, "bad", false, 2.0, "< 1");
    CHECK_FALSE(rep.passed());

    const PeriodicGrid g(4, 4.0);
    RealSpinorField f(g);
    for (std::size_t i = 0; i < f.values().size(); ++i) f.values()[i] = 0.5 * double(i) - 3.0;
    rep.fields.push_back({"dump", f});
    rep.wall_time = 1.25;

    std::ostringstream csv;
    write_table_csv(csv, rep.tables.front());
    CHECK(csv.str() == "name,value\nplain,1.5\n\"with,comma\",0.1\n");

    const auto dir = std::filesystem::temp_directory_path() / "diraclab_report_test";
    std::filesystem::remove_all(dir);
    for (auto enc : {FieldEncoding::binary, FieldEncoding::csv}) {
        rep.write(dir.string(), enc);
        std::ifstream in(dir / "report.json");
        const auto j = nlohmann::json::parse(in);
        CHECK(j.at("experiment") == "toy");
        CHECK(j.at("wall_time") == 1.25);
        CHECK(j.at("passed") == false);
        CHECK(j.at("checks").size() == 2);
        CHECK(j.at("checks")[1].at("criterion") == 4);
        CHECK(table_rows(j, "b").size() == 40);
        CHECK(j.at("versions").contains("rng"));
        CHECK(std::filesystem::exists(dir / "a.csv"));
        CHECK(std::filesystem::exists(dir / "b.csv"));
        const auto back = load_real_field((dir / "dump.field").string());
        CHECK(std::ranges::equal(back.values(), f.values()));
    }
    CHECK_FALSE(rep.reproducible_json().contains("wall_time"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("check-algebra driver")
{
    auto cfg = from_text("algebra_points = 10\n");
    const auto rep = cmd_check_algebra(cfg);
    CHECK(rep.passed());
    for (const auto& c : rep.checks) CHECK(c.criterion == 1);
    CHECK(rep.checks.size() >= 5);
}

TEST_CASE("covariance driver on a stationary spectrum")
{
    auto cfg = from_text("n = 16\nL = 16\nspectrum = identity\n");
    const auto rep = cmd_covariance(cfg);
    CHECK(rep.passed());
}

TEST_CASE("sample driver is reproducible and seed dependent")
{
    const auto cfg = from_text("n = 8\nL = 8\nsamples = 200\nt_max = 2\nt_step = 2\nmodes = 1,0,0; 2,1,0\n");
    const auto a = cmd_sample(cfg).reproducible_json().dump();
    const auto b = cmd_sample(cfg).reproducible_json().dump();
    CHECK(a == b);
    auto other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(cmd_sample(other).reproducible_json().dump() != a);
}

TEST_CASE("perturbed equilibrium with V = 0 reproduces the free one")
{
    const std::string text = "n = 12\nL = 12\nsampler = moving-average\nradius = 2\nsamples = 300\nseed = 3\n"
                             "t_max = 4\nt_step = 2\nfit_t0 = 1\nfit_t1 = 3\ndirect_samples = 2\n"
                             "probes = name=g kind=gaussian spin=x amp=0.3 width=1.5 cutoff=5 at=0,0,0\n";
    const auto cfg = from_text(text);
    const auto free = cmd_free_equilibrium(cfg).reproducible_json();
    const auto pert = cmd_perturbed_equilibrium(cfg).reproducible_json();
    const auto& fr = table_rows(free, "char_functional");
    const auto& pr = table_rows(pert, "char_functional");
    REQUIRE(fr.size() == pr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) {
        CHECK(fr[i][1] == pr[i][1]);
        CHECK(std::abs(fr[i][2].get<double>() - pr[i][2].get<double>()) < 1e-12);
        CHECK(std::abs(fr[i][3].get<double>() - pr[i][3].get<double>()) < 1e-12);
        // W = identity, so both targets are the free limit functional.
        CHECK(std::abs(fr[i][5].get<double>() - pr[i][5].get<double>()) < 1e-12);
    }
    CHECK(pert.at("results").at("spectral_decomposition").at("computed") == false);
}

TEST_CASE("waveop with V = 0 passes every collapse check")
{
    const auto cfg = from_text("n = 16\nL = 16\nsampler = moving-average\nradius = 2\nsamples = 50\n"
                               "t_max = 7\nt_step = 0.5\nfit_t0 = 2\nfit_t1 = 6\n"
                               "probes = kind=gaussian spin=up width=1 cutoff=6 at=0,0,0\n");
    const auto rep = cmd_waveop(cfg);
    for (const auto& c : rep.checks)
        if (mentions(c.name, "V = 0") || mentions(c.name, "Schur") || mentions(c.name, "quadrature"))
            CHECK_MESSAGE(c.passed, c.name);
    CHECK(rep.results.at("norm_w_phi").get<double>() == doctest::Approx(rep.results.at("norm_phi").get<double>()));
}

TEST_CASE("run_experiment dispatch")
{
    CHECK(experiment_names().size() == 8);
    CHECK_THROWS_AS(run_experiment("nonsense", ExperimentConfig{}), ConfigError);
    // A cook window that does not fit the fit range is a config error before any work.
    auto cfg = from_text("t_max = 4\nfit_t1 = 6\n");
    CHECK_THROWS_AS(cmd_waveop(cfg), ConfigError);
}
