#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nesslab/config.hpp"
#include "nesslab/errors.hpp"
#include "nesslab/io.hpp"

using namespace nesslab;

TEST_CASE("toml reader handles tables, scalars, arrays and comments") {
    const std::string text = R"(# run configuration
[run]
out_dir = "runs/demo"   # trailing comment
seed = 42
grids = [16, 32, 64]
quiet = true

[model]
name = "power_law"
alpha = 1.5
q_left = [0.2]
)";
    TomlTable t = parse_toml(text);
    CHECK(t.at("run.out_dir").str == "runs/demo");
    CHECK(t.at("run.seed").num == 42.0);
    REQUIRE(t.at("run.grids").array.size() == 3);
    CHECK(t.at("run.grids").array[1].num == 32.0);
    CHECK(t.at("run.quiet").boolean);
    CHECK(t.at("model.alpha").num == 1.5);
    CHECK(t.at("model.name").line == 9);
}

TEST_CASE("toml reader reports parse problems with line numbers") {
    try {
        parse_toml("[run]\nseed 42\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_toml("[run\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = [1, 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = twelve\n"), ConfigError);
}

TEST_CASE("run config: defaults, overrides and validation") {
    RunConfig dflt = config_from_toml(parse_toml(""));
    CHECK(dflt.model_name == "ssep");
    CHECK(dflt.grids == std::vector<int>{32, 64, 128});

    RunConfig cfg = config_from_toml(parse_toml(R"(
[run]
grids = [8, 16]
seed = 7
[model]
name = "gaussian"
q_left = [0.5]
q_right = [0.5]
[steady]
tol = 1e-9
[simulate]
n_trajectories = 3
scheme = "explicit"
)"));
    CHECK(cfg.grids == std::vector<int>{8, 16});
    CHECK(cfg.seed == 7);
    CHECK(cfg.model_name == "gaussian");
    CHECK(cfg.steady_tol == 1e-9);
    CHECK(cfg.sim_config().n_trajectories == 3);
    CHECK(cfg.sim_config().scheme == Scheme::Explicit);

    CHECK_THROWS_AS(config_from_toml(parse_toml("[run]\ngrids = []\n")), ConfigError);
    CHECK_THROWS_AS(config_from_toml(parse_toml("[model]\nname = \"bogus\"\n")), ConfigError);
    CHECK_THROWS_AS(config_from_toml(parse_toml("[steady]\ntol = -1.0\n")), ConfigError);
    CHECK_THROWS_AS(config_from_toml(parse_toml("[simulate]\nscheme = \"leapfrog\"\n")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_toml(parse_toml("[model]\nwindow_lo = [0.1]\n")), ConfigError);
}

TEST_CASE("config builds every catalog model") {
    RunConfig cfg;
    cfg.model_name = "ssep";
    CHECK(cfg.build_model().n == 1);

    cfg.model_name = "power_law";
    cfg.model_params["alpha"] = 2.0;
    CHECK(cfg.build_model().mobility(Eigen::VectorXd::Constant(1, 0.5))(0, 0) ==
          doctest::Approx(0.25));

    RunConfig two;
    two.model_name = "two_component";
    two.q_left = {0.2, 0.3};
    two.q_right = {0.7, 0.6};
    CHECK(two.build_model().n == 2);

    RunConfig poly;
    poly.model_name = "polynomial";
    poly.model_params["k0"] = 1.0;
    poly.model_params["k1"] = 0.5;
    poly.model_params["s0"] = 0.0;
    poly.model_params["s1"] = 0.0;
    poly.model_params["s2"] = -0.5;
    ModelSpec m = poly.build_model();
    CHECK(m.mobility(Eigen::VectorXd::Constant(1, 0.4))(0, 0) == doctest::Approx(1.2));
    CHECK(m.entropy_hess(Eigen::VectorXd::Constant(1, 0.4))(0, 0) == doctest::Approx(-1.0));

    // window override
    RunConfig win;
    win.window_lo = std::vector<double>{0.1};
    win.window_hi = std::vector<double>{0.9};
    ModelSpec w = win.build_model();
    CHECK(w.domain_window.lo(0) == 0.1);
    CHECK(w.domain_window.hi(0) == 0.9);
}

TEST_CASE("lattice config maps the shared boundary densities") {
    RunConfig cfg;
    cfg.q_left = {0.25};
    cfg.q_right = {0.75};
    cfg.ssep_sites = 42;
    LatticeConfig lc = cfg.lattice_config();
    CHECK(lc.sites == 42);
    CHECK(lc.rho_left == 0.25);
    CHECK(lc.rho_right == 0.75);
}

TEST_CASE("doubles are formatted with 16 significant digits") {
    CHECK(format_double(0.25) == "2.5000000000000000e-01");
    CHECK(format_double(-1.0 / 3.0) == "-3.3333333333333331e-01");
}

TEST_CASE("csv writers produce stable layouts") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    const std::string csv = matrix_csv({0.25, 0.5}, {0.25, 0.5}, m);
    CHECK(csv.find("x,2.5000000000000000e-01,5.0000000000000000e-01\n") == 0);
    CHECK(csv.find("\n2.5000000000000000e-01,1.0000000000000000e+00,2.0000000000000000e+00\n") !=
          std::string::npos);

    Eigen::VectorXd col(2);
    col << 1.0, 2.0;
    const std::string tab = table_csv({"a"}, {col});
    CHECK(tab == "a\n1.0000000000000000e+00\n2.0000000000000000e+00\n");
}

TEST_CASE("atomic write and checksum round-trip") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "nesslab_io_test.txt";
    write_file_atomic(p, "abc");
    // FNV-1a 64 of "abc"
    CHECK(file_checksum(p) == "e71fa2190541574b");
    write_file_atomic(p, "abcd");
    CHECK(file_checksum(p) != "e71fa2190541574b");
    fs::remove(p);
}

TEST_CASE("load_run_config reads a file and rejects missing paths") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "nesslab_cfg_test.toml";
    {
        std::ofstream out(p);
        out << "[run]\nseed = 123\n";
    }
    CHECK(load_run_config(p.string()).seed == 123);
    fs::remove(p);
    CHECK_THROWS_AS(load_run_config(p.string()), ConfigError);
}
